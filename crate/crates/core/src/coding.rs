//! Codings as encoder/decoder channel pairs, exact error-correction checks
//! and a few small stabilizer codes.
//!
//! A coding for `Φ` maps `k` logical qubits into `n` physical ones, sends
//! them through `Φ^{⊗n}` and decodes back. Its error is
//! `ε = 1 − F_E(𝟙, D ∘ Φ^{⊗n} ∘ E)`; it works when `ε` is strictly below the
//! bare error `1 − F_E(𝟙, Φ^{⊗k})`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{check_density, QChannel};
use crate::entropic::{entropy, fidelity_with_identity};
use crate::linalg::{partial_trace, pauli, CMatrix, C64};
use crate::{Error, Result};

/// Largest `n + k` accepted by [`coded_channel`].
pub const MAX_CODED_QUBITS: usize = 7;
/// Default absolute tolerance of [`kl_check`].
pub const KL_TOL: f64 = 1e-10;
const ISOMETRY_TOL: f64 = 1e-12;

/// Coding model a scheme is meant for; carried as metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelTag::I => "I",
            ModelTag::II => "II",
            ModelTag::III => "III",
            ModelTag::IV => "IV",
        };
        f.write_str(s)
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" => Ok(ModelTag::I),
            "II" => Ok(ModelTag::II),
            "III" => Ok(ModelTag::III),
            "IV" => Ok(ModelTag::IV),
            _ => Err(Error::Unknown {
                kind: "model tag",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Coding {
    pub encoder: QChannel,
    pub decoder: QChannel,
    pub n: usize,
    pub k: usize,
    pub model_tag: ModelTag,
}

impl Coding {
    pub fn new(
        encoder: QChannel,
        decoder: QChannel,
        n: usize,
        k: usize,
        model_tag: ModelTag,
    ) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Precondition(format!(
                "need 1 <= k <= n, got n={n}, k={k}"
            )));
        }
        if n >= usize::BITS as usize {
            return Err(Error::SizeCap(format!("{n} physical qubits")));
        }
        let (dk, dn) = (1usize << k, 1usize << n);
        if (encoder.d_in(), encoder.d_out()) != (dk, dn)
            || (decoder.d_in(), decoder.d_out()) != (dn, dk)
        {
            return Err(Error::Dimension(format!(
                "encoder {}→{} and decoder {}→{} do not fit n={n}, k={k}",
                encoder.d_in(),
                encoder.d_out(),
                decoder.d_in(),
                decoder.d_out()
            )));
        }
        Ok(Coding {
            encoder,
            decoder,
            n,
            k,
            model_tag,
        })
    }

    /// `n = k = 1` with identity encoder and decoder.
    pub fn trivial() -> Self {
        Coding {
            encoder: QChannel::identity(2),
            decoder: QChannel::identity(2),
            n: 1,
            k: 1,
            model_tag: ModelTag::I,
        }
    }

    /// Isometric encoder plus syndrome decoder of a stabilizer code.
    pub fn from_code(code: &StabCode) -> Result<Self> {
        Coding::new(
            code.encoder()?,
            code.syndrome_decoder()?,
            code.n,
            code.k,
            ModelTag::III,
        )
    }

    /// `k / n`.
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// A code given by its encoding isometry; stabilizer codes also carry the
/// generators used for syndrome decoding.
#[derive(Debug, Clone)]
pub struct StabCode {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub isometry: CMatrix,
    /// Pauli strings generating the stabilizer group (empty if unknown).
    pub stabilizers: Vec<String>,
}

impl StabCode {
    /// Validates `V†V = 𝟙` on a `2^n × 2^k` isometry.
    pub fn from_isometry(name: &str, n: usize, k: usize, isometry: CMatrix) -> Result<Self> {
        if k > n || n > MAX_CODED_QUBITS {
            return Err(Error::Precondition(format!(
                "unsupported code size n={n}, k={k}"
            )));
        }
        if (isometry.rows(), isometry.cols()) != (1 << n, 1 << k) {
            return Err(Error::Dimension(format!(
                "isometry is {}x{}, expected {}x{}",
                isometry.rows(),
                isometry.cols(),
                1 << n,
                1 << k
            )));
        }
        let err = isometry
            .adjoint()
            .matmul(&isometry)
            .max_abs_diff(&CMatrix::identity(1 << k));
        if err > ISOMETRY_TOL {
            return Err(Error::Precondition(format!(
                "encoding map is not an isometry (deviation {err:.2e})"
            )));
        }
        Ok(StabCode {
            name: name.to_string(),
            n,
            k,
            isometry,
            stabilizers: Vec::new(),
        })
    }

    /// Builds the code from commuting stabilizer generators and logical operators.
    ///
    /// `|0…0⟩_L` is the normalized projection of the first computational basis
    /// state with nonzero overlap on the `+1` eigenspace of all stabilizers
    /// and logical Z's; other logical basis states follow from the logical X's.
    pub fn from_stabilizers(
        name: &str,
        stabilizers: &[&str],
        logical_x: &[&str],
        logical_z: &[&str],
    ) -> Result<Self> {
        let n = stabilizers
            .first()
            .or(logical_x.first())
            .map(|s| s.len())
            .unwrap_or(0);
        let k = logical_x.len();
        if n == 0 || k == 0 || logical_z.len() != k || stabilizers.len() + k != n {
            return Err(Error::Precondition(format!(
                "{name}: need n−k stabilizers and k logical X/Z pairs"
            )));
        }
        let op = |s: &str| -> Result<CMatrix> {
            if s.len() != n {
                return Err(Error::Dimension(format!(
                    "Pauli string {s} is not on {n} qubits"
                )));
            }
            pauli::string(s).ok_or_else(|| Error::Unknown {
                kind: "Pauli string",
                name: s.to_string(),
            })
        };
        let dim = 1usize << n;
        let id = CMatrix::identity(dim);
        let mut proj = id.clone();
        for s in stabilizers.iter().chain(logical_z) {
            proj = proj.matmul(&(&id + &op(s)?).scale(0.5));
        }
        let zero = (0..dim)
            .map(|b| proj.column_vec(b))
            .find(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>() > 1e-6)
            .ok_or_else(|| Error::Precondition(format!("{name}: empty code space")))?;
        let norm = zero.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let zero: Vec<C64> = zero.iter().map(|z| z / norm).collect();

        let xs = logical_x
            .iter()
            .map(|s| op(s))
            .collect::<Result<Vec<_>>>()?;
        let mut cols = Vec::with_capacity(1 << k);
        for logical in 0..(1usize << k) {
            let mut v = CMatrix::column(&zero);
            for (j, x) in xs.iter().enumerate() {
                // logical qubit 0 is the most significant bit
                if logical >> (k - 1 - j) & 1 == 1 {
                    v = x.matmul(&v);
                }
            }
            cols.push(v.column_vec(0));
        }
        let isometry = CMatrix::from_fn(dim, 1 << k, |r, c| cols[c][r]);
        let mut code = StabCode::from_isometry(name, n, k, isometry)?;
        code.stabilizers = stabilizers.iter().map(|s| s.to_string()).collect();
        Ok(code)
    }

    /// Code-space projector `V V†`.
    pub fn projector(&self) -> CMatrix {
        self.isometry.matmul(&self.isometry.adjoint())
    }

    /// Encoding channel `ρ ↦ V ρ V†`.
    pub fn encoder(&self) -> Result<QChannel> {
        QChannel::new(vec![self.isometry.clone()])
    }

    /// Syndrome-conditioned recovery `{V† C_s P_s}` with a minimum-weight
    /// Pauli correction `C_s` for every syndrome `s`.
    pub fn syndrome_decoder(&self) -> Result<QChannel> {
        if self.stabilizers.is_empty() {
            if self.n == self.k {
                return QChannel::new(vec![self.isometry.adjoint()]);
            }
            return Err(Error::Precondition(format!(
                "{}: no stabilizer generators for a syndrome decoder",
                self.name
            )));
        }
        let m = self.stabilizers.len();
        let dim = 1usize << self.n;
        let id = CMatrix::identity(dim);
        let gens = self
            .stabilizers
            .iter()
            .map(|s| match pauli::string(s) {
                Some(g) if s.len() == self.n => Ok(g),
                _ => Err(Error::Unknown {
                    kind: "stabilizer generator",
                    name: s.clone(),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        let corrections = min_weight_corrections(&self.stabilizers, self.n);
        let v_dag = self.isometry.adjoint();
        let mut kraus = Vec::with_capacity(1 << m);
        for (syndrome, corr) in corrections.iter().enumerate() {
            let corr = corr.as_ref().ok_or_else(|| {
                Error::Precondition(format!(
                    "{}: syndrome {syndrome:b} has no correction",
                    self.name
                ))
            })?;
            let mut proj = id.clone();
            for (i, g) in gens.iter().enumerate() {
                let sign = if syndrome >> i & 1 == 1 { -1.0 } else { 1.0 };
                proj = proj.matmul(&(&id + &g.scale(sign)).scale(0.5));
            }
            let c = pauli::string(corr).expect("built from Pauli letters");
            kraus.push(v_dag.matmul(&c).matmul(&proj));
        }
        QChannel::new(kraus)
    }
}

/// Bit `i` set when the Pauli string anticommutes with generator `i`.
fn syndrome_of(p: &[u8], gens: &[Vec<u8>]) -> usize {
    gens.iter().enumerate().fold(0, |acc, (i, g)| {
        let anti = g
            .iter()
            .zip(p)
            .filter(|(&a, &b)| a != b'I' && b != b'I' && a != b)
            .count();
        acc | ((anti & 1) << i)
    })
}

/// For each syndrome, the first Pauli string that produces it when strings
/// are enumerated by weight, then by qubit position, with letters X, Z, Y.
fn min_weight_corrections(stabilizers: &[String], n: usize) -> Vec<Option<String>> {
    let gens: Vec<Vec<u8>> = stabilizers.iter().map(|s| s.as_bytes().to_vec()).collect();
    let mut table: Vec<Option<String>> = vec![None; 1 << gens.len()];
    let mut remaining = table.len();
    for weight in 0..=n {
        let mut positions: Vec<usize> = (0..weight).collect();
        loop {
            // all letter assignments for the chosen positions
            let combos = 3usize.pow(weight as u32);
            for code in 0..combos {
                let mut p = vec![b'I'; n];
                let mut c = code;
                for &q in positions.iter().rev() {
                    p[q] = b"XZY"[c % 3];
                    c /= 3;
                }
                let s = syndrome_of(&p, &gens);
                if table[s].is_none() {
                    table[s] = Some(String::from_utf8(p).expect("ascii"));
                    remaining -= 1;
                    if remaining == 0 {
                        return table;
                    }
                }
            }
            if !next_combination(&mut positions, n) {
                break;
            }
        }
    }
    table
}

/// Advances `pos` to the next increasing `pos.len()`-subset of `0..n`.
fn next_combination(pos: &mut [usize], n: usize) -> bool {
    let k = pos.len();
    for i in (0..k).rev() {
        if pos[i] < n - k + i {
            pos[i] += 1;
            for j in i + 1..k {
                pos[j] = pos[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Names accepted by [`builtin_code`].
pub const BUILTIN_CODES: [&str; 3] = [
    "three_qubit_bitflip",
    "three_qubit_phaseflip",
    "five_qubit_perfect",
];

pub fn builtin_code(name: &str) -> Result<StabCode> {
    match name {
        "three_qubit_bitflip" => {
            StabCode::from_stabilizers(name, &["ZZI", "IZZ"], &["XXX"], &["ZZZ"])
        }
        "three_qubit_phaseflip" => {
            StabCode::from_stabilizers(name, &["XXI", "IXX"], &["ZZZ"], &["XXX"])
        }
        "five_qubit_perfect" => StabCode::from_stabilizers(
            name,
            &["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"],
            &["XXXXX"],
            &["ZZZZZ"],
        ),
        _ => Err(Error::Unknown {
            kind: "code",
            name: name.to_string(),
        }),
    }
}

/// `D ∘ Φ^{⊗n} ∘ E` on `k` qubits.
pub fn coded_channel(c: &Coding, ch: &QChannel) -> Result<QChannel> {
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(Error::Dimension("codings act on qubit channels".into()));
    }
    if c.n + c.k > MAX_CODED_QUBITS {
        return Err(Error::SizeCap(format!(
            "n + k = {} exceeds {MAX_CODED_QUBITS} qubits",
            c.n + c.k
        )));
    }
    let noisy = ch.tensor_pow(c.n)?.compose(&c.encoder)?;
    c.decoder.compose(&noisy)
}

/// `ε = 1 − F_E(𝟙, coded_channel(c, ch))`.
pub fn coding_error(c: &Coding, ch: &QChannel) -> Result<f64> {
    let coded = coded_channel(c, ch)?;
    Ok((1.0 - fidelity_with_identity(&coded)?).clamp(0.0, 1.0))
}

/// `1 − F_E(𝟙, Φ^{⊗k})`.
pub fn bare_error(ch: &QChannel, k: usize) -> Result<f64> {
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(Error::Dimension(
            "bare error is defined for qubit channels".into(),
        ));
    }
    if k > MAX_CODED_QUBITS {
        return Err(Error::SizeCap(format!(
            "k = {k} exceeds {MAX_CODED_QUBITS} qubits"
        )));
    }
    Ok((1.0 - fidelity_with_identity(&ch.tensor_pow(k)?)?).clamp(0.0, 1.0))
}

/// True iff the coding beats the bare error strictly.
pub fn works(c: &Coding, ch: &QChannel) -> Result<bool> {
    Ok(coding_error(c, ch)? < bare_error(ch, c.k)?)
}

/// Outcome of a Knill–Laflamme check.
#[derive(Debug, Clone)]
pub struct KlReport {
    pub satisfied: bool,
    /// `λ_ij` with `P E_i† E_j P ≈ λ_ij P`.
    pub lambda: CMatrix,
    /// Largest entry of `P E_i† E_j P − λ_ij P` over all pairs.
    pub max_deviation: f64,
}

/// Tests `P E_i† E_j P = λ_ij P` on the code projector.
pub fn kl_check(code: &StabCode, errors: &[CMatrix], tol: f64) -> Result<KlReport> {
    let dim = code.isometry.rows();
    if let Some(e) = errors.iter().find(|e| e.rows() != dim || e.cols() != dim) {
        return Err(Error::Dimension(format!(
            "error operator is {}x{}, code lives on dimension {dim}",
            e.rows(),
            e.cols()
        )));
    }
    let p = code.projector();
    let v = &code.isometry;
    let dk = v.cols() as f64;
    let m = errors.len();
    // E_j V, reused for every pair
    let ev: Vec<CMatrix> = errors.iter().map(|e| e.matmul(v)).collect();
    let mut lambda = CMatrix::zeros(m, m);
    let mut max_deviation: f64 = 0.0;
    for i in 0..m {
        for j in 0..m {
            // V† E_i† E_j V, a k-qubit block
            let block = ev[i].adjoint().matmul(&ev[j]);
            let l = block.trace() / dk;
            lambda[(i, j)] = l;
            let full = v.matmul(&block).matmul(&v.adjoint());
            max_deviation = max_deviation.max(full.max_abs_diff(&p.scale_c(l)));
        }
    }
    Ok(KlReport {
        satisfied: max_deviation <= tol,
        lambda,
        max_deviation,
    })
}

/// The `3n + 1` Pauli operators of weight ≤ 1 on `n` qubits: identity
/// first, then X, Y, Z on each qubit.
pub fn single_qubit_paulis(n: usize) -> Vec<CMatrix> {
    let mut out = vec![CMatrix::identity(1 << n)];
    for q in 0..n {
        for l in ['X', 'Y', 'Z'] {
            let s: String = (0..n).map(|i| if i == q { l } else { 'I' }).collect();
            out.push(pauli::string(&s).expect("Pauli letters"));
        }
    }
    out
}

/// Entropy in bits of the reduced state of `psi` on the subsystems in `subset`.
pub fn entanglement_entropy(psi: &[C64], dims: &[usize], subset: &[usize]) -> Result<f64> {
    let total: usize = dims.iter().product();
    if total != psi.len() {
        return Err(Error::Dimension(format!(
            "state of length {} does not match dims {dims:?}",
            psi.len()
        )));
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotDensity(format!(
            "state vector has squared norm {norm}"
        )));
    }
    let rho = CMatrix::outer(psi, psi);
    let reduced = partial_trace(&rho, dims, subset)?;
    check_density(&reduced)?;
    entropy(&reduced)
}

/// Parses `family:param` with family in `bitflip`, `dephasing`,
/// `depolarizing`, `amplitude_damping`.
pub fn noise_channel(spec: &str) -> Result<QChannel> {
    let (family, param) = spec.split_once(':').ok_or_else(|| {
        Error::Precondition(format!(
            "noise spec {spec:?} is not of the form family:param"
        ))
    })?;
    let p: f64 = param
        .trim()
        .parse()
        .map_err(|_| Error::Precondition(format!("noise parameter {param:?} is not a number")))?;
    match family.trim() {
        "bitflip" => QChannel::bit_flip(p),
        "dephasing" => QChannel::dephasing(p),
        "depolarizing" => QChannel::depolarizing(p),
        "amplitude_damping" => QChannel::amplitude_damping(p),
        other => Err(Error::Unknown {
            kind: "noise family",
            name: other.to_string(),
        }),
    }
}
