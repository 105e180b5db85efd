//! Channel representations and conversions.
//!
//! A [`QChannel`] is stored as Kraus operators `K_i : C^{d_in} → C^{d_out}`.
//! The Choi state uses trace-one normalization with index order
//! `(out, in)`: `ω[(a,i),(b,j)] = ⟨a|Φ(|i⟩⟨j|)|b⟩ / d_in`.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, c, pauli, CMatrix, HermitianSpectrum, C64, EIG_CLIP};
use crate::{Error, Result};

/// Completeness tolerance for constructed channels.
pub const TP_TOL: f64 = 1e-8;
/// Completeness drift that JSON input may carry and still be renormalized.
pub const JSON_DRIFT_TOL: f64 = 1e-6;
/// Largest per-side dimension allowed for tensor powers (7 qubits).
pub const MAX_TENSOR_DIM: usize = 128;

#[derive(Debug, Clone)]
pub struct QChannel {
    d_in: usize,
    d_out: usize,
    kraus: Vec<CMatrix>,
}

impl QChannel {
    /// Builds a channel, checking `Σ K†K = 𝟙` within [`TP_TOL`].
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let ch = Self::from_kraus_unchecked(kraus)?;
        let drift = ch.completeness_error();
        if drift > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "Kraus operators are not trace preserving (max |ΣK†K − 𝟙| = {drift:.3e})"
            )));
        }
        Ok(ch)
    }

    /// Shape checks only. Callers guarantee completeness by construction.
    pub(crate) fn from_kraus_unchecked(kraus: Vec<CMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let (d_out, d_in) = (first.rows(), first.cols());
        if d_in == 0 || d_out == 0 {
            return Err(Error::InvalidChannel("zero dimension".into()));
        }
        if kraus.iter().any(|k| k.rows() != d_out || k.cols() != d_in) {
            return Err(Error::Dimension(
                "Kraus operators have inconsistent shapes".into(),
            ));
        }
        Ok(QChannel { d_in, d_out, kraus })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    /// `Σ K_i† K_i`.
    pub fn kraus_gram_sum(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.d_in, self.d_in);
        for k in &self.kraus {
            m = &m + &k.adjoint().matmul(k);
        }
        m
    }

    pub fn completeness_error(&self) -> f64 {
        self.kraus_gram_sum()
            .max_abs_diff(&CMatrix::identity(self.d_in))
    }

    pub fn identity(d: usize) -> Self {
        QChannel {
            d_in: d,
            d_out: d,
            kraus: vec![CMatrix::identity(d)],
        }
    }

    /// Unitary (or isometric) conjugation `ρ ↦ UρU†`.
    pub fn unitary(u: CMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    /// Replacement channel `ρ ↦ tr(ρ)·σ` from `d_in` to `dim(σ)`.
    pub fn replacement(sigma: &CMatrix, d_in: usize) -> Result<Self> {
        check_density(sigma)?;
        let spec = linalg::hermitian_eig(sigma)?;
        let mut kraus = Vec::new();
        for (k, &lam) in spec.eigenvalues.iter().enumerate() {
            if lam <= EIG_CLIP {
                continue;
            }
            let v = spec.eigenvector(k);
            for i in 0..d_in {
                let mut e = vec![c(0., 0.); d_in];
                e[i] = c(1., 0.);
                kraus.push(CMatrix::outer(&v, &e).scale(lam.sqrt()));
            }
        }
        Self::new(kraus)
    }

    /// Qubit Pauli channel `Σ p_k σ_k ρ σ_k` with `probs = [p_I, p_X, p_Y, p_Z]`.
    pub fn pauli(probs: [f64; 4]) -> Result<Self> {
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > TP_TOL {
            return Err(Error::InvalidChannel(format!(
                "Pauli probabilities {probs:?} are not a distribution"
            )));
        }
        let ops = [pauli::i2(), pauli::x(), pauli::y(), pauli::z()];
        let kraus = probs
            .iter()
            .zip(ops)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, s)| s.scale(p.sqrt()))
            .collect();
        Self::new(kraus)
    }

    pub fn bit_flip(p: f64) -> Result<Self> {
        Self::pauli([1.0 - p, p, 0.0, 0.0])
    }

    /// Z-dephasing: `Z` applied with probability `p`.
    pub fn dephasing(p: f64) -> Result<Self> {
        Self::pauli([1.0 - p, 0.0, 0.0, p])
    }

    pub fn completely_dephasing() -> Self {
        Self::dephasing(0.5).expect("valid probabilities")
    }

    /// `ρ ↦ (1−p)ρ + p·𝟙/2`.
    pub fn depolarizing(p: f64) -> Result<Self> {
        let q = p / 4.0;
        Self::pauli([1.0 - 3.0 * q, q, q, q])
    }

    /// Uniform Pauli twirl; maps every state to `π₂`.
    pub fn completely_depolarizing() -> Self {
        Self::depolarizing(1.0).expect("valid probabilities")
    }

    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidChannel(format!(
                "damping rate {gamma} outside [0, 1]"
            )));
        }
        let k0 = CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?;
        let k1 = CMatrix::from_real(2, 2, &[0.0, gamma.sqrt(), 0.0, 0.0])?;
        Self::new(vec![k0, k1])
    }

    /// `Φ(ρ) = Σ K_i ρ K_i†`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.rows() != self.d_in || rho.cols() != self.d_in {
            return Err(Error::Dimension(format!(
                "channel input dimension {} but state is {}x{}",
                self.d_in,
                rho.rows(),
                rho.cols()
            )));
        }
        Ok(self.apply_unchecked(rho))
    }

    pub(crate) fn apply_unchecked(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(self.d_out, self.d_out);
        for k in &self.kraus {
            out = &out + &k.sandwich(rho);
        }
        out
    }

    /// Trace-one Choi state `(Φ ⊗ 𝟙)(ω)`.
    pub fn choi(&self) -> ChoiMatrix {
        let n = self.d_out * self.d_in;
        let mut m = CMatrix::zeros(n, n);
        let norm = 1.0 / self.d_in as f64;
        for k in &self.kraus {
            // row-major storage of K is exactly the (out, in) vectorization
            let v = k.as_slice();
            for r in 0..n {
                if v[r].re == 0.0 && v[r].im == 0.0 {
                    continue;
                }
                for col in 0..n {
                    m[(r, col)] += v[r] * v[col].conj() * norm;
                }
            }
        }
        ChoiMatrix {
            d_in: self.d_in,
            d_out: self.d_out,
            matrix: m,
        }
    }

    /// Number of Choi eigenvalues above `1e-10`.
    pub fn rank(&self) -> usize {
        self.choi().rank()
    }

    /// Complementary channel onto the environment, basis indexed by Kraus order.
    ///
    /// `(K^c_a)[i, b] = K_i[a, b]`, so `Φ^c(ρ)[i, j] = tr(ρ K_j† K_i)`.
    pub fn complementary(&self) -> QChannel {
        let r = self.kraus.len();
        let kraus = (0..self.d_out)
            .map(|a| CMatrix::from_fn(r, self.d_in, |i, b| self.kraus[i][(a, b)]))
            .collect();
        QChannel {
            d_in: self.d_in,
            d_out: r,
            kraus,
        }
    }

    /// Environment state `Φ^c(ρ)` without materializing the complementary Kraus set.
    pub(crate) fn environment_state(&self, rho: &CMatrix) -> CMatrix {
        let r = self.kraus.len();
        let krho: Vec<CMatrix> = self.kraus.iter().map(|k| k.matmul(rho)).collect();
        let mut env = CMatrix::zeros(r, r);
        for i in 0..r {
            for j in i..r {
                let v = self.kraus[j].hs_inner(&krho[i]);
                // tr(K_j† K_i ρ)
                env[(i, j)] = v;
                env[(j, i)] = v.conj();
            }
        }
        env
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &QChannel) -> Result<QChannel> {
        if inner.d_out != self.d_in {
            return Err(Error::Dimension(format!(
                "cannot compose: inner output {} vs outer input {}",
                inner.d_out, self.d_in
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| inner.kraus.iter().map(move |b| a.matmul(b)))
            .collect();
        Ok(QChannel {
            d_in: inner.d_in,
            d_out: self.d_out,
            kraus,
        })
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &QChannel) -> QChannel {
        let kraus = self
            .kraus
            .iter()
            .flat_map(|a| other.kraus.iter().map(move |b| a.tensor(b)))
            .collect();
        QChannel {
            d_in: self.d_in * other.d_in,
            d_out: self.d_out * other.d_out,
            kraus,
        }
    }

    /// `Φ^{⊗n}`; each side is capped at [`MAX_TENSOR_DIM`].
    pub fn tensor_pow(&self, n: usize) -> Result<QChannel> {
        if n == 0 {
            return Err(Error::Precondition("tensor power must be positive".into()));
        }
        let side = |d: usize| d.checked_pow(n as u32).filter(|&v| v <= MAX_TENSOR_DIM);
        if side(self.d_in).is_none() || side(self.d_out).is_none() {
            return Err(Error::SizeCap(format!(
                "{n}-fold tensor power of a {}→{} channel exceeds dimension {MAX_TENSOR_DIM}",
                self.d_in, self.d_out
            )));
        }
        let mut out = self.clone();
        for _ in 1..n {
            out = out.tensor(self);
        }
        Ok(out)
    }

    /// Convex mixture `p·self + (1−p)·other`.
    pub fn mix(&self, p: f64, other: &QChannel) -> Result<QChannel> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return Err(Error::Dimension(
                "mixing channels of different shapes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Precondition(format!("weight {p} outside [0, 1]")));
        }
        let mut kraus: Vec<CMatrix> = Vec::new();
        if p > 0.0 {
            kraus.extend(self.kraus.iter().map(|k| k.scale(p.sqrt())));
        }
        if p < 1.0 {
            kraus.extend(other.kraus.iter().map(|k| k.scale((1.0 - p).sqrt())));
        }
        Ok(QChannel {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus,
        })
    }

    /// Qubit affine (Bloch) representation `v ↦ T v + t`.
    pub fn affine(&self) -> Result<AffineRep> {
        if self.d_in != 2 || self.d_out != 2 {
            return Err(Error::Dimension(format!(
                "affine representation needs a qubit channel, got {}→{}",
                self.d_in, self.d_out
            )));
        }
        let sig = pauli::sigma();
        let centre = self.apply_unchecked(&CMatrix::maximally_mixed(2));
        let mut t = [0.0; 3];
        let mut tm = [[0.0; 3]; 3];
        for k in 0..3 {
            t[k] = sig[k].matmul(&centre).trace().re;
        }
        for l in 0..3 {
            let out = self.apply_unchecked(&sig[l]);
            for k in 0..3 {
                tm[k][l] = sig[k].matmul(&out).trace().re / 2.0;
            }
        }
        Ok(AffineRep { t, t_matrix: tm })
    }

    /// Frobenius distance between Choi states.
    pub fn choi_distance(&self, other: &QChannel) -> Result<f64> {
        if (self.d_in, self.d_out) != (other.d_in, other.d_out) {
            return Err(Error::Dimension(
                "comparing channels of different shapes".into(),
            ));
        }
        Ok((&self.choi().matrix - &other.choi().matrix).frobenius_norm())
    }

    /// Symmetric renormalization `K_i ↦ K_i M^{-1/2}` with `M = Σ K†K`.
    pub fn renormalized(&self) -> Result<QChannel> {
        let m = self.kraus_gram_sum().hermitian_part();
        let inv = linalg::inv_sqrt_pd(&m)
            .map_err(|_| Error::InvalidChannel("Kraus Gram sum is singular".into()))?;
        Ok(QChannel {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self.kraus.iter().map(|k| k.matmul(&inv)).collect(),
        })
    }

    pub fn to_json(&self) -> ChannelJson {
        ChannelJson {
            d_in: self.d_in,
            d_out: self.d_out,
            kraus: self
                .kraus
                .iter()
                .map(|k| k.as_slice().iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }

    /// Reads the JSON form, renormalizing completeness drift up to [`JSON_DRIFT_TOL`].
    pub fn from_json(j: &ChannelJson) -> Result<QChannel> {
        let kraus = j
            .kraus
            .iter()
            .map(|k| {
                CMatrix::from_vec(
                    j.d_out,
                    j.d_in,
                    k.iter().map(|&[re, im]| c(re, im)).collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let ch = Self::from_kraus_unchecked(kraus)?;
        if (ch.d_in, ch.d_out) != (j.d_in, j.d_out) {
            return Err(Error::Dimension(
                "declared dimensions disagree with Kraus shapes".into(),
            ));
        }
        let drift = ch.completeness_error();
        if drift > JSON_DRIFT_TOL {
            return Err(Error::InvalidChannel(format!(
                "completeness drift {drift:.3e} exceeds {JSON_DRIFT_TOL:.0e}"
            )));
        }
        if drift == 0.0 {
            Ok(ch)
        } else {
            ch.renormalized()
        }
    }
}

/// Serialized channel: Kraus operators as row-major lists of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelJson {
    pub d_in: usize,
    pub d_out: usize,
    pub kraus: Vec<Vec<[f64; 2]>>,
}

/// Trace-one Choi state of a channel, index order `(out, in)`.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub d_in: usize,
    pub d_out: usize,
    pub matrix: CMatrix,
}

impl ChoiMatrix {
    /// Wraps a matrix after checking PSD, unit trace and the input marginal.
    pub fn new(d_in: usize, d_out: usize, matrix: CMatrix) -> Result<Self> {
        let n = d_in * d_out;
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::Dimension(format!(
                "Choi matrix for {d_in}→{d_out} must be {n}x{n}"
            )));
        }
        let choi = ChoiMatrix {
            d_in,
            d_out,
            matrix,
        };
        choi.validate()?;
        Ok(choi)
    }

    fn validate(&self) -> Result<()> {
        let ev = linalg::hermitian_eigenvalues(&self.matrix)
            .map_err(|e| Error::InvalidChoi(e.to_string()))?;
        let min = ev.last().copied().unwrap_or(0.0);
        if min < -TP_TOL {
            return Err(Error::InvalidChoi(format!("negative eigenvalue {min:.3e}")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(Error::InvalidChoi(format!("trace {tr} is not 1")));
        }
        let marginal = linalg::partial_trace(&self.matrix, &[self.d_out, self.d_in], &[1])?;
        let dev = marginal.max_abs_diff(&CMatrix::maximally_mixed(self.d_in));
        if dev > TP_TOL {
            return Err(Error::InvalidChoi(format!(
                "input marginal deviates from π by {dev:.3e}"
            )));
        }
        Ok(())
    }

    pub fn spectrum(&self) -> HermitianSpectrum {
        linalg::hermitian_eig(&self.matrix).expect("Choi matrices are Hermitian")
    }

    pub fn rank(&self) -> usize {
        linalg::eigenvalues_unchecked(&self.matrix)
            .iter()
            .filter(|&&l| l > EIG_CLIP)
            .count()
    }

    /// Kraus operators `K_k[a,i] = √(d_in λ_k) v_k[(a,i)]`, one per eigenvalue above `1e-10`.
    pub fn to_channel(&self) -> Result<QChannel> {
        self.validate()?;
        let spec = self.spectrum();
        let kraus: Vec<CMatrix> = spec
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > EIG_CLIP)
            .map(|(k, &l)| {
                let w = (self.d_in as f64 * l).sqrt();
                let v = spec.eigenvector(k);
                CMatrix::from_vec(self.d_out, self.d_in, v.iter().map(|z| z * w).collect())
                    .expect("eigenvector length matches")
            })
            .collect();
        QChannel::from_kraus_unchecked(kraus)
    }
}

/// Bloch-ball action of a qubit channel: `v ↦ T v + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineRep {
    pub t: [f64; 3],
    pub t_matrix: [[f64; 3]; 3],
}

impl AffineRep {
    pub fn apply_bloch(&self, v: [f64; 3]) -> [f64; 3] {
        let mut out = self.t;
        for (o, row) in out.iter_mut().zip(&self.t_matrix) {
            *o += row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }

    /// `|t|`, the non-unitality.
    pub fn t_norm(&self) -> f64 {
        self.t.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `‖T‖_F`.
    pub fn t_frob(&self) -> f64 {
        self.t_matrix
            .iter()
            .flatten()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    /// 4×4 real matrix `[[1, 0], [t, T]]`.
    pub fn full_matrix(&self) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        m[0][0] = 1.0;
        for k in 0..3 {
            m[k + 1][0] = self.t[k];
            for l in 0..3 {
                m[k + 1][l + 1] = self.t_matrix[k][l];
            }
        }
        m
    }
}

/// Density matrix of a Bloch vector.
pub fn bloch_state(v: [f64; 3]) -> CMatrix {
    let s = pauli::sigma();
    let mut rho = CMatrix::identity(2);
    for k in 0..3 {
        rho = &rho + &s[k].scale(v[k]);
    }
    rho.scale(0.5)
}

/// Bloch vector `tr(σ_k ρ)` of a qubit state.
pub fn bloch_vector(rho: &CMatrix) -> [f64; 3] {
    let s = pauli::sigma();
    [0, 1, 2].map(|k| s[k].matmul(rho).trace().re)
}

/// Checks Hermitian PSD with unit trace at `1e-8`.
pub fn check_density(rho: &CMatrix) -> Result<()> {
    if !rho.is_square() {
        return Err(Error::NotDensity(format!(
            "{}x{} is not square",
            rho.rows(),
            rho.cols()
        )));
    }
    let herm = rho.hermiticity_error();
    if herm > TP_TOL {
        return Err(Error::NotDensity(format!("not Hermitian ({herm:.3e})")));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TP_TOL || tr.im.abs() > TP_TOL {
        return Err(Error::NotDensity(format!("trace {tr} is not 1")));
    }
    let min = linalg::eigenvalues_unchecked(&rho.hermitian_part())
        .last()
        .copied()
        .unwrap_or(0.0);
    if min < -TP_TOL {
        return Err(Error::NotDensity(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}

/// Pure state `|ψ⟩⟨ψ|` from amplitudes (normalized here).
pub fn pure_state(psi: &[C64]) -> CMatrix {
    let n: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
    CMatrix::outer(&v, &v)
}
