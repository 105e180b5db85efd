//! Entropic functionals, in bits.

use crate::channel::{check_density, QChannel};
use crate::linalg::{self, CMatrix, EIG_CLIP};
use crate::{Error, Result};

/// σ-eigenvalues below this define the null support in relative entropy.
pub const SUPPORT_TOL: f64 = 1e-12;

/// `−Σ λ log₂ λ` over eigenvalues, with clipped negatives and `0·log 0 = 0`.
pub fn spectrum_entropy(eigenvalues: &[f64]) -> f64 {
    eigenvalues
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.log2())
        .sum::<f64>()
        .max(0.0)
}

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> f64 {
    spectrum_entropy(&[x, 1.0 - x])
}

/// Von Neumann entropy `H(ρ)`.
pub fn entropy(rho: &CMatrix) -> Result<f64> {
    check_density(rho)?;
    Ok(entropy_unchecked(rho))
}

pub(crate) fn entropy_unchecked(rho: &CMatrix) -> f64 {
    let ev = linalg::eigenvalues_unchecked(&rho.hermitian_part());
    let clipped: Vec<f64> = ev
        .into_iter()
        .map(|l| if l < EIG_CLIP { 0.0 } else { l })
        .collect();
    spectrum_entropy(&clipped)
}

/// `R(ρ‖σ) = tr ρ log ρ − tr ρ log σ`; `f64::INFINITY` when `supp ρ ⊄ supp σ`.
pub fn relative_entropy(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    check_density(rho)?;
    check_density(sigma)?;
    if rho.rows() != sigma.rows() {
        return Err(Error::Dimension(format!(
            "relative entropy of {}-dim and {}-dim states",
            rho.rows(),
            sigma.rows()
        )));
    }
    let neg_h = -entropy_unchecked(rho);
    let spec = linalg::hermitian_eig(&sigma.hermitian_part())?;
    let mut cross = 0.0;
    for (k, &mu) in spec.eigenvalues.iter().enumerate() {
        let w = spec.eigenvector(k);
        let weight: f64 = (0..w.len())
            .flat_map(|i| (0..w.len()).map(move |j| (i, j)))
            .map(|(i, j)| (w[i].conj() * rho[(i, j)] * w[j]).re)
            .sum();
        if mu < SUPPORT_TOL {
            if weight > SUPPORT_TOL {
                return Ok(f64::INFINITY);
            }
            continue;
        }
        cross += weight * mu.log2();
    }
    Ok((neg_h - cross).max(0.0))
}

fn check_input(rho: &CMatrix, ch: &QChannel) -> Result<()> {
    if rho.rows() != ch.d_in() || rho.cols() != ch.d_in() {
        return Err(Error::Dimension(format!(
            "state of dimension {} for a channel with input dimension {}",
            rho.rows(),
            ch.d_in()
        )));
    }
    check_density(rho)
}

/// `I_c(ρ, Φ) = H(Φ(ρ)) − H(Φ^c(ρ))`.
pub fn coherent_information(rho: &CMatrix, ch: &QChannel) -> Result<f64> {
    check_input(rho, ch)?;
    Ok(coherent_information_unchecked(rho, ch))
}

pub(crate) fn coherent_information_unchecked(rho: &CMatrix, ch: &QChannel) -> f64 {
    entropy_unchecked(&ch.apply_unchecked(rho)) - entropy_unchecked(&ch.environment_state(rho))
}

/// `J(ρ, Φ) = H(ρ) + I_c(ρ, Φ)`.
pub fn mutual_information(rho: &CMatrix, ch: &QChannel) -> Result<f64> {
    check_input(rho, ch)?;
    Ok(mutual_information_unchecked(rho, ch))
}

pub(crate) fn mutual_information_unchecked(rho: &CMatrix, ch: &QChannel) -> f64 {
    entropy_unchecked(rho) + coherent_information_unchecked(rho, ch)
}

/// `I(Φ) = I_c(π_d, Φ)`.
pub fn i_of_channel(ch: &QChannel) -> f64 {
    coherent_information_unchecked(&CMatrix::maximally_mixed(ch.d_in()), ch)
}

/// Uhlmann fidelity `(tr √(√ρ σ √ρ))² = ‖√ρ √σ‖₁²`.
///
/// Both states are factored on their supports, `ρ = B_ρ B_ρ†`, and the trace
/// norm is taken of the small matrix `B_ρ† B_σ`, so rank-deficient Choi
/// states do not pick up `√ε` noise from their null spaces.
pub fn fidelity(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Dimension(
            "fidelity of differently sized states".into(),
        ));
    }
    let br = support_factor(rho)?;
    let bs = support_factor(sigma)?;
    let m = br.adjoint().matmul(&bs);
    let gram = if m.rows() <= m.cols() {
        m.matmul(&m.adjoint())
    } else {
        m.adjoint().matmul(&m)
    };
    let ev = linalg::hermitian_eigenvalues(&gram.hermitian_part())?;
    let tr: f64 = ev.iter().map(|&l| l.max(0.0).sqrt()).sum();
    Ok((tr * tr).clamp(0.0, 1.0))
}

/// `B` with `m = B B†`, one column `√λ v` per eigenvalue above the clip.
fn support_factor(m: &CMatrix) -> Result<CMatrix> {
    let spec = linalg::hermitian_eig(&m.hermitian_part())?;
    let min = spec.eigenvalues.last().copied().unwrap_or(0.0);
    if min < -linalg::PSD_TOL {
        return Err(Error::NotPsd(min));
    }
    let keep: Vec<usize> = (0..spec.eigenvalues.len())
        .filter(|&k| spec.eigenvalues[k] > EIG_CLIP)
        .collect();
    let v = &spec.eigenvectors;
    Ok(CMatrix::from_fn(m.rows(), keep.len(), |r, j| {
        v[(r, keep[j])] * spec.eigenvalues[keep[j]].sqrt()
    }))
}

/// `F_E(Φ, Ψ)`: fidelity between the Choi states.
pub fn entanglement_fidelity(a: &QChannel, b: &QChannel) -> Result<f64> {
    if (a.d_in(), a.d_out()) != (b.d_in(), b.d_out()) {
        return Err(Error::Dimension(format!(
            "entanglement fidelity of {}→{} and {}→{} channels",
            a.d_in(),
            a.d_out(),
            b.d_in(),
            b.d_out()
        )));
    }
    fidelity(&a.choi().matrix, &b.choi().matrix)
}

/// `F_E(𝟙, Φ) = ⟨ω|ω_Φ|ω⟩ = Σ_k |tr K_k|² / d²`, the overlap of a channel with the identity.
pub fn fidelity_with_identity(ch: &QChannel) -> Result<f64> {
    if ch.d_in() != ch.d_out() {
        return Err(Error::Dimension(
            "identity fidelity needs d_in == d_out".into(),
        ));
    }
    let d = ch.d_in() as f64;
    Ok(ch.kraus().iter().map(|k| k.trace().norm_sqr()).sum::<f64>() / (d * d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bloch_state, pure_state};
    use crate::linalg::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_density(rng: &mut impl Rng, n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let m = a.matmul(&a.adjoint());
        m.scale(1.0 / m.trace().re)
    }

    fn random_channel(rng: &mut impl Rng, d_in: usize, d_out: usize, r: usize) -> QChannel {
        let a = (0..r)
            .map(|_| {
                CMatrix::from_fn(d_out, d_in, |_, _| {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                })
            })
            .collect();
        QChannel::from_kraus_unchecked(a)
            .unwrap()
            .renormalized()
            .unwrap()
    }

    fn replacement_pi2() -> QChannel {
        QChannel::replacement(&CMatrix::maximally_mixed(2), 2).unwrap()
    }

    /// Purification-form coherent information: H(Φ(ρ)) − H((Φ⊗𝟙)(|φ_ρ⟩⟨φ_ρ|)).
    fn coherent_information_purified(rho: &CMatrix, ch: &QChannel) -> f64 {
        let d = rho.rows();
        let spec = linalg::hermitian_eig(rho).unwrap();
        let mut phi = vec![c(0., 0.); d * d];
        for k in 0..d {
            let w = spec.eigenvalues[k].max(0.0).sqrt();
            let v = spec.eigenvector(k);
            for i in 0..d {
                phi[i * d + k] += v[i] * w;
            }
        }
        let joint = ch
            .tensor(&QChannel::identity(d))
            .apply(&pure_state(&phi))
            .unwrap();
        entropy(&ch.apply(rho).unwrap()).unwrap() - entropy_unchecked(&joint)
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&CMatrix::maximally_mixed(2)).unwrap() - 1.0).abs() < 1e-15);
        let psi = pure_state(&[c(0.6, 0.1), c(-0.3, 0.7)]);
        assert!(entropy(&psi).unwrap().abs() < 1e-12);
        let h = entropy(&CMatrix::diag_real(&[0.75, 0.25])).unwrap();
        // 2 − (3/4)·log₂3
        let oracle = 2.0 - 0.75 * 3f64.log2();
        assert!((h - oracle).abs() < 1e-12);
        assert!((h - 0.8112781245).abs() < 1e-10);
        assert!(entropy(&CMatrix::diag_real(&[0.5, 0.6])).is_err());
    }

    #[test]
    fn relative_entropy_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = random_density(&mut rng, 3);
        assert!(relative_entropy(&rho, &rho).unwrap().abs() < 1e-10);
        let pi = CMatrix::maximally_mixed(3);
        assert!(relative_entropy(&pi, &pi).unwrap().abs() < 1e-12);
        let lhs = entropy(&rho).unwrap();
        let rhs = 3f64.log2() - relative_entropy(&rho, &pi).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);

        let zero = CMatrix::diag_real(&[1.0, 0.0]);
        let one = CMatrix::diag_real(&[0.0, 1.0]);
        assert_eq!(relative_entropy(&zero, &one).unwrap(), f64::INFINITY);
        assert!(relative_entropy(&zero, &CMatrix::maximally_mixed(3)).is_err());
    }

    #[test]
    fn coherent_information_examples() {
        let pi2 = CMatrix::maximally_mixed(2);
        let ic = coherent_information(&pi2, &QChannel::identity(2)).unwrap();
        assert!((ic - 1.0).abs() < 1e-12);
        let ic = coherent_information(&pi2, &replacement_pi2()).unwrap();
        assert!((ic + 1.0).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = random_channel(&mut rng, 2, 2, 3);
        let psi = pure_state(&[c(0.3, 0.2), c(0.1, -0.9)]);
        assert!(coherent_information(&psi, &ch).unwrap().abs() < 1e-8);
        assert!(coherent_information(&CMatrix::maximally_mixed(3), &ch).is_err());
    }

    #[test]
    fn coherent_information_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..500 {
            let (d_in, d_out): (usize, usize) = [(2, 2), (2, 3), (3, 2)][trial % 3];
            let r = (1 + trial % 4).max(d_in.div_ceil(d_out));
            let ch = random_channel(&mut rng, d_in, d_out, r);
            let rho = random_density(&mut rng, d_in);
            let fast = coherent_information(&rho, &ch).unwrap();
            let slow = coherent_information_purified(&rho, &ch);
            assert!(
                (fast - slow).abs() < 1e-8,
                "trial {trial}: {fast} vs {slow}"
            );
        }
    }

    #[test]
    fn mutual_information_examples() {
        let pi2 = CMatrix::maximally_mixed(2);
        let j = mutual_information(&pi2, &QChannel::identity(2)).unwrap();
        assert!((j - 2.0).abs() < 1e-12);
        let rho = bloch_state([0.2, 0.5, -0.1]);
        assert!(mutual_information(&rho, &replacement_pi2()).unwrap().abs() < 1e-8);
        let j = mutual_information(&pi2, &QChannel::completely_dephasing()).unwrap();
        assert!((j - 1.0).abs() < 1e-12);
    }

    #[test]
    fn i_of_channel_examples() {
        assert!((i_of_channel(&QChannel::identity(2)) - 1.0).abs() < 1e-12);
        assert!(i_of_channel(&QChannel::completely_dephasing()).abs() < 1e-12);
        assert!((i_of_channel(&replacement_pi2()) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn entanglement_fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let ch = random_channel(&mut rng, 2, 2, 3);
        assert!((entanglement_fidelity(&ch, &ch).unwrap() - 1.0).abs() < 1e-8);

        let id = QChannel::identity(2);
        let f = entanglement_fidelity(&id, &replacement_pi2()).unwrap();
        assert!((f - 0.25).abs() < 1e-10);

        for p in [0.0, 0.1, 0.35, 0.5] {
            let deph = QChannel::dephasing(p).unwrap();
            let f = entanglement_fidelity(&id, &deph).unwrap();
            assert!((f - (1.0 - p)).abs() < 1e-10);
            assert!((fidelity_with_identity(&deph).unwrap() - (1.0 - p)).abs() < 1e-12);
        }
        assert!(entanglement_fidelity(&id, &QChannel::identity(3)).is_err());
    }

    #[test]
    fn entanglement_fidelity_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let a = random_channel(&mut rng, 2, 2, 2);
            let b = random_channel(&mut rng, 2, 2, 3);
            let ab = entanglement_fidelity(&a, &b).unwrap();
            let ba = entanglement_fidelity(&b, &a).unwrap();
            assert!((ab - ba).abs() < 1e-10);
            assert!(ab < 1.0 - 1e-6);
        }
    }

    #[test]
    fn entropy_unitary_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let rho = random_density(&mut rng, 4);
            let h = random_density(&mut rng, 4);
            let u = linalg::hermitian_eig(&h).unwrap().eigenvectors;
            let rotated = u.sandwich(&rho);
            let diff = entropy(&rho).unwrap() - entropy(&rotated).unwrap();
            assert!(diff.abs() < 1e-10);
        }
    }

    #[test]
    fn binary_entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }
}
