//! Generalized extreme qubit channels and the convex-decomposition bound on `Q_III`.
//!
//! A generalized extreme channel is `U_post ∘ Φ_{u,v} ∘ U_pre` with canonical
//! Kraus pair
//!
//! ```text
//! K₁ = [[cos v, 0], [0, cos u]],   K₂ = [[0, sin u], [sin v, 0]].
//! ```
//!
//! These channels have Choi rank ≤ 2 and are degradable or anti-degradable,
//! so their quantum capacity is `max(0, Q_V)`. Writing a channel as
//! `p·Φ₁ + (1−p)·Φ₂` with both parts generalized extreme gives the upper
//! bound `p·Q(Φ₁) + (1−p)·Q(Φ₂)` on `Q_III`.
//!
//! `Φ_{u,v}` commutes with Z-conjugation, so for the degradable branch the
//! concave coherent information is maximized on diagonal inputs, where it
//! reduces to a difference of binary entropies; [`canonical_capacity`]
//! evaluates that one-dimensional problem directly.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{q5_one_shot, Diagnostics, OptimizerConfig};
use crate::channel::QChannel;
use crate::entropic::binary_entropy;
use crate::linalg::{c, pauli, CMatrix};
use crate::optim::NelderMead;
use crate::{Error, Result};

/// Largest accepted Choi Frobenius residual of a decomposition.
pub const RESIDUAL_TOL: f64 = 1e-3;
/// Penalty weights applied in sequence during the search.
pub const PENALTY_LADDER: [f64; 4] = [10.0, 100.0, 1e3, 1e4];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenExtremeParams {
    /// Angle in `[0, π/2]`.
    pub u: f64,
    /// Angle in `[0, π/2]`.
    pub v: f64,
    /// Rotation vector of the SU(2) element applied first.
    pub pre: [f64; 3],
    /// Rotation vector of the SU(2) element applied last.
    pub post: [f64; 3],
}

impl GenExtremeParams {
    pub fn canonical(u: f64, v: f64) -> Self {
        GenExtremeParams {
            u,
            v,
            pre: [0.0; 3],
            post: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |a: f64| (0.0..=FRAC_PI_2 + 1e-12).contains(&a);
        if !ok(self.u) || !ok(self.v) {
            return Err(Error::Precondition(format!(
                "angles (u, v) = ({}, {}) outside [0, π/2]",
                self.u, self.v
            )));
        }
        if self.pre.iter().chain(&self.post).any(|x| !x.is_finite()) {
            return Err(Error::Precondition("non-finite rotation parameters".into()));
        }
        Ok(())
    }

    /// Unconstrained encoding: angles pass through `(π/2)·sin²`.
    fn from_raw(x: &[f64]) -> Self {
        GenExtremeParams {
            u: FRAC_PI_2 * x[0].sin().powi(2),
            v: FRAC_PI_2 * x[1].sin().powi(2),
            pre: [x[2], x[3], x[4]],
            post: [x[5], x[6], x[7]],
        }
    }

    /// Canonical-form quantum capacity (pre/post unitaries do not change it).
    pub fn capacity(&self) -> f64 {
        canonical_capacity(self.u, self.v)
    }

    fn kraus(&self) -> [CMatrix; 2] {
        let (su, cu) = self.u.sin_cos();
        let (sv, cv) = self.v.sin_cos();
        let k1 = CMatrix::from_real(2, 2, &[cv, 0.0, 0.0, cu]).expect("2x2");
        let k2 = CMatrix::from_real(2, 2, &[0.0, su, sv, 0.0]).expect("2x2");
        let pre = su2(self.pre);
        let post = su2(self.post);
        [post.matmul(&k1).matmul(&pre), post.matmul(&k2).matmul(&pre)]
    }
}

/// `exp(−i (a·σ)/2)` for a rotation vector `a`.
pub fn su2(a: [f64; 3]) -> CMatrix {
    let theta = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if theta == 0.0 {
        return CMatrix::identity(2);
    }
    let (s, co) = (theta / 2.0).sin_cos();
    let sig = pauli::sigma();
    let mut gen = CMatrix::zeros(2, 2);
    for k in 0..3 {
        gen = &gen + &sig[k].scale(a[k] / theta);
    }
    &CMatrix::identity(2).scale(co) + &gen.scale_c(c(0.0, -s))
}

/// `U_post ∘ Φ_{u,v} ∘ U_pre`.
pub fn gen_extreme_channel(params: &GenExtremeParams) -> Result<QChannel> {
    params.validate()?;
    QChannel::new(params.kraus().to_vec())
}

/// `I_c` of `Φ_{u,v}` at the diagonal input `diag(a, 1−a)`.
fn canonical_coherent_info(u: f64, v: f64, a: f64) -> f64 {
    let (cu2, su2_) = (u.cos().powi(2), u.sin().powi(2));
    let (cv2, _) = (v.cos().powi(2), v.sin().powi(2));
    let b = 1.0 - a;
    binary_entropy(a * cv2 + b * su2_) - binary_entropy(a * cv2 + b * cu2)
}

/// `Q(Φ_{u,v}) = max(0, max_a I_c(diag(a, 1−a), Φ_{u,v}))`.
pub fn canonical_capacity(u: f64, v: f64) -> f64 {
    const GRID: usize = 32;
    let f = |a: f64| canonical_coherent_info(u, v, a);
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let val = f(i as f64 / GRID as f64);
        if val > best {
            best = val;
            best_i = i;
        }
    }
    // golden-section refinement on the bracketing cells
    let h = 1.0 / GRID as f64;
    let mut lo = (best_i as f64 - 1.0).max(0.0) * h;
    let mut hi = (best_i as f64 + 1.0).min(GRID as f64) * h;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    best.max(f1).max(f2).max(0.0)
}

/// Quantum capacity of a qubit channel of Choi rank ≤ 2: `max(0, Q_V)`.
pub fn q_cap_rank2(ch: &QChannel, cfg: &OptimizerConfig) -> Result<f64> {
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(Error::Precondition(
            "rank-2 capacity needs a qubit channel".into(),
        ));
    }
    let r = ch.rank();
    if r > 2 {
        return Err(Error::Precondition(format!(
            "channel has Choi rank {r}; generalized extreme channels have rank ≤ 2"
        )));
    }
    Ok(q5_one_shot(ch, cfg)?.value.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    /// Weight of `ge1`.
    pub p: f64,
    pub ge1: GenExtremeParams,
    pub ge2: GenExtremeParams,
    /// Choi Frobenius distance between the mixture and the target.
    pub residual: f64,
    /// `p·Q(Φ₁) + (1−p)·Q(Φ₂)`.
    pub bound: f64,
}

impl DecompositionResult {
    /// `p·Φ₁ + (1−p)·Φ₂`.
    pub fn mixture(&self) -> Result<QChannel> {
        gen_extreme_channel(&self.ge1)?.mix(self.p, &gen_extreme_channel(&self.ge2)?)
    }

    /// Residual recomputed from the parameters.
    pub fn recompute_residual(&self, target: &QChannel) -> Result<f64> {
        self.mixture()?.choi_distance(target)
    }

    pub fn accepted(&self) -> bool {
        self.residual <= RESIDUAL_TOL
    }
}

/// Outcome of the multi-start decomposition search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionSearch {
    /// Lowest bound among accepted decompositions, else the lowest-residual attempt.
    pub best: DecompositionResult,
    pub accepted: bool,
    /// Number of restarts that met the residual threshold.
    pub accepted_restarts: usize,
    pub diagnostics: Diagnostics,
}

impl DecompositionSearch {
    /// `Q_III^UB`, floored at 0; `None` when no decomposition met the threshold.
    pub fn bound(&self) -> Option<f64> {
        self.accepted.then(|| self.best.bound.max(0.0))
    }
}

const N_PARAMS: usize = 17;

struct Objective<'a> {
    target: &'a CMatrix,
}

impl Objective<'_> {
    fn decode(x: &[f64]) -> (f64, GenExtremeParams, GenExtremeParams) {
        (
            x[0].sin().powi(2),
            GenExtremeParams::from_raw(&x[1..9]),
            GenExtremeParams::from_raw(&x[9..17]),
        )
    }

    fn residual(&self, p: f64, g1: &GenExtremeParams, g2: &GenExtremeParams) -> f64 {
        // Choi of Σ w K ρ K† built from the vectorized Kraus operators
        let mut diff = self.target.scale(-1.0);
        for (w, g) in [(p, g1), (1.0 - p, g2)] {
            for k in g.kraus() {
                let v = k.as_slice();
                for r in 0..4 {
                    for col in 0..4 {
                        diff[(r, col)] += v[r] * v[col].conj() * (0.5 * w);
                    }
                }
            }
        }
        diff.frobenius_norm()
    }

    fn evaluate(&self, x: &[f64]) -> (DecompositionResult, f64) {
        let (p, ge1, ge2) = Self::decode(x);
        let residual = self.residual(p, &ge1, &ge2);
        let bound = p * ge1.capacity() + (1.0 - p) * ge2.capacity();
        (
            DecompositionResult {
                p,
                ge1,
                ge2,
                residual,
                bound,
            },
            residual,
        )
    }
}

fn random_start(rng: &mut impl Rng) -> Vec<f64> {
    use std::f64::consts::PI;
    let mut x = Vec::with_capacity(N_PARAMS);
    x.push(rng.random_range(0.3..1.27)); // p roughly in [0.1, 0.9]
    for _ in 0..2 {
        x.push(rng.random_range(0.0..PI / 2.0));
        x.push(rng.random_range(0.0..PI / 2.0));
        for _ in 0..6 {
            x.push(rng.random_range(-PI..PI));
        }
    }
    x
}

fn random_simplex(x0: &[f64], step: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        let s = step * rng.random_range(0.5..1.5);
        v[i] += if rng.random::<bool>() { s } else { -s };
        simplex.push(v);
    }
    simplex
}

/// Multi-start penalized search for `Φ = p·Φ₁ + (1−p)·Φ₂`.
///
/// Each restart minimizes `bound + μ·residual` over the 17 raw parameters
/// while `μ` climbs [`PENALTY_LADDER`]; every stage restarts the simplex
/// around the incumbent with a smaller step. Restart `i` draws from ChaCha
/// stream `i` of `cfg.seed`. The search stops early once an accepted
/// decomposition reaches bound 0.
pub fn decompose_channel(ch: &QChannel, cfg: &OptimizerConfig) -> Result<DecompositionSearch> {
    cfg.validate()?;
    if ch.d_in() != 2 || ch.d_out() != 2 {
        return Err(Error::Precondition(
            "decomposition needs a qubit channel".into(),
        ));
    }
    let target = ch.choi().matrix;
    let obj = Objective { target: &target };
    let nm = NelderMead::new(cfg.max_iters, cfg.tol);

    let mut best_accepted: Option<(usize, DecompositionResult, Diagnostics)> = None;
    let mut best_attempt: Option<(usize, DecompositionResult, Diagnostics)> = None;
    let mut accepted_restarts = 0;

    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let mut x = random_start(&mut rng);
        let mut iterations = 0;
        let mut converged = false;
        let steps = [0.6, 0.3, 0.1, 0.03];
        for (&mu, &step) in PENALTY_LADDER.iter().zip(&steps) {
            let run = nm.minimize(
                |x| {
                    let (r, res) = obj.evaluate(x);
                    r.bound + mu * res
                },
                random_simplex(&x, step, &mut rng),
            );
            iterations += run.iterations;
            converged = run.converged;
            x = run.x;
        }
        let (result, _) = obj.evaluate(&x);
        let diag = Diagnostics {
            iterations,
            best_restart: restart,
            converged,
        };
        log::trace!(
            "decomposition restart {restart}: residual {:.3e}, bound {:.6}",
            result.residual,
            result.bound
        );
        if result.accepted() {
            accepted_restarts += 1;
            let better = best_accepted
                .as_ref()
                .is_none_or(|(_, b, _)| result.bound < b.bound);
            if better {
                best_accepted = Some((restart, result, diag));
            }
            if result.bound <= 0.0 {
                // bounds are non-negative: no later restart can do better
                best_attempt = None;
                break;
            }
        }
        let closer = best_attempt
            .as_ref()
            .is_none_or(|(_, b, _)| result.residual < b.residual);
        if closer {
            best_attempt = Some((restart, result, diag));
        }
    }

    let accepted = best_accepted.is_some();
    let (_, best, diagnostics) = best_accepted
        .or(best_attempt)
        .expect("at least one restart");
    Ok(DecompositionSearch {
        best,
        accepted,
        accepted_restarts,
        diagnostics,
    })
}

/// `Q_III^UB(Φ)`: the best accepted decomposition bound, floored at 0.
pub fn q3_upper_bound(ch: &QChannel, cfg: &OptimizerConfig) -> Result<DecompositionSearch> {
    decompose_channel(ch, cfg)
}
