//! Capacity formulas for the four coding models and the one-shot coherent information.
//!
//! | quantity | formula |
//! |---|---|
//! | `Q_I`  | `I(Φ) = I_c(π, Φ)` (reported unfloored) |
//! | `Q_II` | `(log₂ d + I(Φ)) / 2` |
//! | `Q_IV` | `J(Φ) / 2`, `J(Φ) = max_ρ J(ρ, Φ)` |
//! | `Q_V`  | `max_ρ I_c(ρ, Φ)` |
//!
//! The EA classical capacities follow as `C_II = log₂ d + I(Φ)` and `C_IV = J(Φ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{bloch_state, QChannel};
use crate::entropic::{self, coherent_information_unchecked, mutual_information_unchecked};
use crate::linalg::{c, CMatrix};
use crate::optim::{axis_simplex, Minimum, NelderMead};
use crate::{Error, Result};

/// Settings of the multi-start simplex search over input states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Simplex spread in objective value at which a run stops.
    pub tol: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 16,
            max_iters: 2000,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(self, seed: u64) -> Self {
        OptimizerConfig { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Precondition(
                "at least one restart is required".into(),
            ));
        }
        if self.max_iters == 0 || self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Precondition(
                "max_iters must be positive and tol > 0".into(),
            ));
        }
        Ok(())
    }
}

const MAX_POLISH: usize = 4;
const POLISH_STEP: f64 = 0.1;

/// How the best value of an optimized quantity was found.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Simplex iterations of the winning restart.
    pub iterations: usize,
    pub best_restart: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct InputOptimum {
    pub state: CMatrix,
    pub value: f64,
    pub diagnostics: Diagnostics,
    /// Best value reached by each restart, in restart order.
    pub restart_values: Vec<f64>,
}

/// Maps unconstrained parameters onto density matrices.
#[derive(Debug, Clone, Copy)]
enum Parametrization {
    /// Bloch vector `w / max(1, |w|)`, with [`Parametrization::penalty`]
    /// charging the radial excess so that points outside the ball are worse
    /// than their projection. Unlike polar angles this map has no singular
    /// points, which matters when the optimum sits near `π`.
    Bloch,
    /// `ρ = AA†/tr(AA†)` with `A` built from `2d²` reals.
    Gram(usize),
}

impl Parametrization {
    fn for_dim(d: usize) -> Self {
        if d == 2 {
            Parametrization::Bloch
        } else {
            Parametrization::Gram(d)
        }
    }

    fn n_params(self) -> usize {
        match self {
            Parametrization::Bloch => 3,
            Parametrization::Gram(d) => 2 * d * d,
        }
    }

    fn state(self, x: &[f64]) -> CMatrix {
        match self {
            Parametrization::Bloch => {
                let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().max(1.0);
                bloch_state([x[0] / norm, x[1] / norm, x[2] / norm])
            }
            Parametrization::Gram(d) => {
                let a = CMatrix::from_fn(d, d, |i, j| {
                    let k = 2 * (i * d + j);
                    c(x[k], x[k + 1])
                });
                let m = a.matmul(&a.adjoint());
                let tr = m.trace().re;
                if tr <= 1e-300 {
                    CMatrix::maximally_mixed(d)
                } else {
                    m.scale(1.0 / tr).hermitian_part()
                }
            }
        }
    }

    /// Added to the minimized objective; zero wherever optima can lie.
    fn penalty(self, x: &[f64]) -> f64 {
        match self {
            Parametrization::Bloch => {
                let excess = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt() - 1.0;
                excess.max(0.0).powi(2)
            }
            Parametrization::Gram(_) => 0.0,
        }
    }

    /// Parameters of `π_d`.
    fn maximally_mixed(self) -> Vec<f64> {
        match self {
            Parametrization::Bloch => vec![0.0, 0.0, 0.0],
            Parametrization::Gram(d) => {
                let mut x = vec![0.0; 2 * d * d];
                for i in 0..d {
                    x[2 * (i * d + i)] = 1.0;
                }
                x
            }
        }
    }

    /// Parameters of the pure state `|0⟩⟨0|`.
    fn pure(self) -> Vec<f64> {
        match self {
            Parametrization::Bloch => vec![0.0, 0.0, 1.0],
            Parametrization::Gram(d) => {
                let mut x = vec![0.0; 2 * d * d];
                x[0] = 1.0;
                x
            }
        }
    }

    fn random(self, rng: &mut impl Rng) -> Vec<f64> {
        match self {
            Parametrization::Bloch => (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
            Parametrization::Gram(d) => (0..2 * d * d)
                .map(|_| rng.random_range(-1.0..1.0))
                .collect(),
        }
    }
}

/// Maximizes `objective` over `d`-dimensional density matrices.
///
/// Restart 0 starts at `π_d`, restart 1 at a pure state, the remaining ones
/// at seeded random points; restart `i` draws from ChaCha stream `i` of
/// `cfg.seed`, so results depend only on `(objective, d, cfg)`.
pub fn optimize_input<F>(objective: F, d: usize, cfg: &OptimizerConfig) -> Result<InputOptimum>
where
    F: Fn(&CMatrix) -> f64,
{
    cfg.validate()?;
    if d == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    let param = Parametrization::for_dim(d);
    let n = param.n_params();
    let nm = NelderMead::new(cfg.max_iters, cfg.tol);

    let mut best: Option<(usize, Minimum)> = None;
    let mut restart_values = Vec::with_capacity(cfg.restarts);
    for restart in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(restart as u64);
        let x0 = match restart {
            0 => param.maximally_mixed(),
            1 => param.pure(),
            _ => param.random(&mut rng),
        };
        let mut simplex = vec![x0.clone()];
        for i in 0..n {
            let mut v = x0.clone();
            let step = rng.random_range(0.25..0.75);
            v[i] += if rng.random::<bool>() { step } else { -step };
            simplex.push(v);
        }
        let f = |x: &[f64]| param.penalty(x) - objective(&param.state(x));
        let mut run = nm.minimize(f, simplex);
        // a collapsed simplex can stop short of the optimum;
        // restart it around the incumbent until that stops paying off
        for _ in 0..MAX_POLISH {
            let again = nm.minimize(f, axis_simplex(&run.x, POLISH_STEP));
            let gain = run.value - again.value;
            let iterations = run.iterations + again.iterations;
            if gain > 0.0 {
                run = Minimum {
                    iterations,
                    ..again
                };
            } else {
                run.iterations = iterations;
            }
            if gain <= cfg.tol {
                break;
            }
        }
        restart_values.push(objective(&param.state(&run.x)));
        let better = match &best {
            None => true,
            Some((_, b)) => run.value < b.value,
        };
        if better {
            best = Some((restart, run));
        }
    }
    let (best_restart, run) = best.expect("restarts >= 1");
    let state = param.state(&run.x);
    Ok(InputOptimum {
        value: objective(&state),
        state,
        diagnostics: Diagnostics {
            iterations: run.iterations,
            best_restart,
            converged: run.converged,
        },
        restart_values,
    })
}

/// `Q_I(Φ) = I(Φ)`, unfloored.
pub fn q1_capacity(ch: &QChannel) -> f64 {
    entropic::i_of_channel(ch)
}

/// `max(0, Q_I)`, the capacity reading of model I.
pub fn q1_capacity_floored(ch: &QChannel) -> f64 {
    q1_capacity(ch).max(0.0)
}

/// `Q_II(Φ) = (log₂ d + I(Φ)) / 2`.
pub fn q2_capacity(ch: &QChannel) -> f64 {
    q2_from_q1(ch.d_in(), q1_capacity(ch))
}

pub fn q2_from_q1(d_in: usize, q1: f64) -> f64 {
    ((d_in as f64).log2() + q1) / 2.0
}

/// One-shot coherent information `Q_V(Φ) = max_ρ I_c(ρ, Φ)`.
pub fn q5_one_shot(ch: &QChannel, cfg: &OptimizerConfig) -> Result<InputOptimum> {
    optimize_input(
        |rho| coherent_information_unchecked(rho, ch),
        ch.d_in(),
        cfg,
    )
}

/// `J(Φ) = max_ρ J(ρ, Φ)`.
pub fn max_mutual_information(ch: &QChannel, cfg: &OptimizerConfig) -> Result<InputOptimum> {
    optimize_input(|rho| mutual_information_unchecked(rho, ch), ch.d_in(), cfg)
}

/// `Q_IV(Φ) = J(Φ)/2`; the returned optimum carries the halved value.
pub fn q4_capacity(ch: &QChannel, cfg: &OptimizerConfig) -> Result<InputOptimum> {
    let mut opt = max_mutual_information(ch, cfg)?;
    opt.value /= 2.0;
    opt.restart_values.iter_mut().for_each(|v| *v /= 2.0);
    Ok(opt)
}

/// Entanglement-assisted classical capacities `(C_II, C_IV) = (log₂ d + I(Φ), J(Φ))`.
pub fn ea_classical(ch: &QChannel, cfg: &OptimizerConfig) -> Result<(f64, f64)> {
    let c2 = 2.0 * q2_capacity(ch);
    let c4 = max_mutual_information(ch, cfg)?.value;
    Ok((c2, c4))
}

/// All capacities, gaps and descriptors of one channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub d: usize,
    pub rank: usize,
    /// `|t|`, qubit channels only.
    pub t_norm: Option<f64>,
    /// `‖T‖_F`, qubit channels only.
    pub t_frob: Option<f64>,
    pub q1: f64,
    pub q2: f64,
    pub q4: f64,
    pub q5: f64,
    pub q3_ub: Option<f64>,
    pub dq15: f64,
    pub dq25: f64,
    pub dq24: f64,
    pub dq23: Option<f64>,
    pub dq34: Option<f64>,
    pub q4_diag: Diagnostics,
    pub q5_diag: Diagnostics,
    pub q3_diag: Option<Diagnostics>,
    pub optimizer: OptimizerConfig,
}

impl CapacityReport {
    /// Computes everything except the model-III bound.
    pub fn compute(ch: &QChannel, cfg: &OptimizerConfig) -> Result<Self> {
        let (t_norm, t_frob) = if ch.d_in() == 2 && ch.d_out() == 2 {
            let a = ch.affine()?;
            (Some(a.t_norm()), Some(a.t_frob()))
        } else {
            (None, None)
        };
        let q1 = q1_capacity(ch);
        let q2 = q2_from_q1(ch.d_in(), q1);
        let q5 = q5_one_shot(ch, cfg)?;
        let q4 = q4_capacity(ch, cfg)?;
        Ok(CapacityReport {
            d: ch.d_in(),
            rank: ch.rank(),
            t_norm,
            t_frob,
            q1,
            q2,
            q4: q4.value,
            q5: q5.value,
            q3_ub: None,
            dq15: q5.value - q1,
            dq25: q2 - q5.value,
            dq24: q4.value - q2,
            dq23: None,
            dq34: None,
            q4_diag: q4.diagnostics,
            q5_diag: q5.diagnostics,
            q3_diag: None,
            optimizer: *cfg,
        })
    }

    /// Records the model-III upper bound (or its absence) and the dependent gaps.
    pub fn set_q3_upper_bound(&mut self, bound: Option<f64>, diag: Option<Diagnostics>) {
        self.q3_ub = bound;
        self.dq23 = bound.map(|b| b - self.q2);
        self.dq34 = bound.map(|b| self.q4 - b);
        self.q3_diag = diag;
    }

    /// `C_II`, `C_IV`.
    pub fn ea_classical(&self) -> (f64, f64) {
        (2.0 * self.q2, 2.0 * self.q4)
    }
}
