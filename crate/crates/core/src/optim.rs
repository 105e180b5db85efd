//! Derivative-free Nelder–Mead simplex minimization.
//!
//! Above five dimensions the adaptive coefficients of Gao & Han are used,
//! which keep the simplex from collapsing in the 17-parameter decomposition
//! search.

/// Result of a single simplex run.
#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_iters: usize,
    /// Convergence when `f_worst − f_best ≤ f_tol`.
    pub f_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iters: 2000,
            f_tol: 1e-9,
        }
    }
}

/// Axis-aligned simplex around `x0`.
pub fn axis_simplex(x0: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    simplex
}

struct Coefficients {
    reflect: f64,
    expand: f64,
    contract: f64,
    shrink: f64,
}

impl Coefficients {
    fn for_dim(n: usize) -> Self {
        if n <= 5 {
            Coefficients {
                reflect: 1.0,
                expand: 2.0,
                contract: 0.5,
                shrink: 0.5,
            }
        } else {
            let n = n as f64;
            Coefficients {
                reflect: 1.0,
                expand: 1.0 + 2.0 / n,
                contract: 0.75 - 1.0 / (2.0 * n),
                shrink: 1.0 - 1.0 / n,
            }
        }
    }
}

impl NelderMead {
    pub fn new(max_iters: usize, f_tol: f64) -> Self {
        NelderMead { max_iters, f_tol }
    }

    /// Minimizes `f` from the given `n + 1` simplex vertices.
    ///
    /// Non-finite objective values are treated as `+∞`.
    pub fn minimize<F>(&self, mut f: F, simplex: Vec<Vec<f64>>) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = simplex.len().saturating_sub(1);
        assert!(
            simplex.iter().all(|v| v.len() == n),
            "simplex needs n+1 vertices of dimension n"
        );
        let mut eval = |x: &[f64]| {
            let v = f(x);
            if v.is_finite() {
                v
            } else {
                f64::INFINITY
            }
        };

        let coef = Coefficients::for_dim(n);
        let mut pts = simplex;
        let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
        let mut evaluations = pts.len();
        let mut iterations = 0;
        let mut converged = false;

        let mut order: Vec<usize> = (0..=n).collect();
        loop {
            order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            let best = order[0];
            let worst = order[n];
            if n == 0 || vals[worst] - vals[best] <= self.f_tol {
                converged = true;
                break;
            }
            if iterations >= self.max_iters {
                break;
            }
            iterations += 1;

            let second_worst = order[n - 1];
            let mut centroid = vec![0.0; n];
            for &i in &order[..n] {
                for (c, x) in centroid.iter_mut().zip(&pts[i]) {
                    *c += x;
                }
            }
            centroid.iter_mut().for_each(|c| *c /= n as f64);

            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&pts[worst])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(coef.reflect);
            let fr = eval(&xr);
            evaluations += 1;

            if fr < vals[best] {
                let xe = along(coef.reflect * coef.expand);
                let fe = eval(&xe);
                evaluations += 1;
                if fe < fr {
                    pts[worst] = xe;
                    vals[worst] = fe;
                } else {
                    pts[worst] = xr;
                    vals[worst] = fr;
                }
                continue;
            }
            if fr < vals[second_worst] {
                pts[worst] = xr;
                vals[worst] = fr;
                continue;
            }
            let (xc, fc) = if fr < vals[worst] {
                let xc = along(coef.reflect * coef.contract);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-coef.contract);
                let fc = eval(&xc);
                (xc, fc)
            };
            evaluations += 1;
            if fc < vals[worst].min(fr) {
                pts[worst] = xc;
                vals[worst] = fc;
                continue;
            }
            // shrink towards the best vertex
            let anchor = pts[best].clone();
            for i in 0..=n {
                if i == best {
                    continue;
                }
                for (x, a) in pts[i].iter_mut().zip(&anchor) {
                    *x = a + coef.shrink * (*x - a);
                }
                vals[i] = eval(&pts[i]);
                evaluations += 1;
            }
        }

        let best = order[0];
        Minimum {
            x: pts[best].clone(),
            value: vals[best],
            iterations,
            evaluations,
            converged,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead::new(5000, 1e-14);
        let m = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            axis_simplex(&[-1.2, 1.0], 0.5),
        );
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn quadratic_in_ten_dimensions() {
        let nm = NelderMead::new(20000, 1e-16);
        let m = nm.minimize(
            |x| {
                x.iter()
                    .enumerate()
                    .map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2))
                    .sum()
            },
            axis_simplex(&[0.0; 10], 0.7),
        );
        assert!(m.value < 1e-10, "{}", m.value);
    }

    #[test]
    fn constant_converges_immediately() {
        let m = NelderMead::default().minimize(|_| 0.0, axis_simplex(&[0.3, 0.1, 2.0], 1.0));
        assert!(m.converged);
        assert_eq!(m.iterations, 0);
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn nan_is_avoided() {
        let m = NelderMead::default().minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 1.0).powi(2)
                }
            },
            axis_simplex(&[2.0], 0.5),
        );
        assert!((m.x[0] - 1.0).abs() < 1e-3);
    }
}
