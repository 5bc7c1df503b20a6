//! Damped-Newton centering shared by the cone and ball solvers.

use nalgebra::{DMatrix, DVector};

use super::BarrierParams;

/// A barrier subproblem `minimize μ·f(x) + φ(x)` over an open domain.
pub(super) trait CenteringProblem {
    fn dim(&self) -> usize;
    /// Barrier complexity: the duality-gap estimate is this over μ.
    fn constraint_count(&self) -> f64;
    fn objective(&self, x: &DVector<f64>) -> f64;
    /// Barrier value, `None` outside the domain.
    fn barrier(&self, x: &DVector<f64>) -> Option<f64>;
    /// Accumulates `∇(μf + φ)` and `∇²(μf + φ)` at an in-domain point.
    fn add_derivatives(&self, x: &DVector<f64>, mu: f64, g: &mut DVector<f64>, h: &mut DMatrix<f64>);
}

pub(super) struct CenterOutcome {
    pub newton_steps: usize,
    pub early_exit: bool,
}

/// Minimizes `μ·f + φ` from a strictly feasible `x` in place. Stops when the
/// Newton decrement satisfies `λ²/2 ≤ newton_tol`, when `max_newton` steps
/// are spent, or when `early_exit` fires.
pub(super) fn center<P: CenteringProblem>(
    problem: &P,
    x: &mut DVector<f64>,
    mu: f64,
    newton_tol: f64,
    params: &BarrierParams,
    early_exit: &dyn Fn(&DVector<f64>) -> bool,
) -> CenterOutcome {
    let n = problem.dim();
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);

    for step in 0..params.max_newton {
        if early_exit(x) {
            return CenterOutcome {
                newton_steps: step,
                early_exit: true,
            };
        }

        g.fill(0.0);
        h.fill(0.0);
        problem.add_derivatives(x, mu, &mut g, &mut h);

        let delta = match solve_newton_system(&h, &g) {
            Some(d) => d,
            None => {
                return CenterOutcome {
                    newton_steps: step,
                    early_exit: false,
                }
            }
        };

        let decrement = -g.dot(&delta);
        if decrement * 0.5 <= newton_tol {
            return CenterOutcome {
                newton_steps: step,
                early_exit: false,
            };
        }

        let mut t = 1.0;
        if let Some(cap) = params.max_step {
            let limit = cap * (1.0 + x.norm());
            let len = delta.norm();
            if len > limit {
                t = limit / len;
            }
        }

        // Inside the quadratic convergence region a full step is valid and
        // avoids line-search comparisons that float cancellation at large μ
        // would otherwise drown out.
        if decrement < 0.05 && t == 1.0 {
            let candidate = x.clone() + &delta;
            if problem.barrier(&candidate).is_some() {
                *x = candidate;
                continue;
            }
        }

        let f0 = mu * problem.objective(x) + problem.barrier(x).unwrap_or(f64::INFINITY);
        let slope = g.dot(&delta);
        let mut accepted = false;
        for _ in 0..80 {
            let candidate = x.clone() + &delta * t;
            if let Some(phi) = problem.barrier(&candidate) {
                let f1 = mu * problem.objective(&candidate) + phi;
                if f1 <= f0 + 0.25 * t * slope {
                    *x = candidate;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // The line search exhausted itself against the domain wall or
            // rounding noise; the iterate is as centered as float precision
            // allows.
            return CenterOutcome {
                newton_steps: step,
                early_exit: false,
            };
        }
    }

    CenterOutcome {
        newton_steps: params.max_newton,
        early_exit: false,
    }
}

/// Solves `H·d = −g` by Cholesky, escalating a diagonal regularization when
/// the Hessian is numerically semidefinite, with an LU last resort.
fn solve_newton_system(h: &DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let n = h.nrows();
    let mut diag_scale = 0.0f64;
    for i in 0..n {
        diag_scale = diag_scale.max(h[(i, i)].abs());
    }
    let mut reg = 0.0;
    for attempt in 0..7 {
        let mut m = h.clone();
        if reg > 0.0 {
            for i in 0..n {
                m[(i, i)] += reg;
            }
        }
        if let Some(chol) = m.cholesky() {
            return Some(chol.solve(&(-g)));
        }
        reg = diag_scale.max(1.0) * 1e-14 * 100f64.powi(attempt);
    }
    h.clone().lu().solve(&(-g))
}
