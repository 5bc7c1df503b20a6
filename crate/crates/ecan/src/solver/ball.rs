//! Barrier solver for convex objectives over the unit ball.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::engine::{center, CenteringProblem};
use super::{BarrierParams, Solution, SolveStatus, SolverError};
use crate::tol;

/// Program `minimize cᵀx − Σ wᵢ·log(dᵢᵀx)` subject to `‖x‖₂ ≤ 1`. The log
/// terms keep their half-space constraints `dᵢᵀx > 0` implicit: the
/// objective tends to +∞ as any `dᵢᵀx → 0⁺`.
#[derive(Debug, Clone)]
pub struct BallProgram {
    pub n: usize,
    pub linear: DVector<f64>,
    pub logs: Vec<(f64, DVector<f64>)>,
}

impl BallProgram {
    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.linear.dot(x);
        for (w, d) in &self.logs {
            v -= w * d.dot(x).ln();
        }
        v
    }

    pub fn in_domain(&self, x: &DVector<f64>) -> bool {
        x.norm_squared() < 1.0 && self.logs.iter().all(|(_, d)| d.dot(x) > 0.0)
    }
}

struct BallModel<'a> {
    prog: &'a BallProgram,
}

impl BallModel<'_> {
    fn central_residual(&self, x: &DVector<f64>, mu: f64) -> f64 {
        let n = self.prog.n;
        let mut g = DVector::zeros(n);
        let mut h = DMatrix::zeros(n, n);
        self.add_derivatives(x, mu, &mut g, &mut h);
        g.norm() / mu
    }
}

impl CenteringProblem for BallModel<'_> {
    fn dim(&self) -> usize {
        self.prog.n
    }

    fn constraint_count(&self) -> f64 {
        1.0
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        self.prog.objective_value(x)
    }

    fn barrier(&self, x: &DVector<f64>) -> Option<f64> {
        let ball_slack = 1.0 - x.norm_squared();
        if !(ball_slack > 0.0) {
            return None;
        }
        for (_, d) in &self.prog.logs {
            if !(d.dot(x) > 0.0) {
                return None;
            }
        }
        Some(-ball_slack.ln())
    }

    fn add_derivatives(
        &self,
        x: &DVector<f64>,
        mu: f64,
        g: &mut DVector<f64>,
        h: &mut DMatrix<f64>,
    ) {
        g.axpy(mu, &self.prog.linear, 1.0);
        for (w, d) in &self.prog.logs {
            let inv = 1.0 / d.dot(x);
            g.axpy(-mu * w * inv, d, 1.0);
            h.ger(mu * w * inv * inv, d, d, 1.0);
        }
        let slack = 1.0 - x.norm_squared();
        let inv = 1.0 / slack;
        g.axpy(2.0 * inv, x, 1.0);
        h.ger(4.0 * inv * inv, x, x, 1.0);
        for i in 0..self.prog.n {
            h[(i, i)] += 2.0 * inv;
        }
    }
}

/// Solves the program from a strictly feasible start. The default schedule
/// runs the ball barrier tighter than the cone one so that boundary optima
/// land within 1e-8 of the unit sphere.
pub fn solve_ball(prog: &BallProgram, x0: &DVector<f64>) -> Result<Solution, SolverError> {
    let params = BarrierParams {
        gap_tol: 1e-9,
        ..BarrierParams::default()
    };
    solve_ball_with(prog, x0, &params)
}

pub fn solve_ball_with(
    prog: &BallProgram,
    x0: &DVector<f64>,
    params: &BarrierParams,
) -> Result<Solution, SolverError> {
    if prog.linear.len() != prog.n || prog.logs.iter().any(|(_, d)| d.len() != prog.n) {
        return Err(SolverError::BadProgram("coefficient length mismatch".into()));
    }
    if x0.len() != prog.n {
        return Err(SolverError::BadProgram(format!(
            "start has {} entries, expected {}",
            x0.len(),
            prog.n
        )));
    }
    if !prog.in_domain(x0) {
        return Err(SolverError::DomainViolation);
    }

    let started = Instant::now();
    let model = BallModel { prog };
    let mut x = x0.clone();
    let mut mu = params.mu0;
    let mut total_steps = 0usize;
    let mut outer_objectives = Vec::new();
    let mut reached_gap = false;
    let no_exit = |_: &DVector<f64>| false;

    for _ in 0..params.max_outer {
        let out = center(&model, &mut x, mu, params.newton_tol, params, &no_exit);
        total_steps += out.newton_steps;
        outer_objectives.push(prog.objective_value(&x));
        if model.constraint_count() / mu <= params.gap_tol {
            reached_gap = true;
            break;
        }
        mu *= params.kappa;
    }

    let out = center(&model, &mut x, mu, 1e-14, params, &no_exit);
    total_steps += out.newton_steps;
    let kkt_residual = super::kkt::check_kkt_ball(prog, &x).min(model.central_residual(&x, mu));

    let status = if reached_gap && kkt_residual <= tol::KKT {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIterations
    };

    Ok(Solution {
        objective_value: prog.objective_value(&x),
        x,
        status,
        kkt_residual,
        gap_estimate: 1.0 / mu,
        iterations: total_steps,
        wall_time: started.elapsed().as_secs_f64(),
        phase1_slack: None,
        outer_objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    #[test]
    fn linear_objective_maximizes_along_direction() {
        // maximize x·(1,0) over the unit disk.
        let prog = BallProgram {
            n: 2,
            linear: dv(&[-1.0, 0.0]),
            logs: vec![],
        };
        let sol = solve_ball(&prog, &dv(&[0.0, 0.0])).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() <= 1e-7, "x = {:?}", sol.x);
        assert!(sol.x[1].abs() <= 1e-7);
    }

    #[test]
    fn log_tradeoff_reproduces_golden_ratio_point() {
        // minimize −x − log(y) on the disk: cos θ = (√5−1)/2.
        let prog = BallProgram {
            n: 2,
            linear: dv(&[-1.0, 0.0]),
            logs: vec![(1.0, dv(&[0.0, 1.0]))],
        };
        let start = dv(&[0.5, 0.5]);
        let sol = solve_ball(&prog, &start).unwrap();
        let c = (5.0f64.sqrt() - 1.0) / 2.0;
        let s = (1.0 - c * c).sqrt();
        assert!((sol.x[0] - c).abs() <= 1e-6, "{:?}", sol.x);
        assert!((sol.x[1] - s).abs() <= 1e-6, "{:?}", sol.x);
        let norm = sol.x.norm();
        assert!((1.0 - 1e-7..=1.0).contains(&norm), "norm = {norm}");
    }

    #[test]
    fn start_outside_domain_is_rejected() {
        let prog = BallProgram {
            n: 2,
            linear: dv(&[-1.0, 0.0]),
            logs: vec![(1.0, dv(&[0.0, 1.0]))],
        };
        assert!(matches!(
            solve_ball(&prog, &dv(&[0.5, -0.5])),
            Err(SolverError::DomainViolation)
        ));
        assert!(matches!(
            solve_ball(&prog, &dv(&[1.5, 0.5])),
            Err(SolverError::DomainViolation)
        ));
    }
}
