//! Small-dimension log-barrier interior-point engine.
//!
//! Two canonical problem shapes are supported. [`ConeProgram`] covers
//! smooth convex objectives over linear and convex-quadratic inequalities
//! with an optional small semidefinite block, absolute-value objective
//! terms being lifted through epigraph variables. [`BallProgram`] covers
//! objectives of the form `cᵀx − Σ wᵢ·log(dᵢᵀx)` over the unit ball.

mod ball;
mod cone;
mod engine;
mod kkt;

pub use ball::{solve_ball, BallProgram};
pub use cone::{is_strictly_feasible, solve_cone, ConeProgram, PsdBlock, QuadraticConstraint};
pub use kkt::{check_kkt_ball, check_kkt_cone};

use nalgebra::DVector;
use thiserror::Error;

use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("starting point violates the strict feasibility precondition ({0})")]
    InfeasibleStart(String),
    #[error("starting point outside the objective domain")]
    DomainViolation,
    #[error("program is malformed: {0}")]
    BadProgram(String),
}

/// Termination state of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIterations,
}

/// Result of a barrier solve.
#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Stationarity residual with multipliers recovered by nonnegative
    /// least squares on the active set.
    pub kkt_residual: f64,
    /// Barrier suboptimality estimate (constraint count over the final
    /// barrier parameter).
    pub gap_estimate: f64,
    /// Total Newton iterations across all outer barrier stages.
    pub iterations: usize,
    pub wall_time: f64,
    /// Optimal max-infeasibility slack of the phase-I subproblem, when one
    /// was solved.
    pub phase1_slack: Option<f64>,
    /// Objective value after each outer barrier stage, for monotonicity
    /// diagnostics.
    pub outer_objectives: Vec<f64>,
}

/// Barrier schedule. Defaults are sized for programs with at most a dozen
/// variables and a few thousand constraints.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    pub mu0: f64,
    pub kappa: f64,
    pub newton_tol: f64,
    pub gap_tol: f64,
    pub max_newton: usize,
    pub max_outer: usize,
    /// Newton step cap, relative to `1 + ‖x‖`. Used by phase-I, whose
    /// slack objective is scale-unbounded on feasible programs: uncapped
    /// steps can jump the iterate to a float range where constraint
    /// offsets round away.
    pub max_step: Option<f64>,
}

impl Default for BarrierParams {
    fn default() -> Self {
        Self {
            mu0: 1.0,
            kappa: 10.0,
            newton_tol: tol::NEWTON,
            gap_tol: tol::GAP,
            max_newton: 60,
            max_outer: 40,
            max_step: None,
        }
    }
}

/// Affine expression `coeffs·x + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTerm {
    pub coeffs: DVector<f64>,
    pub offset: f64,
}

impl LinearTerm {
    pub fn new(coeffs: DVector<f64>, offset: f64) -> Self {
        Self { coeffs, offset }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.coeffs.dot(x) + self.offset
    }
}

/// Convex quadratic `cᵀx + k + Σ wᵢ·(aᵢᵀx + bᵢ)²` with nonnegative weights.
#[derive(Debug, Clone, Default)]
pub struct QuadraticObjective {
    pub linear: Option<DVector<f64>>,
    pub constant: f64,
    pub squares: Vec<(f64, LinearTerm)>,
}

impl QuadraticObjective {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.constant;
        if let Some(c) = &self.linear {
            v += c.dot(x);
        }
        for (w, term) in &self.squares {
            let t = term.eval(x);
            v += w * t * t;
        }
        v
    }

    pub fn add_gradient(&self, x: &DVector<f64>, g: &mut DVector<f64>, scale: f64) {
        if let Some(c) = &self.linear {
            g.axpy(scale, c, 1.0);
        }
        for (w, term) in &self.squares {
            let t = term.eval(x);
            g.axpy(scale * 2.0 * w * t, &term.coeffs, 1.0);
        }
    }

    pub fn add_hessian(&self, _x: &DVector<f64>, h: &mut nalgebra::DMatrix<f64>, scale: f64) {
        for (w, term) in &self.squares {
            h.ger(scale * 2.0 * w, &term.coeffs, &term.coeffs, 1.0);
        }
    }
}
