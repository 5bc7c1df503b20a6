//! Ellipsoid fitting: the convex program that wraps the agent in an
//! ellipsoid, pushes every sensed obstacle point outside it and keeps the
//! goal on or beyond its boundary.
//!
//! With quadric variables `(P, q, r)` the fitted program is
//!
//! ```text
//! minimize    |Ψ(goal)| + α·Ψ(center)² + γ·Σᵢ Ψ(obstacleᵢ)
//! subject to  Ψ(agent point i) ≤ −1        (i = 1..m)
//!             Ψ(goal)          ≥ 0
//!             Ψ(obstacle i)    ≥ 1         (i = 1..k)
//!             P ⪰ I
//! ```
//!
//! Every constraint is affine in the variables, so the whole problem fits
//! the cone solver with one semidefinite block.

use nalgebra::{DVector, SMatrix, SVector};
use thiserror::Error;

use crate::geometry::Ellipsoid;
use crate::solver::{
    is_strictly_feasible, solve_cone, ConeProgram, LinearTerm, PsdBlock, QuadraticObjective,
    SolveStatus, SolverError,
};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TunnelError {
    #[error("invalid fit inputs: {0}")]
    InvalidInputs(String),
    #[error("no ellipsoid can separate the agent from the sensed obstacles (phase-I slack {slack:.3e})")]
    NoFeasibleEllipsoid { slack: f64 },
    #[error("fit did not converge to a feasible optimum (status {status:?})")]
    FitFailed { status: SolveStatus },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Inputs of one fitting step.
#[derive(Debug, Clone)]
pub struct FitInputs<const D: usize> {
    pub agent_points: Vec<SVector<f64, D>>,
    pub goal: SVector<f64, D>,
    pub obstacles: Vec<SVector<f64, D>>,
    pub alpha: f64,
    pub gamma: f64,
    pub agent_center: SVector<f64, D>,
}

impl<const D: usize> FitInputs<D> {
    pub fn validate(&self) -> Result<(), TunnelError> {
        if self.agent_points.is_empty() {
            return Err(TunnelError::InvalidInputs("no agent points".into()));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(TunnelError::InvalidInputs(format!(
                "alpha {} outside (0, 1]",
                self.alpha
            )));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1e-3) {
            return Err(TunnelError::InvalidInputs(format!(
                "gamma {} outside (0, 1e-3]",
                self.gamma
            )));
        }
        for o in &self.obstacles {
            for a in &self.agent_points {
                if (o - a).norm() <= tol::COINCIDENT {
                    return Err(TunnelError::InvalidInputs(format!(
                        "obstacle point {:?} coincides with an agent point; the \
                         agent is already in collision",
                        o.as_slice()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Variable layout: the packed upper triangle of `P`, then `q`, then `r`.
pub(crate) fn var_count(d: usize) -> usize {
    d * (d + 1) / 2 + d + 1
}

fn p_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!(i <= j && j < d);
    i * (2 * d - i + 1) / 2 + (j - i)
}

/// Coefficients of `Ψ(z)` as a linear functional of the packed variables.
fn psi_coeffs<const D: usize>(z: &SVector<f64, D>) -> DVector<f64> {
    let n = var_count(D);
    let mut c = DVector::zeros(n);
    for i in 0..D {
        for j in i..D {
            c[p_index(D, i, j)] = if i == j { z[i] * z[i] } else { 2.0 * z[i] * z[j] };
        }
    }
    for i in 0..D {
        c[D * (D + 1) / 2 + i] = z[i];
    }
    c[n - 1] = 1.0;
    c
}

fn unpack<const D: usize>(x: &DVector<f64>) -> Ellipsoid<D> {
    let mut p = SMatrix::<f64, D, D>::zeros();
    for i in 0..D {
        for j in i..D {
            let v = x[p_index(D, i, j)];
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    let q = SVector::<f64, D>::from_fn(|i, _| x[D * (D + 1) / 2 + i]);
    let r = x[var_count(D) - 1];
    Ellipsoid { p, q, r }
}

/// Normalized inequality row `coeffs·x + offset ≤ 0`; unit-norm rows keep
/// the barrier Hessian well conditioned regardless of coordinate scale.
fn normalized_row(coeffs: DVector<f64>, offset: f64) -> LinearTerm {
    let norm = coeffs.norm();
    LinearTerm::new(coeffs / norm, offset / norm)
}

/// Weight of the quadratic tie-break on the fit variables. Collinear
/// inputs (agent, goal and obstacles on one line) leave whole quadric
/// directions out of every constraint and objective term, so the optimal
/// face is unbounded; the tie-break selects its minimum-norm point, which
/// is the fattest ellipsoid, and keeps the barrier subproblems bounded.
const TIE_BREAK: f64 = 1e-9;

/// Assembles the fitting program. Assembly is total on validated inputs.
pub fn assemble_program<const D: usize>(inputs: &FitInputs<D>) -> ConeProgram {
    let n = var_count(D);
    let mut linear_le = Vec::with_capacity(inputs.agent_points.len() + 1 + inputs.obstacles.len());
    for a in &inputs.agent_points {
        linear_le.push(normalized_row(psi_coeffs(a), 1.0));
    }
    linear_le.push(normalized_row(-psi_coeffs(&inputs.goal), 0.0));
    let mut f3 = DVector::zeros(n);
    for o in &inputs.obstacles {
        let c = psi_coeffs(o);
        f3 += &c;
        linear_le.push(normalized_row(-c, 1.0));
    }
    f3 *= inputs.gamma;

    let entries = {
        let mut e = Vec::with_capacity(D * (D + 1) / 2);
        for i in 0..D {
            for j in i..D {
                e.push((i, j, p_index(D, i, j)));
            }
        }
        e
    };

    let mut squares = vec![(
        inputs.alpha,
        LinearTerm::new(psi_coeffs(&inputs.agent_center), 0.0),
    )];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        squares.push((TIE_BREAK, LinearTerm::new(e, 0.0)));
    }

    ConeProgram {
        n,
        objective: QuadraticObjective {
            linear: Some(f3),
            constant: 0.0,
            squares,
        },
        abs_terms: vec![LinearTerm::new(psi_coeffs(&inputs.goal), 0.0)],
        linear_le,
        quadratic_le: Vec::new(),
        psd: Some(PsdBlock {
            dim: D,
            entries,
            min_eigenvalue: 1.0,
        }),
    }
}

/// A comfortably sized sphere around the agent, used as a warm start when
/// it happens to be strictly feasible.
fn sphere_start<const D: usize>(inputs: &FitInputs<D>) -> DVector<f64> {
    let c = inputs.agent_center;
    let mut radius2 = 0.0f64;
    for a in &inputs.agent_points {
        radius2 = radius2.max((a - c).norm_squared());
    }
    radius2 += 1.0;
    let n = var_count(D);
    let mut x = DVector::zeros(n);
    for i in 0..D {
        x[p_index(D, i, i)] = 2.0;
    }
    for i in 0..D {
        x[D * (D + 1) / 2 + i] = -4.0 * c[i];
    }
    x[n - 1] = 2.0 * c.norm_squared() - 2.0 * radius2;
    x
}

/// Measured constraint values of a fitted ellipsoid against its inputs.
#[derive(Debug, Clone, Copy)]
pub struct FitPredicate {
    /// Largest `Ψ` over the agent points (must stay ≤ −1).
    pub agent_max: f64,
    /// Smallest `Ψ` over the obstacle points (must stay ≥ 1); +∞ when no
    /// obstacles were sensed.
    pub obstacle_min: f64,
    /// `Ψ(goal)` (must stay ≥ 0).
    pub goal_value: f64,
    /// Smallest eigenvalue of `P` (must stay ≥ 1).
    pub lambda_min: f64,
}

impl FitPredicate {
    pub fn holds(&self) -> bool {
        self.agent_max <= -1.0 + tol::KKT
            && self.obstacle_min >= 1.0 - tol::KKT
            && self.goal_value >= -tol::KKT
            && self.lambda_min >= 1.0 - tol::KKT
    }
}

pub fn fit_predicate<const D: usize>(e: &Ellipsoid<D>, inputs: &FitInputs<D>) -> FitPredicate {
    evaluate_predicate(e, &inputs.agent_points, &inputs.goal, &inputs.obstacles)
}

pub fn evaluate_predicate<const D: usize>(
    e: &Ellipsoid<D>,
    agent_points: &[SVector<f64, D>],
    goal: &SVector<f64, D>,
    obstacles: &[SVector<f64, D>],
) -> FitPredicate {
    let agent_max = agent_points
        .iter()
        .map(|a| e.value(a))
        .fold(f64::NEG_INFINITY, f64::max);
    let obstacle_min = obstacles
        .iter()
        .map(|o| e.value(o))
        .fold(f64::INFINITY, f64::min);
    FitPredicate {
        agent_max,
        obstacle_min,
        goal_value: e.value(goal),
        lambda_min: e.spectrum().lambda_min(),
    }
}

/// Result of one fitting step with solver diagnostics.
#[derive(Debug, Clone)]
pub struct FitOutcome<const D: usize> {
    pub ellipsoid: Ellipsoid<D>,
    pub objective_value: f64,
    /// `|Ψ(goal)|` at the optimum.
    pub goal_gap: f64,
    pub kkt_residual: f64,
    pub gap_estimate: f64,
    pub iterations: usize,
    pub wall_time: f64,
    /// Count of scalar inequalities: agent points + goal + obstacles.
    pub linear_constraints: usize,
}

/// Fits the step ellipsoid. Fails with [`TunnelError::NoFeasibleEllipsoid`]
/// when phase-I certifies that the agent cannot be separated from the
/// sensed obstacle points.
pub fn fit_ellipsoid<const D: usize>(inputs: &FitInputs<D>) -> Result<FitOutcome<D>, TunnelError> {
    inputs.validate()?;
    let prog = assemble_program(inputs);
    let start = sphere_start(inputs);
    let warm = is_strictly_feasible(&prog, &start, 1e-4).then_some(&start);
    let solution = solve_cone(&prog, warm)?;
    match solution.status {
        SolveStatus::Infeasible => Err(TunnelError::NoFeasibleEllipsoid {
            slack: solution.phase1_slack.unwrap_or(f64::INFINITY),
        }),
        status => {
            let ellipsoid = unpack::<D>(&solution.x);
            let predicate = fit_predicate(&ellipsoid, inputs);
            if !predicate.holds() {
                return Err(TunnelError::FitFailed { status });
            }
            Ok(FitOutcome {
                goal_gap: ellipsoid.value(&inputs.goal).abs(),
                ellipsoid,
                objective_value: solution.objective_value,
                kkt_residual: solution.kkt_residual,
                gap_estimate: solution.gap_estimate,
                iterations: solution.iterations,
                wall_time: solution.wall_time,
                linear_constraints: prog.linear_le.len(),
            })
        }
    }
}

/// True when the goal sits on the fitted boundary within `eps`, which lets
/// the planner drive straight at it.
pub fn goal_on_boundary<const D: usize>(e: &Ellipsoid<D>, goal: &SVector<f64, D>, eps: f64) -> bool {
    e.value(goal).abs() <= eps
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn point_inputs(
        agent: Vector2<f64>,
        goal: Vector2<f64>,
        obstacles: Vec<Vector2<f64>>,
        gamma: f64,
    ) -> FitInputs<2> {
        FitInputs {
            agent_points: vec![agent],
            goal,
            obstacles,
            alpha: 0.1,
            gamma,
            agent_center: agent,
        }
    }

    fn box_agent_points(center: Vector2<f64>, w: f64, h: f64) -> Vec<Vector2<f64>> {
        vec![
            center + Vector2::new(-w / 2.0, -h / 2.0),
            center + Vector2::new(w / 2.0, -h / 2.0),
            center + Vector2::new(w / 2.0, h / 2.0),
            center + Vector2::new(-w / 2.0, h / 2.0),
        ]
    }

    #[test]
    fn assembly_counts_match_inputs() {
        let inputs = point_inputs(Vector2::zeros(), Vector2::new(1.0, 0.0), vec![], 5e-5);
        let prog = assemble_program(&inputs);
        assert_eq!(prog.linear_le.len(), 2);
        assert_eq!(prog.abs_terms.len(), 1);
        assert!(prog.psd.is_some());
        assert_eq!(prog.n, 6);

        let obstacles: Vec<Vector2<f64>> = (0..10)
            .map(|i| Vector2::new(3.0 + i as f64, 4.0))
            .collect();
        let inputs = FitInputs {
            agent_points: box_agent_points(Vector2::zeros(), 1.0, 0.5),
            goal: Vector2::new(9.0, 0.0),
            obstacles,
            alpha: 0.1,
            gamma: 5e-4,
            agent_center: Vector2::zeros(),
        };
        let prog = assemble_program(&inputs);
        assert_eq!(prog.linear_le.len(), 15);
    }

    #[test]
    fn first_encounter_scenario_satisfies_margins() {
        let inputs = point_inputs(
            Vector2::new(2.0, 0.0),
            Vector2::new(9.0, 0.0),
            vec![Vector2::new(6.0, 0.0)],
            5e-5,
        );
        let fit = fit_ellipsoid(&inputs).unwrap();
        let p = fit_predicate(&fit.ellipsoid, &inputs);
        assert!(p.agent_max <= -1.0 + 1e-6, "agent {}", p.agent_max);
        assert!(p.obstacle_min >= 1.0 - 1e-6, "obstacle {}", p.obstacle_min);
        assert!(p.goal_value >= -1e-6, "goal {}", p.goal_value);
        assert!(p.lambda_min >= 1.0 - 1e-6, "lambda {}", p.lambda_min);
        assert!(fit.kkt_residual <= 1e-6);
        assert!(fit.gap_estimate <= 1e-7);
    }

    #[test]
    fn unobstructed_goal_lands_on_boundary() {
        let inputs = point_inputs(Vector2::zeros(), Vector2::new(1.0, 0.0), vec![], 5e-5);
        let fit = fit_ellipsoid(&inputs).unwrap();
        assert!(fit.goal_gap <= 1e-5, "goal gap {}", fit.goal_gap);
        assert!(goal_on_boundary(&fit.ellipsoid, &inputs.goal, 1e-2));
    }

    #[test]
    fn blocking_obstacle_is_strictly_separated() {
        let inputs = point_inputs(
            Vector2::zeros(),
            Vector2::new(4.0, 0.0),
            vec![Vector2::new(2.0, 0.0)],
            5e-5,
        );
        let fit = fit_ellipsoid(&inputs).unwrap();
        let e = &fit.ellipsoid;
        assert!(e.value(&Vector2::new(2.0, 0.0)) >= 1.0 - 1e-6);
        assert!(e.value(&Vector2::zeros()) <= -1.0 + 1e-6);
        // An obstacle on the agent-goal segment forces the goal off the
        // boundary by at least the obstacle margin.
        assert!(e.value(&inputs.goal) >= 1.0 - 1e-6);
    }

    #[test]
    fn fitted_ellipsoid_stays_bounded() {
        let inputs = point_inputs(
            Vector2::new(2.0, 0.0),
            Vector2::new(9.0, 0.0),
            vec![Vector2::new(6.0, 0.0)],
            5e-5,
        );
        let fit = fit_ellipsoid(&inputs).unwrap();
        let axes = fit.ellipsoid.semi_axes().unwrap();
        for a in axes {
            assert!(a.is_finite() && a < 100.0, "semi-axis {a}");
        }
    }

    #[test]
    fn heavier_obstacle_weight_does_not_raise_obstacle_sum() {
        let mk = |gamma| {
            point_inputs(
                Vector2::zeros(),
                Vector2::new(5.0, 0.0),
                vec![Vector2::new(2.5, 0.8)],
                gamma,
            )
        };
        let lo = fit_ellipsoid(&mk(5e-5)).unwrap();
        let hi = fit_ellipsoid(&mk(5e-4)).unwrap();
        let f3 = |fit: &FitOutcome<2>| fit.ellipsoid.value(&Vector2::new(2.5, 0.8));
        assert!(f3(&hi) <= f3(&lo) + 1e-6, "lo {} hi {}", f3(&lo), f3(&hi));
    }

    #[test]
    fn coincident_obstacle_is_rejected() {
        let inputs = point_inputs(
            Vector2::zeros(),
            Vector2::new(1.0, 0.0),
            vec![Vector2::new(0.0, 5e-10)],
            5e-5,
        );
        assert!(matches!(
            fit_ellipsoid(&inputs),
            Err(TunnelError::InvalidInputs(_))
        ));
    }

    #[test]
    fn obstacle_inside_agent_hull_is_infeasible() {
        let inputs = FitInputs {
            agent_points: box_agent_points(Vector2::zeros(), 1.0, 0.5),
            goal: Vector2::new(5.0, 0.0),
            obstacles: vec![Vector2::new(0.3, 0.0)],
            alpha: 0.1,
            gamma: 5e-4,
            agent_center: Vector2::zeros(),
        };
        match fit_ellipsoid(&inputs) {
            Err(TunnelError::NoFeasibleEllipsoid { slack }) => {
                assert!(slack > tol::INFEASIBLE_SLACK, "slack {slack}");
            }
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn parameter_ranges_are_enforced() {
        let mut inputs = point_inputs(Vector2::zeros(), Vector2::new(1.0, 0.0), vec![], 5e-5);
        inputs.alpha = 0.0;
        assert!(inputs.validate().is_err());
        inputs.alpha = 0.1;
        inputs.gamma = 2e-3;
        assert!(inputs.validate().is_err());
    }
}
