//! Barrier solver for smooth convex objectives over linear and convex
//! quadratic inequalities with an optional small semidefinite block.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};

use super::engine::{center, CenteringProblem};
use super::{BarrierParams, LinearTerm, QuadraticObjective, Solution, SolveStatus, SolverError};
use crate::geometry::eigen_symmetric;
use crate::tol;

/// Convex quadratic inequality `½xᵀQx + aᵀx + b ≤ 0` with `Q ⪰ 0`.
#[derive(Debug, Clone)]
pub struct QuadraticConstraint {
    pub quad: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub offset: f64,
}

impl QuadraticConstraint {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        0.5 * (&self.quad * x).dot(x) + self.linear.dot(x) + self.offset
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.quad * x + &self.linear
    }
}

/// Requires the symmetric matrix assembled from program variables to
/// satisfy `S(x) ⪰ min_eigenvalue·I`. `entries` lists `(row, col, var)`
/// with `row ≤ col`; the matrix is completed symmetrically.
#[derive(Debug, Clone)]
pub struct PsdBlock {
    pub dim: usize,
    pub entries: Vec<(usize, usize, usize)>,
    pub min_eigenvalue: f64,
}

impl PsdBlock {
    /// The constrained matrix `S(x)`.
    pub fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for &(i, j, v) in &self.entries {
            s[(i, j)] += x[v];
            if i != j {
                s[(j, i)] += x[v];
            }
        }
        s
    }

    /// Smallest eigenvalue of `S(x)`.
    pub fn lambda_min(&self, x: &DVector<f64>) -> f64 {
        small_sym_eigenvalues(&self.matrix(x))[0]
    }
}

/// Eigenvalues (ascending) of a symmetric 2×2 or 3×3 dynamic matrix.
pub(super) fn small_sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    match m.nrows() {
        2 => {
            let s = eigen_symmetric(&nalgebra::Matrix2::new(
                m[(0, 0)],
                m[(0, 1)],
                m[(1, 0)],
                m[(1, 1)],
            ));
            s.eigenvalues.to_vec()
        }
        3 => {
            let s = eigen_symmetric(&nalgebra::Matrix3::new(
                m[(0, 0)],
                m[(0, 1)],
                m[(0, 2)],
                m[(1, 0)],
                m[(1, 1)],
                m[(1, 2)],
                m[(2, 0)],
                m[(2, 1)],
                m[(2, 2)],
            ));
            s.eigenvalues.to_vec()
        }
        n => panic!("semidefinite blocks are limited to dims 2 and 3, got {n}"),
    }
}

/// Conic program in at most a dozen variables. Every `linear_le` and
/// `quadratic_le` entry means `expr ≤ 0`; each `abs_terms` entry adds
/// `|aᵀx + b|` to the objective and is lifted through an epigraph variable
/// inside the solver.
#[derive(Debug, Clone, Default)]
pub struct ConeProgram {
    pub n: usize,
    pub objective: QuadraticObjective,
    pub abs_terms: Vec<LinearTerm>,
    pub linear_le: Vec<LinearTerm>,
    pub quadratic_le: Vec<QuadraticConstraint>,
    pub psd: Option<PsdBlock>,
}

impl ConeProgram {
    /// Largest constraint value at `x` (positive means violated). The
    /// semidefinite block contributes `min_eigenvalue − λ_min(S(x))`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for row in &self.linear_le {
            worst = worst.max(row.eval(x));
        }
        for q in &self.quadratic_le {
            worst = worst.max(q.eval(x));
        }
        if let Some(psd) = &self.psd {
            worst = worst.max(psd.min_eigenvalue - psd.lambda_min(x));
        }
        if worst == f64::NEG_INFINITY {
            worst = -f64::INFINITY;
        }
        worst
    }

    /// Objective value including the absolute-value terms.
    pub fn objective_value(&self, x: &DVector<f64>) -> f64 {
        let mut v = self.objective.value(x);
        for t in &self.abs_terms {
            v += t.eval(x).abs();
        }
        v
    }

    fn validate(&self) -> Result<(), SolverError> {
        let check_len = |len: usize, what: &str| {
            if len != self.n {
                Err(SolverError::BadProgram(format!(
                    "{what} has {len} coefficients, expected {}",
                    self.n
                )))
            } else {
                Ok(())
            }
        };
        if let Some(c) = &self.objective.linear {
            check_len(c.len(), "objective linear part")?;
        }
        for (w, t) in &self.objective.squares {
            check_len(t.coeffs.len(), "objective square term")?;
            if *w < 0.0 {
                return Err(SolverError::BadProgram(
                    "negative square-term weight".into(),
                ));
            }
        }
        for t in self.abs_terms.iter().chain(self.linear_le.iter()) {
            check_len(t.coeffs.len(), "linear term")?;
        }
        for q in &self.quadratic_le {
            check_len(q.linear.len(), "quadratic constraint")?;
            if q.quad.nrows() != self.n || q.quad.ncols() != self.n {
                return Err(SolverError::BadProgram("quadratic matrix size".into()));
            }
        }
        if let Some(psd) = &self.psd {
            for &(i, j, v) in &psd.entries {
                if i > j || j >= psd.dim || v >= self.n {
                    return Err(SolverError::BadProgram(
                        "semidefinite block indices out of range".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// True when every constraint of `prog` holds at `x` with at least
/// `margin` to spare.
pub fn is_strictly_feasible(prog: &ConeProgram, x: &DVector<f64>, margin: f64) -> bool {
    prog.max_violation(x) <= -margin
}

struct LoweredPsd {
    dim: usize,
    /// Barrier matrix constant part, `−(min_eigenvalue − margin)·I`.
    constant: DMatrix<f64>,
    /// Per-variable symmetric unit contributions as index pairs.
    var_pairs: Vec<(usize, Vec<(usize, usize)>)>,
}

impl LoweredPsd {
    fn matrix(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (var, pairs) in &self.var_pairs {
            for &(a, b) in pairs {
                m[(a, b)] += x[*var];
            }
        }
        m
    }
}

/// Lowered barrier model over the lifted variable vector.
struct ConeModel {
    n: usize,
    objective: QuadraticObjective,
    rows: Vec<LinearTerm>,
    quads: Vec<QuadraticConstraint>,
    psd: Option<LoweredPsd>,
    m_total: f64,
}

impl ConeModel {
    /// Stationarity residual under the exact central-path multipliers,
    /// `‖∇(μf + φ)‖/μ`.
    fn central_residual(&self, x: &DVector<f64>, mu: f64) -> f64 {
        let mut g = DVector::zeros(self.n);
        let mut h = DMatrix::zeros(self.n, self.n);
        self.add_derivatives(x, mu, &mut g, &mut h);
        g.norm() / mu
    }
}

impl CenteringProblem for ConeModel {
    fn dim(&self) -> usize {
        self.n
    }

    fn constraint_count(&self) -> f64 {
        self.m_total
    }

    fn objective(&self, x: &DVector<f64>) -> f64 {
        self.objective.value(x)
    }

    fn barrier(&self, x: &DVector<f64>) -> Option<f64> {
        let mut phi = 0.0;
        for row in &self.rows {
            let s = -row.eval(x);
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            phi -= s.ln();
        }
        for q in &self.quads {
            let s = -q.eval(x);
            if !(s > 0.0) || !s.is_finite() {
                return None;
            }
            phi -= s.ln();
        }
        if let Some(psd) = &self.psd {
            let m = psd.matrix(x);
            let chol = m.cholesky()?;
            let mut logdet = 0.0;
            for i in 0..psd.dim {
                let l = chol.l_dirty()[(i, i)];
                if !(l > 0.0) {
                    return None;
                }
                logdet += l.ln();
            }
            phi -= 2.0 * logdet;
        }
        Some(phi)
    }

    fn add_derivatives(
        &self,
        x: &DVector<f64>,
        mu: f64,
        g: &mut DVector<f64>,
        h: &mut DMatrix<f64>,
    ) {
        self.objective.add_gradient(x, g, mu);
        self.objective.add_hessian(x, h, mu);
        for row in &self.rows {
            let inv = 1.0 / -row.eval(x);
            g.axpy(inv, &row.coeffs, 1.0);
            h.ger(inv * inv, &row.coeffs, &row.coeffs, 1.0);
        }
        for q in &self.quads {
            let inv = 1.0 / -q.eval(x);
            let grad = q.gradient(x);
            g.axpy(inv, &grad, 1.0);
            h.ger(inv * inv, &grad, &grad, 1.0);
            *h += &q.quad * inv;
        }
        if let Some(psd) = &self.psd {
            let m = psd.matrix(x);
            let minv = m
                .cholesky()
                .expect("derivative evaluation outside barrier domain")
                .inverse();
            for (var, pairs) in &psd.var_pairs {
                let mut tr = 0.0;
                for &(a, b) in pairs {
                    tr += minv[(b, a)];
                }
                g[*var] -= tr;
            }
            for (uvar, upairs) in &psd.var_pairs {
                for (vvar, vpairs) in &psd.var_pairs {
                    let mut t = 0.0;
                    for &(a, b) in upairs {
                        for &(c, d) in vpairs {
                            t += minv[(d, a)] * minv[(b, c)];
                        }
                    }
                    h[(*uvar, *vvar)] += t;
                }
            }
        }
    }
}

fn pad(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let mut out = DVector::zeros(n);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

fn lower_psd(psd: &PsdBlock, extra_diag_var: Option<usize>) -> LoweredPsd {
    let shift = psd.min_eigenvalue - tol::PSD_MARGIN * psd.min_eigenvalue.abs().max(1.0);
    let constant = DMatrix::identity(psd.dim, psd.dim) * -shift;
    let mut var_pairs: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
    for &(i, j, v) in &psd.entries {
        let pairs = if i == j {
            vec![(i, i)]
        } else {
            vec![(i, j), (j, i)]
        };
        match var_pairs.iter_mut().find(|(var, _)| *var == v) {
            Some((_, existing)) => existing.extend(pairs),
            None => var_pairs.push((v, pairs)),
        }
    }
    if let Some(s) = extra_diag_var {
        let pairs = (0..psd.dim).map(|i| (i, i)).collect();
        var_pairs.push((s, pairs));
    }
    LoweredPsd {
        dim: psd.dim,
        constant,
        var_pairs,
    }
}

/// Builds the lifted main model: base variables followed by one epigraph
/// variable per absolute-value term.
fn lower_main(prog: &ConeProgram) -> ConeModel {
    let n = prog.n + prog.abs_terms.len();
    let mut linear = match &prog.objective.linear {
        Some(c) => pad(c, n),
        None => DVector::zeros(n),
    };
    let mut rows: Vec<LinearTerm> = prog
        .linear_le
        .iter()
        .map(|t| LinearTerm::new(pad(&t.coeffs, n), t.offset))
        .collect();
    for (k, t) in prog.abs_terms.iter().enumerate() {
        let epi = prog.n + k;
        linear[epi] = 1.0;
        let mut up = pad(&t.coeffs, n);
        up[epi] = -1.0;
        rows.push(LinearTerm::new(up, t.offset));
        let mut down = pad(&(-&t.coeffs), n);
        down[epi] = -1.0;
        rows.push(LinearTerm::new(down, -t.offset));
    }
    let squares = prog
        .objective
        .squares
        .iter()
        .map(|(w, t)| (*w, LinearTerm::new(pad(&t.coeffs, n), t.offset)))
        .collect();
    let quads = prog
        .quadratic_le
        .iter()
        .map(|q| {
            let mut quad = DMatrix::zeros(n, n);
            quad.view_mut((0, 0), (prog.n, prog.n)).copy_from(&q.quad);
            QuadraticConstraint {
                quad,
                linear: pad(&q.linear, n),
                offset: q.offset,
            }
        })
        .collect::<Vec<_>>();
    let psd = prog.psd.as_ref().map(|p| lower_psd(p, None));
    let m_total = rows.len() as f64
        + quads.len() as f64
        + prog.psd.as_ref().map_or(0.0, |p| p.dim as f64);
    ConeModel {
        n,
        objective: QuadraticObjective {
            linear: Some(linear),
            constant: prog.objective.constant,
            squares,
        },
        rows,
        quads,
        psd,
        m_total,
    }
}

/// Phase-I model over `(x, s)`: minimize the max-infeasibility slack `s`
/// subject to every constraint relaxed by `s`. Epigraph terms do not
/// constrain the base variables and are left out.
fn lower_phase1(prog: &ConeProgram) -> ConeModel {
    let n = prog.n + 1;
    let s_idx = prog.n;
    let mut linear = DVector::zeros(n);
    linear[s_idx] = 1.0;
    let rows = prog
        .linear_le
        .iter()
        .map(|t| {
            let mut c = pad(&t.coeffs, n);
            c[s_idx] = -1.0;
            LinearTerm::new(c, t.offset)
        })
        .collect::<Vec<_>>();
    let quads = prog
        .quadratic_le
        .iter()
        .map(|q| {
            let mut quad = DMatrix::zeros(n, n);
            quad.view_mut((0, 0), (prog.n, prog.n)).copy_from(&q.quad);
            let mut lin = pad(&q.linear, n);
            lin[s_idx] = -1.0;
            QuadraticConstraint {
                quad,
                linear: lin,
                offset: q.offset,
            }
        })
        .collect::<Vec<_>>();
    let psd = prog.psd.as_ref().map(|p| lower_psd(p, Some(s_idx)));
    let m_total = rows.len() as f64
        + quads.len() as f64
        + prog.psd.as_ref().map_or(0.0, |p| p.dim as f64);
    ConeModel {
        n,
        objective: QuadraticObjective {
            linear: Some(linear),
            constant: 0.0,
            squares: Vec::new(),
        },
        rows,
        quads,
        psd,
        m_total,
    }
}

/// Margin demanded of phase-I before the main solve starts.
const PHASE1_EXIT_MARGIN: f64 = 1e-4;
/// Minimal interior margin for a point to count as strictly feasible.
const STRICT_MARGIN: f64 = 1e-9;

struct Phase1Outcome {
    x: DVector<f64>,
    slack: f64,
    newton_steps: usize,
}

fn run_phase1(prog: &ConeProgram, params: &BarrierParams) -> Phase1Outcome {
    let model = lower_phase1(prog);
    let s_idx = prog.n;

    let base = DVector::zeros(prog.n);
    let mut worst = f64::NEG_INFINITY;
    for row in &prog.linear_le {
        worst = worst.max(row.eval(&base));
    }
    for q in &prog.quadratic_le {
        worst = worst.max(q.eval(&base));
    }
    let mut x = pad(&base, prog.n + 1);
    if let Some(psd) = &model.psd {
        // Keep the barrier matrix positive definite at the start.
        let lam = small_sym_eigenvalues(&{
            let mut m = psd.constant.clone();
            for (var, pairs) in &psd.var_pairs {
                if *var != s_idx {
                    for &(a, b) in pairs {
                        m[(a, b)] += x[*var];
                    }
                }
            }
            m
        })[0];
        worst = worst.max(-lam);
    }
    x[s_idx] = if worst.is_finite() { worst + 1.0 } else { 1.0 };

    let mut steps = 0;
    let mut mu = params.mu0;
    let capped = BarrierParams {
        max_step: Some(params.max_step.unwrap_or(10.0)),
        ..*params
    };
    let exit = |y: &DVector<f64>| y[s_idx] <= -PHASE1_EXIT_MARGIN;
    for _ in 0..params.max_outer {
        let out = center(&model, &mut x, mu, params.newton_tol, &capped, &exit);
        steps += out.newton_steps;
        if out.early_exit || model.m_total / mu <= params.gap_tol {
            break;
        }
        mu *= params.kappa;
    }

    let x_base = DVector::from_iterator(prog.n, x.iter().take(prog.n).copied());
    let slack = prog.max_violation(&x_base);
    Phase1Outcome {
        x: x_base,
        slack,
        newton_steps: steps,
    }
}

/// Solves the program by the barrier method. When `x0` is absent, a
/// phase-I subproblem locates a strictly feasible start; if its optimal
/// slack stays positive the program is reported `Infeasible`. A supplied
/// `x0` must be strictly feasible.
pub fn solve_cone(prog: &ConeProgram, x0: Option<&DVector<f64>>) -> Result<Solution, SolverError> {
    solve_cone_with(prog, x0, &BarrierParams::default())
}

pub fn solve_cone_with(
    prog: &ConeProgram,
    x0: Option<&DVector<f64>>,
    params: &BarrierParams,
) -> Result<Solution, SolverError> {
    prog.validate()?;
    let started = Instant::now();
    let mut total_steps = 0usize;
    let mut phase1_slack = None;

    let base_start = match x0 {
        Some(x) => {
            if x.len() != prog.n {
                return Err(SolverError::BadProgram(format!(
                    "start has {} entries, expected {}",
                    x.len(),
                    prog.n
                )));
            }
            let viol = prog.max_violation(x);
            if viol > -STRICT_MARGIN {
                return Err(SolverError::InfeasibleStart(format!(
                    "max constraint value {viol:.3e}"
                )));
            }
            x.clone()
        }
        None => {
            let p1 = run_phase1(prog, params);
            total_steps += p1.newton_steps;
            phase1_slack = Some(p1.slack);
            if p1.slack > -STRICT_MARGIN {
                return Ok(Solution {
                    objective_value: prog.objective_value(&p1.x),
                    x: p1.x,
                    status: SolveStatus::Infeasible,
                    kkt_residual: f64::INFINITY,
                    gap_estimate: f64::INFINITY,
                    iterations: total_steps,
                    wall_time: started.elapsed().as_secs_f64(),
                    phase1_slack,
                    outer_objectives: Vec::new(),
                });
            }
            p1.x
        }
    };

    let model = lower_main(prog);
    let mut x = pad(&base_start, model.n);
    for (k, t) in prog.abs_terms.iter().enumerate() {
        x[prog.n + k] = t.eval(&base_start).abs() + 1.0;
    }
    if model.barrier(&x).is_none() {
        // Defensive: a start this close to the domain wall cannot be
        // centered in float arithmetic. Report non-convergence rather
        // than iterate on a broken barrier.
        return Ok(Solution {
            objective_value: prog.objective_value(&base_start),
            x: base_start,
            status: SolveStatus::MaxIterations,
            kkt_residual: f64::INFINITY,
            gap_estimate: f64::INFINITY,
            iterations: total_steps,
            wall_time: started.elapsed().as_secs_f64(),
            phase1_slack,
            outer_objectives: Vec::new(),
        });
    }

    let no_exit = |_: &DVector<f64>| false;
    let mut mu = params.mu0;
    let mut outer_objectives = Vec::new();
    let mut reached_gap = false;
    for _ in 0..params.max_outer {
        let out = center(&model, &mut x, mu, params.newton_tol, params, &no_exit);
        total_steps += out.newton_steps;
        let base = DVector::from_iterator(prog.n, x.iter().take(prog.n).copied());
        outer_objectives.push(prog.objective_value(&base));
        if model.m_total / mu <= params.gap_tol {
            reached_gap = true;
            break;
        }
        mu *= params.kappa;
    }

    // Polish pass at the final barrier parameter. Stationarity is then
    // certified by whichever multiplier recovery does better: least
    // squares on the active set, or the exact central-path multipliers.
    let out = center(&model, &mut x, mu, 1e-14, params, &no_exit);
    total_steps += out.newton_steps;

    let x_base = DVector::from_iterator(prog.n, x.iter().take(prog.n).copied());
    let kkt_residual =
        super::kkt::check_kkt_cone(prog, &x_base).min(model.central_residual(&x, mu));
    let feasible = prog.max_violation(&x_base) <= tol::FEAS;
    let status = if reached_gap && feasible && kkt_residual <= tol::KKT {
        SolveStatus::Optimal
    } else {
        SolveStatus::MaxIterations
    };

    Ok(Solution {
        objective_value: prog.objective_value(&x_base),
        x: x_base,
        status,
        kkt_residual,
        gap_estimate: model.m_total / mu,
        iterations: total_steps,
        wall_time: started.elapsed().as_secs_f64(),
        phase1_slack,
        outer_objectives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    /// minimize x² subject to x ≥ 3.
    fn projection_program() -> ConeProgram {
        ConeProgram {
            n: 1,
            objective: QuadraticObjective {
                linear: None,
                constant: 0.0,
                squares: vec![(1.0, LinearTerm::new(dv(&[1.0]), 0.0))],
            },
            linear_le: vec![LinearTerm::new(dv(&[-1.0]), 3.0)],
            ..Default::default()
        }
    }

    #[test]
    fn one_dimensional_projection() {
        let sol = solve_cone(&projection_program(), None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() <= 1e-6, "x = {}", sol.x[0]);
        assert!((sol.objective_value - 9.0).abs() <= 1e-5);
        assert!(sol.kkt_residual <= 1e-6);
        assert!(sol.gap_estimate <= tol::GAP);
    }

    #[test]
    fn epigraph_lift_recovers_absolute_value_minimum() {
        let prog = ConeProgram {
            n: 1,
            abs_terms: vec![LinearTerm::new(dv(&[1.0]), -2.0)],
            ..Default::default()
        };
        let sol = solve_cone(&prog, None).unwrap();
        assert!((sol.x[0] - 2.0).abs() <= 1e-5, "x = {}", sol.x[0]);
        assert!(sol.objective_value.abs() <= 1e-5);
    }

    #[test]
    fn infeasible_program_is_detected_by_phase_one() {
        // x ≤ 0 and x ≥ 1 cannot hold together; best slack is 1/2.
        let prog = ConeProgram {
            n: 1,
            linear_le: vec![
                LinearTerm::new(dv(&[1.0]), 0.0),
                LinearTerm::new(dv(&[-1.0]), 1.0),
            ],
            ..Default::default()
        };
        let sol = solve_cone(&prog, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        let slack = sol.phase1_slack.unwrap();
        assert!(slack > tol::INFEASIBLE_SLACK, "slack = {slack}");
        assert!((slack - 0.5).abs() < 0.1);
    }

    #[test]
    fn psd_block_keeps_matrix_above_identity() {
        // minimize p11 + p22 over P ⪰ I; optimum is P = I.
        let prog = ConeProgram {
            n: 3,
            objective: QuadraticObjective {
                linear: Some(dv(&[1.0, 0.0, 1.0])),
                constant: 0.0,
                squares: vec![],
            },
            psd: Some(PsdBlock {
                dim: 2,
                entries: vec![(0, 0, 0), (0, 1, 1), (1, 1, 2)],
                min_eigenvalue: 1.0,
            }),
            ..Default::default()
        };
        let sol = solve_cone(&prog, None).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let lam = prog.psd.as_ref().unwrap().lambda_min(&sol.x);
        assert!(lam >= 1.0 - 1e-6, "λ_min = {lam}");
        assert!((sol.objective_value - 2.0).abs() <= 1e-4);
    }

    #[test]
    fn provided_start_must_be_strictly_feasible() {
        let prog = projection_program();
        assert!(matches!(
            solve_cone(&prog, Some(&dv(&[2.0]))),
            Err(SolverError::InfeasibleStart(_))
        ));
        let sol = solve_cone(&prog, Some(&dv(&[5.0]))).unwrap();
        assert!((sol.x[0] - 3.0).abs() <= 1e-6);
    }

    #[test]
    fn quadratic_constraint_barrier() {
        // minimize −x subject to ½·2x² − 2 ≤ 0, i.e. x ≤ √2.
        let prog = ConeProgram {
            n: 1,
            objective: QuadraticObjective {
                linear: Some(dv(&[-1.0])),
                constant: 0.0,
                squares: vec![],
            },
            quadratic_le: vec![QuadraticConstraint {
                quad: DMatrix::from_row_slice(1, 1, &[2.0]),
                linear: dv(&[0.0]),
                offset: -2.0,
            }],
            ..Default::default()
        };
        let sol = solve_cone(&prog, Some(&dv(&[0.0]))).unwrap();
        assert!((sol.x[0] - 2.0f64.sqrt()).abs() <= 1e-6);
    }

    #[test]
    fn objective_is_monotone_across_outer_stages() {
        let sol = solve_cone(&projection_program(), None).unwrap();
        for pair in sol.outer_objectives.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{:?}", sol.outer_objectives);
        }
    }

    #[test]
    fn identical_inputs_give_identical_solutions() {
        let a = solve_cone(&projection_program(), None).unwrap();
        let b = solve_cone(&projection_program(), None).unwrap();
        assert_eq!(a.x[0].to_bits(), b.x[0].to_bits());
        assert_eq!(
            a.objective_value.to_bits(),
            b.objective_value.to_bits()
        );
        assert_eq!(a.iterations, b.iterations);
    }
}
