//! Stationarity checks with multipliers recovered by nonnegative least
//! squares over the active constraint set.

use nalgebra::{DMatrix, DVector};

use super::cone::ConeProgram;
use super::BallProgram;
use crate::geometry::eigen_symmetric;

/// Relative slack below which a constraint joins the multiplier recovery.
/// The window is deliberately wide: a weakly active constraint (small but
/// nonzero central multiplier) must contribute its column, while anything
/// outside the window has a central multiplier below the stationarity
/// target at the solver's gap. Irrelevant columns get zero weight from the
/// nonnegativity constraint.
const ACTIVE_TOL: f64 = 0.1;

/// Stationarity residual of the cone program at a feasible point: the norm
/// of `∇f + Σ λᵢ∇gᵢ` minimized over nonnegative multipliers on the active
/// constraints.
pub fn check_kkt_cone(prog: &ConeProgram, x: &DVector<f64>) -> f64 {
    let mut g0 = DVector::zeros(prog.n);
    prog.objective.add_gradient(x, &mut g0, 1.0);
    for term in &prog.abs_terms {
        let sign = if term.eval(x) >= 0.0 { 1.0 } else { -1.0 };
        g0.axpy(sign, &term.coeffs, 1.0);
    }

    let mut active: Vec<DVector<f64>> = Vec::new();
    for row in &prog.linear_le {
        let slack = -row.eval(x);
        if slack <= ACTIVE_TOL * (1.0 + row.coeffs.norm()) {
            active.push(row.coeffs.clone());
        }
    }
    for q in &prog.quadratic_le {
        let grad = &q.quad * x + &q.linear;
        let slack = -q.eval(x);
        if slack <= ACTIVE_TOL * (1.0 + grad.norm()) {
            active.push(grad);
        }
    }
    if let Some(psd) = &prog.psd {
        // Eigendirections of S(x) at the eigenvalue floor act as scalar
        // constraints `min_eig − vᵀS(x)v ≤ 0`.
        let s = psd.matrix(x);
        let (values, vectors) = small_sym_eigen(&s);
        for (lam, v) in values.iter().zip(vectors.iter()) {
            if lam - psd.min_eigenvalue <= ACTIVE_TOL * (1.0 + psd.min_eigenvalue.abs()) {
                let mut col = DVector::zeros(prog.n);
                for &(i, j, var) in &psd.entries {
                    let c = if i == j { v[i] * v[i] } else { 2.0 * v[i] * v[j] };
                    col[var] -= c;
                }
                active.push(col);
            }
        }
    }

    nnls_residual(&g0, &active)
}

/// Stationarity residual of the ball program at a feasible point.
pub fn check_kkt_ball(prog: &BallProgram, x: &DVector<f64>) -> f64 {
    let mut g0 = prog.linear.clone();
    for (w, d) in &prog.logs {
        g0.axpy(-w / d.dot(x), d, 1.0);
    }
    let slack = 1.0 - x.norm_squared();
    let mut active = Vec::new();
    if slack <= ACTIVE_TOL {
        active.push(x * 2.0);
    }
    nnls_residual(&g0, &active)
}

fn small_sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    match m.nrows() {
        2 => {
            let s = eigen_symmetric(&nalgebra::Matrix2::new(
                m[(0, 0)],
                m[(0, 1)],
                m[(1, 0)],
                m[(1, 1)],
            ));
            (
                s.eigenvalues.to_vec(),
                s.eigenvectors.iter().map(|v| vec![v[0], v[1]]).collect(),
            )
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
            (
                s.eigenvalues.to_vec(),
                s.eigenvectors
                    .iter()
                    .map(|v| vec![v[0], v[1], v[2]])
                    .collect(),
            )
        }
        n => panic!("semidefinite blocks are limited to dims 2 and 3, got {n}"),
    }
}

/// Lawson-Hanson style active-set loop for `min_{λ ≥ 0} ‖g0 + G·λ‖₂`.
fn nnls_residual(g0: &DVector<f64>, cols: &[DVector<f64>]) -> f64 {
    if cols.is_empty() {
        return g0.norm();
    }
    let m = cols.len();
    let mut lambda = vec![0.0f64; m];
    let mut in_set = vec![false; m];

    for _outer in 0..(3 * m + 10) {
        let mut r = g0.clone();
        for (j, l) in lambda.iter().enumerate() {
            r.axpy(*l, &cols[j], 1.0);
        }
        // Most negative directional derivative among excluded columns.
        let mut best = None;
        let mut best_val = -1e-12 * (1.0 + g0.norm());
        for (j, col) in cols.iter().enumerate() {
            if !in_set[j] {
                let d = col.dot(&r);
                if d < best_val {
                    best_val = d;
                    best = Some(j);
                }
            }
        }
        let Some(j_new) = best else { break };
        in_set[j_new] = true;

        // Inner loop: least squares on the working set, stepping back when
        // a multiplier leaves the nonnegative orthant.
        for _inner in 0..(3 * m + 10) {
            let idx: Vec<usize> = (0..m).filter(|&j| in_set[j]).collect();
            let trial = ls_on_set(g0, cols, &idx);
            if trial.iter().all(|&v| v > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    lambda[j] = trial[k];
                }
                break;
            }
            let mut alpha = 1.0f64;
            for (k, &j) in idx.iter().enumerate() {
                if trial[k] <= 0.0 {
                    let denom = lambda[j] - trial[k];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[j] / denom);
                    }
                }
            }
            for (k, &j) in idx.iter().enumerate() {
                lambda[j] += alpha * (trial[k] - lambda[j]);
                if lambda[j] <= 1e-14 {
                    lambda[j] = 0.0;
                    in_set[j] = false;
                }
            }
        }
    }

    let mut r = g0.clone();
    for (j, l) in lambda.iter().enumerate() {
        r.axpy(*l, &cols[j], 1.0);
    }
    r.norm()
}

/// Unconstrained least squares `min ‖g0 + G_idx·λ‖` via regularized normal
/// equations.
fn ls_on_set(g0: &DVector<f64>, cols: &[DVector<f64>], idx: &[usize]) -> Vec<f64> {
    let k = idx.len();
    let mut gram = DMatrix::zeros(k, k);
    let mut rhs = DVector::zeros(k);
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate() {
            gram[(a, b)] = cols[i].dot(&cols[j]);
        }
        rhs[a] = -cols[i].dot(g0);
    }
    let scale = (0..k).fold(0.0f64, |acc, i| acc.max(gram[(i, i)]));
    for i in 0..k {
        gram[(i, i)] += scale.max(1.0) * 1e-13;
    }
    match gram.clone().cholesky() {
        Some(c) => c.solve(&rhs).iter().copied().collect(),
        None => gram
            .lu()
            .solve(&rhs)
            .map(|v| v.iter().copied().collect())
            .unwrap_or_else(|| vec![0.0; k]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_cone, LinearTerm, QuadraticObjective};

    fn dv(vals: &[f64]) -> DVector<f64> {
        DVector::from_row_slice(vals)
    }

    #[test]
    fn residual_small_at_projection_optimum() {
        let prog = ConeProgram {
            n: 1,
            objective: QuadraticObjective {
                linear: None,
                constant: 0.0,
                squares: vec![(1.0, LinearTerm::new(dv(&[1.0]), 0.0))],
            },
            linear_le: vec![LinearTerm::new(dv(&[-1.0]), 3.0)],
            ..Default::default()
        };
        let sol = solve_cone(&prog, None).unwrap();
        assert!(check_kkt_cone(&prog, &sol.x) <= 1e-8);
    }

    #[test]
    fn residual_large_at_perturbed_point() {
        let prog = ConeProgram {
            n: 1,
            objective: QuadraticObjective {
                linear: None,
                constant: 0.0,
                squares: vec![(1.0, LinearTerm::new(dv(&[1.0]), 0.0))],
            },
            linear_le: vec![LinearTerm::new(dv(&[-1.0]), 3.0)],
            ..Default::default()
        };
        // Feasible and interior, far from the optimum at x = 3.
        let r = check_kkt_cone(&prog, &dv(&[5.0]));
        assert!(r > 1e-3, "residual = {r}");
    }

    #[test]
    fn ball_residual_at_analytic_boundary_optimum() {
        let prog = BallProgram {
            n: 2,
            linear: dv(&[-1.0, 0.0]),
            logs: vec![(1.0, dv(&[0.0, 1.0]))],
        };
        let c = (5.0f64.sqrt() - 1.0) / 2.0;
        let s = (1.0 - c * c).sqrt();
        let r = check_kkt_ball(&prog, &dv(&[c, s]));
        assert!(r <= 1e-6, "residual = {r}");
        let r_interior = check_kkt_ball(&prog, &dv(&[0.2, 0.6]));
        assert!(r_interior > 1e-3);
    }
}
