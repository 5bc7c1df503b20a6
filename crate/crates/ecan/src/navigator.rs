//! Direction selection inside a fitted ellipsoid and the safe step length.
//!
//! The travel direction starts from the ellipsoid's eigenstructure: the
//! smallest-eigenvalue axis is the long axis and points toward the goal,
//! the remaining axes are signed away from the obstacle-dense side. A
//! small convex program trades goal progress against obstacle clearance,
//! an analytic quadratic root maps the chosen direction to the boundary,
//! and a per-point quadratic root bounds how far the agent may move.

use nalgebra::{SVector, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::{determinant, Ellipsoid, GeometryError, Pose};
use crate::solver::{solve_ball, BallProgram, SolveStatus, SolverError};
use crate::tol;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NavError {
    #[error("ellipsoid has no interior (center value {0:.3e} ≥ 0)")]
    DegenerateEllipsoid(f64),
    #[error("boundary target coincides with the agent position")]
    AgentAtBoundaryTarget,
    #[error("direction program did not reach an optimum (status {0:?})")]
    DirectionSolve(SolveStatus),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// 2D direction frame: the goal-aligned long axis and the obstacle axis
/// signed away from the obstacle-heavy side of the agent's local x-axis.
#[derive(Debug, Clone)]
pub struct DirectionFrame2D {
    pub z_pu: Vector2<f64>,
    pub z_ou: Vector2<f64>,
    /// Obstacle tallies (above, below) the agent's local x-axis.
    pub side_counts: (usize, usize),
}

/// 3D direction frame: goal-aligned principal axis, two signed obstacle
/// axes and the eigenvalues steering the trade-off.
#[derive(Debug, Clone)]
pub struct DirectionFrame3D {
    pub z_pu: Vector3<f64>,
    pub z1_ou: Vector3<f64>,
    pub z2_ou: Vector3<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_min: f64,
    pub s1: f64,
    pub s2: f64,
}

fn rotate90(v: &Vector2<f64>, anticlockwise: bool) -> Vector2<f64> {
    if anticlockwise {
        Vector2::new(-v.y, v.x)
    } else {
        Vector2::new(v.y, -v.x)
    }
}

/// Builds the 2D frame. Obstacles strictly above the agent's local x-axis
/// count against those strictly below; a majority above puts the obstacle
/// axis at −90° from the principal axis, anything else at +90°.
pub fn build_frame_2d(
    e: &Ellipsoid<2>,
    pose: &Pose<2>,
    obstacles: &[Vector2<f64>],
    goal: &Vector2<f64>,
) -> Result<DirectionFrame2D, NavError> {
    let center = e.center()?;
    let spectrum = e.spectrum();
    let mut z_pu = *spectrum.min_vector();
    if z_pu.dot(&(goal - center)) < 0.0 {
        z_pu = -z_pu;
    }

    let mut above = 0usize;
    let mut below = 0usize;
    for o in obstacles {
        let local_y = pose.global_to_local(o)[1];
        if local_y > 0.0 {
            above += 1;
        } else if local_y < 0.0 {
            below += 1;
        }
    }
    let z_ou = if above > below {
        rotate90(&z_pu, false)
    } else {
        rotate90(&z_pu, true)
    };
    Ok(DirectionFrame2D {
        z_pu,
        z_ou,
        side_counts: (above, below),
    })
}

/// Builds the 3D frame. The two non-principal eigenvectors are taken in
/// ascending eigenvalue order, the second negated if needed to make the
/// eigenbasis right-handed. Each obstacle axis is then signed by the
/// majority of collision-vector projections: more negative projections
/// keep the axis (+1), anything else flips it (−1).
pub fn build_frame_3d(
    e: &Ellipsoid<3>,
    obstacles: &[Vector3<f64>],
    goal: &Vector3<f64>,
) -> Result<DirectionFrame3D, NavError> {
    let center = e.center()?;
    let spectrum = e.spectrum();
    let mut z_pu = *spectrum.min_vector();
    if z_pu.dot(&(goal - center)) < 0.0 {
        z_pu = -z_pu;
    }
    let a1 = spectrum.eigenvectors[1];
    let mut a2 = spectrum.eigenvectors[2];
    let mut frame = nalgebra::Matrix3::zeros();
    frame.set_column(0, &z_pu);
    frame.set_column(1, &a1);
    frame.set_column(2, &a2);
    if determinant(&frame) < 0.0 {
        a2 = -a2;
    }

    let sign_for = |axis: &Vector3<f64>| {
        let mut neg = 0usize;
        let mut pos = 0usize;
        for o in obstacles {
            let proj = (o - center).dot(axis);
            if proj < 0.0 {
                neg += 1;
            } else if proj > 0.0 {
                pos += 1;
            }
        }
        if neg > pos {
            1.0
        } else {
            -1.0
        }
    };
    let s1 = sign_for(&a1);
    let s2 = sign_for(&a2);

    Ok(DirectionFrame3D {
        z_pu,
        z1_ou: a1 * s1,
        z2_ou: a2 * s2,
        lambda1: spectrum.eigenvalues[1],
        lambda2: spectrum.eigenvalues[2],
        lambda_min: spectrum.eigenvalues[0],
        s1,
        s2,
    })
}

fn extract<const D: usize>(sol: &crate::solver::Solution) -> SVector<f64, D> {
    SVector::<f64, D>::from_fn(|i, _| sol.x[i])
}

/// In-ellipsoid direction for 2D: minimize `−z·z_pu − β·log(z·z_ou)` over
/// the unit disk. The optimum sits on the circle, tilted off the principal
/// axis toward the safe side.
pub fn solve_direction_2d(f: &DirectionFrame2D, beta: f64) -> Result<Vector2<f64>, NavError> {
    let prog = BallProgram {
        n: 2,
        linear: nalgebra::DVector::from_row_slice(&[-f.z_pu.x, -f.z_pu.y]),
        logs: vec![(
            beta,
            nalgebra::DVector::from_row_slice(&[f.z_ou.x, f.z_ou.y]),
        )],
    };
    let start = (f.z_pu + f.z_ou) * 0.5;
    let start = nalgebra::DVector::from_row_slice(&[start.x, start.y]);
    let sol = solve_ball(&prog, &start)?;
    if sol.status != SolveStatus::Optimal {
        return Err(NavError::DirectionSolve(sol.status));
    }
    Ok(extract::<2>(&sol))
}

/// In-ellipsoid direction for 3D: minimize
/// `−(1/λ₁)·log(z·z¹_ou) − (1/λ₂)·log(z·z²_ou) − z·z_pu/λ_min` over the
/// unit ball. Flat directions (large eigenvalues) get little weight.
pub fn solve_direction_3d(f: &DirectionFrame3D) -> Result<Vector3<f64>, NavError> {
    let prog = BallProgram {
        n: 3,
        linear: nalgebra::DVector::from_row_slice(&[
            -f.z_pu.x / f.lambda_min,
            -f.z_pu.y / f.lambda_min,
            -f.z_pu.z / f.lambda_min,
        ]),
        logs: vec![
            (
                1.0 / f.lambda1,
                nalgebra::DVector::from_row_slice(&[f.z1_ou.x, f.z1_ou.y, f.z1_ou.z]),
            ),
            (
                1.0 / f.lambda2,
                nalgebra::DVector::from_row_slice(&[f.z2_ou.x, f.z2_ou.y, f.z2_ou.z]),
            ),
        ],
    };
    let start = (f.z_pu + f.z1_ou + f.z2_ou) * 0.5;
    let start = nalgebra::DVector::from_row_slice(&[start.x, start.y, start.z]);
    let sol = solve_ball(&prog, &start)?;
    if sol.status != SolveStatus::Optimal {
        return Err(NavError::DirectionSolve(sol.status));
    }
    Ok(extract::<3>(&sol))
}

/// Distance from the ellipsoid center to the boundary along the unit
/// direction `z_e`: the positive root of `Ψ(z_c + t·z_e) = 0`,
///
/// ```text
/// t = (−Δ + √(Δ² − 4ΛΣ)) / (2Λ),
/// Δ = 2·z_cᵀP·z_e + z_eᵀq,  Λ = z_eᵀP·z_e,  Σ = Ψ(z_c).
/// ```
pub fn boundary_reach<const D: usize>(
    e: &Ellipsoid<D>,
    z_e: &SVector<f64, D>,
) -> Result<f64, NavError> {
    let z_c = e.center()?;
    let sigma = e.value(&z_c);
    if sigma >= 0.0 {
        return Err(NavError::DegenerateEllipsoid(sigma));
    }
    let lambda = (e.p * z_e).dot(z_e);
    let delta = 2.0 * (e.p * z_c).dot(z_e) + z_e.dot(&e.q);
    let disc = delta * delta - 4.0 * lambda * sigma;
    Ok((-delta + disc.sqrt()) / (2.0 * lambda))
}

/// Unit direction from the agent to the boundary target
/// `z_b = z_c + l_e·z_e`.
pub fn motion_direction<const D: usize>(
    z_a: &SVector<f64, D>,
    e: &Ellipsoid<D>,
    z_e: &SVector<f64, D>,
    l_e: f64,
) -> Result<SVector<f64, D>, NavError> {
    let z_b = e.center()? + z_e * l_e;
    let diff = z_b - z_a;
    let norm = diff.norm();
    if norm < tol::ZERO_DIRECTION {
        return Err(NavError::AgentAtBoundaryTarget);
    }
    Ok(diff / norm)
}

/// Largest `δ ≥ 0` keeping every body point at `Ψ ≤ −1` after a move of
/// `δ·z_n`. Substituting the move into the quadric turns each body point
/// into a scalar quadratic in `δ` whose positive root is exact.
pub fn max_inner_step<const D: usize>(
    e: &Ellipsoid<D>,
    body_points: &[SVector<f64, D>],
    z_n: &SVector<f64, D>,
) -> f64 {
    let a = (e.p * z_n).dot(z_n);
    let mut delta2 = f64::INFINITY;
    for w in body_points {
        let b = 2.0 * (e.p * w).dot(z_n) + e.q.dot(z_n);
        let c = e.value(w) + 1.0;
        let disc = b * b - 4.0 * a * c;
        let root = if disc < 0.0 {
            0.0
        } else {
            ((-b + disc.sqrt()) / (2.0 * a)).max(0.0)
        };
        delta2 = delta2.min(root);
    }
    if delta2.is_finite() {
        delta2
    } else {
        0.0
    }
}

/// Executed step length `min(δ₁, δ₂)`.
pub fn step_length<const D: usize>(
    e: &Ellipsoid<D>,
    body_points: &[SVector<f64, D>],
    z_n: &SVector<f64, D>,
    delta1: f64,
) -> f64 {
    delta1.min(max_inner_step(e, body_points, z_n))
}
