//! Centralized numeric tolerances.
//!
//! Every threshold used across the library lives here so that a single
//! record documents the accuracy contract of the whole pipeline.

/// Componentwise symmetry tolerance for quadric matrices.
pub const SYMMETRY: f64 = 1e-12;

/// Orthonormality tolerance for pose frames (`‖FᵀF − I‖∞`).
pub const FRAME_ORTHO: f64 = 1e-10;

/// Residual bound for eigenpairs: `‖Pv − λv‖ ≤ EIGEN_RESIDUAL·(1+|λ|)`.
pub const EIGEN_RESIDUAL: f64 = 1e-9;

/// Two eigenvalues closer than this (relative to the matrix scale) are
/// treated as a degenerate cluster and get canonical-axis eigenvectors.
pub const EIGEN_DEGENERATE: f64 = 1e-9;

/// Conditioning floor below which a quadric matrix counts as singular.
pub const SINGULAR: f64 = 1e-12;

/// Constraint satisfaction tolerance for solver results.
pub const FEAS: f64 = 1e-7;

/// Duality-gap target for the barrier method.
pub const GAP: f64 = 1e-7;

/// Newton decrement target (`λ²/2`) for inner iterations.
pub const NEWTON: f64 = 1e-9;

/// Stationarity residual bound for a point to count as optimal.
pub const KKT: f64 = 1e-6;

/// The semidefinite block is kept at `S ⪰ (1 − PSD_MARGIN)·I` inside the
/// barrier so the closed constraint `S ⪰ I` holds at the tolerance boundary.
pub const PSD_MARGIN: f64 = 1e-9;

/// Phase-I slack above which a program is declared infeasible.
pub const INFEASIBLE_SLACK: f64 = 1e-6;

/// Boundary hit accuracy for the analytic ray-to-boundary length.
pub const BOUNDARY: f64 = 1e-8;

/// Step length below which the planner counts a step as stalled.
pub const STALL_STEP: f64 = 1e-9;

/// Closed-set membership slack for occupancy tests.
pub const OCCUPANCY: f64 = 1e-9;

/// Two points closer than this are treated as coincident.
pub const COINCIDENT: f64 = 1e-9;

/// Immobile-target threshold when deriving the motion direction.
pub const ZERO_DIRECTION: f64 = 1e-12;

/// Spatial resolution of the audit's swept-path collision sampling.
pub const AUDIT_SAMPLING: f64 = 1e-2;

/// Pose-chain consistency bound checked by the audit.
pub const POSE_CHAIN: f64 = 1e-12;
