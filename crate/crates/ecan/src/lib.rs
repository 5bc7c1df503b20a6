//! Online path planning through unknown environments.
//!
//! The planner threads an agent through a cluttered space by fitting, at
//! every step, an ellipsoid that contains the agent, excludes every sensed
//! obstacle point and keeps the goal on or outside its boundary. A
//! direction program picks a travel direction inside the ellipsoid and a
//! step-length program bounds how far the agent may move while staying
//! inside. The chain of overlapping ellipsoids forms a collision-free
//! tunnel.
//!
//! Modules:
//! - [`geometry`]: quadrics, poses, symmetric eigendecomposition.
//! - [`solver`]: the log-barrier engine behind all three programs.
//! - [`tunneler`]: the ellipsoid-fitting program.
//! - [`navigator`]: direction frames, direction programs, step lengths.
//! - [`agent`]: agent body models and pose advancement.
//! - [`world`]: environments, field-of-view grids and the simulated sensor.
//! - [`planner`]: the online loop and its trace.
//! - [`audit`]: independent re-validation of recorded traces.
//! - [`scenario`]: scenario files, defaults and world generation.
//! - [`render`]: SVG emission of runs.
//! - [`stats`]: per-program timing statistics.
//! - [`runner`]: scenario execution and artifact output.

pub mod agent;
pub mod audit;
pub mod geometry;
pub mod navigator;
pub mod planner;
pub mod render;
pub mod runner;
pub mod scenario;
pub mod stats;
pub mod trace_io;
pub mod tunneler;
pub mod world;
pub mod solver;
pub mod tol;

pub use geometry::{Ellipsoid, GeometryError, Pose, Spectrum};
