//! The online planning loop: sense, fit an ellipsoid, pick a direction,
//! bound the step, advance, repeat until the goal is within tolerance.

use std::time::Instant;

use nalgebra::{SVector, Vector2, Vector3};
use thiserror::Error;

use crate::agent::{advance, AgentKind, AgentModel};
use crate::geometry::{Ellipsoid, Pose};
use crate::navigator::{
    boundary_reach, build_frame_2d, build_frame_3d, max_inner_step, motion_direction,
    solve_direction_2d, solve_direction_3d, NavError,
};
use crate::tunneler::{fit_ellipsoid, goal_on_boundary, FitInputs, FitOutcome, TunnelError};
use crate::world::{build_fov_grid, sense, Environment, FovSpec, PointCloud, WorldError};
use crate::tol;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("start pose collides with a finite obstacle")]
    StartInCollision,
    #[error("ellipsoid fit failed: {0}")]
    Fit(TunnelError),
    #[error("direction finding failed: {0}")]
    Navigation(#[from] NavError),
}

/// How far a point agent may travel along the chosen direction: the
/// distance to the goal (the default) or the distance to the in-ellipsoid
/// boundary target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PointAgentReach {
    #[default]
    GoalDistance,
    BoundaryDistance,
}

/// Planner knobs. Use [`PlannerParams::defaults_2d`] or
/// [`PlannerParams::defaults_3d`] for the standard configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerParams {
    pub delta1: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub fov: FovSpec,
    pub max_steps: usize,
    pub point_agent_reach: PointAgentReach,
}

impl PlannerParams {
    pub fn defaults_2d(gamma: f64) -> Self {
        Self {
            delta1: 1.0,
            alpha: 0.1,
            beta: 1.0,
            gamma,
            epsilon: 1e-2,
            fov: crate::world::default_fov_2d(),
            max_steps: 500,
            point_agent_reach: PointAgentReach::GoalDistance,
        }
    }

    pub fn defaults_3d(gamma: f64) -> Self {
        Self {
            delta1: 2.0,
            fov: crate::world::default_fov_3d(),
            ..Self::defaults_2d(gamma)
        }
    }
}

/// How the planner terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    GoalReached,
    NoFeasibleEllipsoid,
    Stalled,
    MaxSteps,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::GoalReached => "GoalReached",
            Outcome::NoFeasibleEllipsoid => "NoFeasibleEllipsoid",
            Outcome::Stalled => "Stalled",
            Outcome::MaxSteps => "MaxSteps",
        }
    }
}

/// Which loop branch produced the step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Goal off the boundary: eigenstructure direction plus boundary target.
    BoundaryNavigation,
    /// Goal on the boundary: drive straight at it.
    GoalOnBoundary,
}

/// One executed step with its solver diagnostics.
#[derive(Debug, Clone)]
pub struct StepRecord<const D: usize> {
    pub t: usize,
    pub pose: Pose<D>,
    pub cloud: PointCloud<D>,
    pub ellipsoid: Ellipsoid<D>,
    pub branch: Branch,
    pub z_e: Option<SVector<f64, D>>,
    pub l_e: Option<f64>,
    pub z_n: SVector<f64, D>,
    pub l_n: f64,
    pub fit_time: f64,
    pub direction_time: Option<f64>,
    pub step_length_time: Option<f64>,
    /// Scalar inequalities in the fit: agent points + goal + obstacles.
    pub linear_constraints: usize,
    /// Same, counting the semidefinite block as one more constraint.
    pub constraint_count: usize,
    pub fit_kkt: f64,
    pub fit_gap: f64,
    pub fit_iterations: usize,
}

/// Full record of one planning run.
#[derive(Debug, Clone)]
pub struct PlanTrace<const D: usize> {
    pub steps: Vec<StepRecord<D>>,
    pub outcome: Outcome,
    pub final_pose: Pose<D>,
    pub goal: SVector<f64, D>,
}

impl<const D: usize> PlanTrace<D> {
    pub fn final_distance(&self) -> f64 {
        (self.final_pose.position - self.goal).norm()
    }
}

fn as2<const D: usize>(v: &SVector<f64, D>) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

fn as3<const D: usize>(v: &SVector<f64, D>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn widen<const D: usize, const S: usize>(v: &SVector<f64, S>) -> SVector<f64, D> {
    debug_assert_eq!(D, S);
    SVector::<f64, D>::from_fn(|i, _| v[i])
}

/// Dimension-dispatched direction step: frame construction and the
/// direction program, in the coordinates of the plan space.
fn solve_direction<const D: usize>(
    e: &Ellipsoid<D>,
    pose: &Pose<D>,
    cloud: &PointCloud<D>,
    goal: &SVector<f64, D>,
    beta: f64,
) -> Result<SVector<f64, D>, NavError> {
    if D == 2 {
        let e2 = Ellipsoid::<2> {
            p: nalgebra::Matrix2::new(e.p[(0, 0)], e.p[(0, 1)], e.p[(1, 0)], e.p[(1, 1)]),
            q: as2(&e.q),
            r: e.r,
        };
        let pose2 = Pose::<2> {
            position: as2(&pose.position),
            frame: nalgebra::Matrix2::new(
                pose.frame[(0, 0)],
                pose.frame[(0, 1)],
                pose.frame[(1, 0)],
                pose.frame[(1, 1)],
            ),
        };
        let obstacles: Vec<Vector2<f64>> = cloud.points.iter().map(as2).collect();
        let frame = build_frame_2d(&e2, &pose2, &obstacles, &as2(goal))?;
        let z = solve_direction_2d(&frame, beta)?;
        Ok(widen::<D, 2>(&z))
    } else {
        let e3 = Ellipsoid::<3> {
            p: nalgebra::Matrix3::from_fn(|i, j| e.p[(i, j)]),
            q: as3(&e.q),
            r: e.r,
        };
        let obstacles: Vec<Vector3<f64>> = cloud.points.iter().map(as3).collect();
        let frame = build_frame_3d(&e3, &obstacles, &as3(goal))?;
        let z = solve_direction_3d(&frame)?;
        Ok(widen::<D, 3>(&z))
    }
}

/// Runs the planning loop. Configuration problems surface as errors;
/// planning failures (no separating ellipsoid, stalling, step budget)
/// terminate the trace through its outcome.
pub fn plan<const D: usize>(
    env: &Environment<D>,
    agent: &AgentModel<D>,
    start: Pose<D>,
    goal: SVector<f64, D>,
    params: &PlannerParams,
) -> Result<PlanTrace<D>, PlanError> {
    let grid = build_fov_grid::<D>(&params.fov)?;
    if agent
        .extremum_points(&start)
        .iter()
        .any(|p| env.occupancy(p))
    {
        return Err(PlanError::StartInCollision);
    }

    let is_point_agent = matches!(agent.kind, AgentKind::Point);
    let mut pose = start;
    let mut steps: Vec<StepRecord<D>> = Vec::new();
    let mut stall_count = 0usize;
    let mut outcome = Outcome::MaxSteps;

    for t in 0..params.max_steps {
        if (pose.position - goal).norm() <= params.epsilon {
            outcome = Outcome::GoalReached;
            break;
        }

        let cloud = sense(env, &pose, &grid);
        let body_points = agent.extremum_points(&pose);
        let inputs = FitInputs {
            agent_points: body_points.clone(),
            goal,
            obstacles: cloud.points.clone(),
            alpha: params.alpha,
            gamma: params.gamma,
            agent_center: pose.position,
        };
        let fit: FitOutcome<D> = match fit_ellipsoid(&inputs) {
            Ok(f) => f,
            // A coincident agent/obstacle point makes the two margin
            // constraints contradictory, so both failures certify that no
            // separating ellipsoid exists at this pose.
            Err(TunnelError::NoFeasibleEllipsoid { .. }) | Err(TunnelError::InvalidInputs(_)) => {
                outcome = Outcome::NoFeasibleEllipsoid;
                break;
            }
            Err(e) => return Err(PlanError::Fit(e)),
        };
        let e = &fit.ellipsoid;

        let mut z_e = None;
        let mut l_e = None;
        let mut direction_time = None;
        let mut boundary_target = None;
        let branch;
        let z_n;
        if !goal_on_boundary(e, &goal, params.epsilon) {
            branch = Branch::BoundaryNavigation;
            let t0 = Instant::now();
            let dir = solve_direction(e, &pose, &cloud, &goal, params.beta)?;
            let reach = boundary_reach(e, &dir)?;
            direction_time = Some(t0.elapsed().as_secs_f64());
            let target = e.center().map_err(NavError::Geometry)? + dir * reach;
            boundary_target = Some(target);
            z_n = match motion_direction(&pose.position, e, &dir, reach) {
                Ok(v) => v,
                Err(NavError::AgentAtBoundaryTarget) => {
                    let d = goal - pose.position;
                    d / d.norm()
                }
                Err(other) => return Err(other.into()),
            };
            z_e = Some(dir);
            l_e = Some(reach);
        } else {
            branch = Branch::GoalOnBoundary;
            let d = goal - pose.position;
            z_n = d / d.norm();
        }

        let mut step_length_time = None;
        let l_n = if is_point_agent {
            let cap = match (params.point_agent_reach, boundary_target) {
                (PointAgentReach::BoundaryDistance, Some(target)) => {
                    (target - pose.position).norm()
                }
                _ => (goal - pose.position).norm(),
            };
            params.delta1.min(cap)
        } else {
            let t0 = Instant::now();
            let delta2 = max_inner_step(e, &body_points, &z_n);
            step_length_time = Some(t0.elapsed().as_secs_f64());
            params.delta1.min(delta2)
        };

        steps.push(StepRecord {
            t,
            pose: pose.clone(),
            cloud,
            ellipsoid: fit.ellipsoid.clone(),
            branch,
            z_e,
            l_e,
            z_n,
            l_n,
            fit_time: fit.wall_time,
            direction_time,
            step_length_time,
            linear_constraints: fit.linear_constraints,
            constraint_count: fit.linear_constraints + 1,
            fit_kkt: fit.kkt_residual,
            fit_gap: fit.gap_estimate,
            fit_iterations: fit.iterations,
        });

        pose = advance(&pose, &z_n, l_n);

        if l_n < tol::STALL_STEP {
            stall_count += 1;
            if stall_count >= 3 {
                outcome = Outcome::Stalled;
                break;
            }
        } else {
            stall_count = 0;
        }
    }

    if outcome == Outcome::MaxSteps && (pose.position - goal).norm() <= params.epsilon {
        outcome = Outcome::GoalReached;
    }

    Ok(PlanTrace {
        steps,
        outcome,
        final_pose: pose,
        goal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector2;

    fn empty_env() -> Environment<2> {
        Environment::default()
    }

    fn start_facing_goal(start: Vector2<f64>, goal: Vector2<f64>) -> Pose<2> {
        Pose::facing(start, &(goal - start)).unwrap()
    }

    #[test]
    fn empty_world_goes_straight_to_goal() {
        let goal = Vector2::new(4.0, 0.0);
        let params = PlannerParams::defaults_2d(5e-5);
        let trace = plan(
            &empty_env(),
            &AgentModel::point(),
            start_facing_goal(Vector2::zeros(), goal),
            goal,
            &params,
        )
        .unwrap();
        assert_eq!(trace.outcome, Outcome::GoalReached);
        assert!(trace.final_distance() <= params.epsilon);
        let bound = (4.0 / params.delta1).ceil() as usize + 2;
        assert!(trace.steps.len() <= bound, "{} steps", trace.steps.len());
        for step in &trace.steps {
            assert_eq!(step.branch, Branch::GoalOnBoundary);
            let bearing = (goal - step.pose.position).normalize();
            assert!((step.z_n - bearing).norm() <= 1e-3);
        }
    }

    #[test]
    fn consecutive_positions_differ_by_recorded_motion() {
        let goal = Vector2::new(3.0, 2.0);
        let params = PlannerParams::defaults_2d(5e-5);
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(1.5, 1.0)],
            ..Default::default()
        };
        let trace = plan(
            &env,
            &AgentModel::point(),
            start_facing_goal(Vector2::zeros(), goal),
            goal,
            &params,
        )
        .unwrap();
        assert_eq!(trace.outcome, Outcome::GoalReached);
        for w in trace.steps.windows(2) {
            let predicted = w[0].pose.position + w[0].z_n * w[0].l_n;
            assert!((w[1].pose.position - predicted).norm() <= tol::POSE_CHAIN);
        }
        let last = trace.steps.last().unwrap();
        let predicted = last.pose.position + last.z_n * last.l_n;
        assert!((trace.final_pose.position - predicted).norm() <= tol::POSE_CHAIN);
    }

    #[test]
    fn boxed_in_agent_reports_no_feasible_ellipsoid() {
        // Obstacle points strictly inside the agent hull make the margins
        // contradictory from the first fit.
        let env = Environment::<2> {
            point_obstacles: vec![
                Vector2::new(0.2, 0.0),
                Vector2::new(-0.2, 0.0),
                Vector2::new(0.0, 0.1),
            ],
            ..Default::default()
        };
        let params = PlannerParams::defaults_2d(5e-5);
        let goal = Vector2::new(6.0, 0.0);
        let trace = plan(
            &env,
            &AgentModel::box2d(1.0, 0.5),
            start_facing_goal(Vector2::zeros(), goal),
            goal,
            &params,
        )
        .unwrap();
        assert_eq!(trace.outcome, Outcome::NoFeasibleEllipsoid);
    }

    #[test]
    fn start_inside_box_is_a_setup_error() {
        let env = Environment::<2> {
            boxes: vec![crate::world::Aabb {
                min: Vector2::new(-1.0, -1.0),
                max: Vector2::new(1.0, 1.0),
            }],
            ..Default::default()
        };
        let params = PlannerParams::defaults_2d(5e-4);
        let goal = Vector2::new(6.0, 0.0);
        let res = plan(
            &env,
            &AgentModel::point(),
            start_facing_goal(Vector2::zeros(), goal),
            goal,
            &params,
        );
        assert!(matches!(res, Err(PlanError::StartInCollision)));
    }

    #[test]
    fn goal_within_tolerance_terminates_without_steps() {
        let goal = Vector2::new(0.005, 0.0);
        let params = PlannerParams::defaults_2d(5e-5);
        let trace = plan(
            &empty_env(),
            &AgentModel::point(),
            Pose::facing(Vector2::zeros(), &Vector2::new(1.0, 0.0)).unwrap(),
            goal,
            &params,
        )
        .unwrap();
        assert_eq!(trace.outcome, Outcome::GoalReached);
        assert!(trace.steps.is_empty());
    }
}
