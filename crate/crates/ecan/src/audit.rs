//! Independent re-validation of recorded traces. The audit recomputes
//! everything from the stored poses, clouds and ellipsoids; it never
//! trusts the planner's own bookkeeping.

use nalgebra::SVector;

use crate::agent::AgentModel;
use crate::geometry::Pose;
use crate::planner::PlanTrace;
use crate::tol;
use crate::tunneler::evaluate_predicate;
use crate::world::Environment;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// A stored ellipsoid breaks the fit margins against its stored cloud.
    FitPredicate,
    /// A swept body point intersects a finite obstacle, or touches a
    /// sensed obstacle point.
    PathCollision,
    /// Consecutive poses disagree with the recorded motion, or a stored
    /// frame is not orthonormal.
    PoseChain,
}

#[derive(Debug, Clone)]
pub struct AuditViolation {
    pub step: usize,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub violations: Vec<AuditViolation>,
    /// Smallest distance from any swept body point to any sensed obstacle
    /// point, over the whole trace.
    pub min_obstacle_clearance: f64,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks a trace against the environment it was planned in: the fit
/// margins of every stored ellipsoid, collision freedom of the swept path
/// at fine spatial sampling, and pose-chain consistency.
pub fn validate_trace<const D: usize>(
    env: &Environment<D>,
    agent: &AgentModel<D>,
    trace: &PlanTrace<D>,
) -> AuditReport {
    let mut report = AuditReport {
        violations: Vec::new(),
        min_obstacle_clearance: f64::INFINITY,
    };

    for (i, step) in trace.steps.iter().enumerate() {
        // (a) Fit margins against the stored cloud.
        let body = agent.extremum_points(&step.pose);
        let p = evaluate_predicate(&step.ellipsoid, &body, &trace.goal, &step.cloud.points);
        if !p.holds() {
            report.violations.push(AuditViolation {
                step: i,
                kind: ViolationKind::FitPredicate,
                detail: format!(
                    "agent max {:.3e}, obstacle min {:.3e}, goal {:.3e}, λ_min {:.6}",
                    p.agent_max, p.obstacle_min, p.goal_value, p.lambda_min
                ),
            });
        }

        // (b) Swept-path collision check. The body travels with the frame
        // it had when the step was taken; reorientation happens at arrival.
        let samples = ((step.l_n / tol::AUDIT_SAMPLING).ceil() as usize).max(1);
        let mut collided = false;
        for s in 0..=samples {
            let offset = step.z_n * (step.l_n * s as f64 / samples as f64);
            for b in &body {
                let swept = b + offset;
                if !collided && env.occupancy(&swept) {
                    report.violations.push(AuditViolation {
                        step: i,
                        kind: ViolationKind::PathCollision,
                        detail: format!("body point {:?} inside a finite obstacle", swept.as_slice()),
                    });
                    collided = true;
                }
                for o in &step.cloud.points {
                    report.min_obstacle_clearance =
                        report.min_obstacle_clearance.min((swept - o).norm());
                }
            }
        }
        if report.min_obstacle_clearance <= 0.0 {
            report.violations.push(AuditViolation {
                step: i,
                kind: ViolationKind::PathCollision,
                detail: "swept body point touches a sensed obstacle point".into(),
            });
        }

        // (c) Pose chain.
        if frame_defect(&step.pose) > tol::FRAME_ORTHO {
            report.violations.push(AuditViolation {
                step: i,
                kind: ViolationKind::PoseChain,
                detail: "stored frame is not orthonormal".into(),
            });
        }
        let predicted = step.pose.position + step.z_n * step.l_n;
        let next_position = trace
            .steps
            .get(i + 1)
            .map(|s| s.pose.position)
            .unwrap_or(trace.final_pose.position);
        let drift = (next_position - predicted).norm();
        if drift > tol::POSE_CHAIN {
            report.violations.push(AuditViolation {
                step: i,
                kind: ViolationKind::PoseChain,
                detail: format!("position drift {drift:.3e} exceeds the recorded motion"),
            });
        }
    }

    report
}

fn frame_defect<const D: usize>(pose: &Pose<D>) -> f64 {
    let gram = pose.frame.transpose() * pose.frame;
    let mut defect = 0.0f64;
    for i in 0..D {
        for j in 0..D {
            let target = if i == j { 1.0 } else { 0.0 };
            defect = defect.max((gram[(i, j)] - target).abs());
        }
    }
    defect
}

/// Smallest distance from the step polyline (positions only) to a set of
/// points; handy for clearance assertions in tests.
pub fn polyline_clearance<const D: usize>(
    trace: &PlanTrace<D>,
    points: &[SVector<f64, D>],
) -> f64 {
    let mut min_d = f64::INFINITY;
    for step in &trace.steps {
        let samples = ((step.l_n / tol::AUDIT_SAMPLING).ceil() as usize).max(1);
        for s in 0..=samples {
            let pos = step.pose.position + step.z_n * (step.l_n * s as f64 / samples as f64);
            for p in points {
                min_d = min_d.min((pos - p).norm());
            }
        }
    }
    min_d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentModel;
    use crate::planner::{plan, PlannerParams};
    use nalgebra::Vector2;

    fn traced_run() -> (Environment<2>, PlanTrace<2>) {
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(2.0, 0.2)],
            ..Default::default()
        };
        let goal = Vector2::new(4.0, 0.0);
        let params = PlannerParams::defaults_2d(5e-5);
        let start = Pose::facing(Vector2::zeros(), &goal).unwrap();
        let trace = plan(&env, &AgentModel::point(), start, goal, &params).unwrap();
        (env, trace)
    }

    #[test]
    fn clean_run_passes_audit() {
        let (env, trace) = traced_run();
        let report = validate_trace(&env, &AgentModel::point(), &trace);
        assert!(report.is_clean(), "{:?}", report.violations);
        assert!(report.min_obstacle_clearance > 0.0);
    }

    #[test]
    fn moved_obstacle_is_flagged_as_predicate_violation() {
        let (env, mut trace) = traced_run();
        // Drag a sensed obstacle point inside a stored ellipsoid.
        let step = trace
            .steps
            .iter_mut()
            .find(|s| !s.cloud.is_empty())
            .unwrap();
        step.cloud.points[0] = step.ellipsoid.center().unwrap();
        let report = validate_trace(&env, &AgentModel::point(), &trace);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::FitPredicate));
    }

    #[test]
    fn teleporting_pose_is_flagged() {
        let (env, mut trace) = traced_run();
        trace.steps[1].pose.position += Vector2::new(0.5, 0.0);
        let report = validate_trace(&env, &AgentModel::point(), &trace);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::PoseChain));
    }

    #[test]
    fn path_through_box_is_flagged() {
        let (_, trace) = traced_run();
        // Re-audit the same trace against a world with a box dropped onto
        // the flown path.
        let env = Environment::<2> {
            boxes: vec![crate::world::Aabb {
                min: Vector2::new(0.4, -0.2),
                max: Vector2::new(0.6, 0.4),
            }],
            ..Default::default()
        };
        let report = validate_trace(&env, &AgentModel::point(), &trace);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::PathCollision));
    }
}
