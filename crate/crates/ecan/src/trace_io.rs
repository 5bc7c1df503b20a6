//! Trace persistence: JSON lines with one step per line and a trailing
//! summary line. Ellipsoids are stored as the row-major matrix with the
//! linear and constant parts.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Ellipsoid, Pose};
use crate::planner::{Branch, Outcome, PlanTrace, StepRecord};
use crate::world::PointCloud;

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("trace line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("trace is empty")]
    Empty,
    #[error("trace dimension {found} does not match the scenario dimension {expected}")]
    DimensionMismatch { found: usize, expected: usize },
}

#[derive(Debug, Serialize, Deserialize)]
struct EllipsoidLine {
    p: Vec<f64>,
    q: Vec<f64>,
    r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct StepLine {
    t: usize,
    position: Vec<f64>,
    frame: Vec<f64>,
    cloud: Vec<Vec<f64>>,
    ellipsoid: EllipsoidLine,
    branch: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    z_e: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    l_e: Option<f64>,
    z_n: Vec<f64>,
    l_n: f64,
    fit_time: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    direction_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_length_time: Option<f64>,
    linear_constraints: usize,
    constraint_count: usize,
    fit_kkt: f64,
    fit_gap: f64,
    fit_iterations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct SummaryLine {
    outcome: String,
    final_position: Vec<f64>,
    final_frame: Vec<f64>,
    goal: Vec<f64>,
}

fn coords<const D: usize>(v: &SVector<f64, D>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn matrix_row_major<const D: usize>(m: &SMatrix<f64, D, D>) -> Vec<f64> {
    let mut out = Vec::with_capacity(D * D);
    for i in 0..D {
        for j in 0..D {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn parse_vector<const D: usize>(raw: &[f64], line: usize) -> Result<SVector<f64, D>, TraceIoError> {
    if raw.len() != D {
        return Err(TraceIoError::Malformed {
            line,
            message: format!("expected {D} coordinates, got {}", raw.len()),
        });
    }
    Ok(SVector::<f64, D>::from_fn(|i, _| raw[i]))
}

fn parse_matrix<const D: usize>(raw: &[f64], line: usize) -> Result<SMatrix<f64, D, D>, TraceIoError> {
    if raw.len() != D * D {
        return Err(TraceIoError::Malformed {
            line,
            message: format!("expected {} matrix entries, got {}", D * D, raw.len()),
        });
    }
    Ok(SMatrix::<f64, D, D>::from_fn(|i, j| raw[i * D + j]))
}

pub fn write_trace<const D: usize>(trace: &PlanTrace<D>) -> String {
    let mut out = String::new();
    for s in &trace.steps {
        let line = StepLine {
            t: s.t,
            position: coords(&s.pose.position),
            frame: matrix_row_major(&s.pose.frame),
            cloud: s.cloud.points.iter().map(|p| coords(p)).collect(),
            ellipsoid: EllipsoidLine {
                p: matrix_row_major(&s.ellipsoid.p),
                q: coords(&s.ellipsoid.q),
                r: s.ellipsoid.r,
            },
            branch: match s.branch {
                Branch::BoundaryNavigation => "boundary_navigation".into(),
                Branch::GoalOnBoundary => "goal_on_boundary".into(),
            },
            z_e: s.z_e.as_ref().map(|v| coords(v)),
            l_e: s.l_e,
            z_n: coords(&s.z_n),
            l_n: s.l_n,
            fit_time: s.fit_time,
            direction_time: s.direction_time,
            step_length_time: s.step_length_time,
            linear_constraints: s.linear_constraints,
            constraint_count: s.constraint_count,
            fit_kkt: s.fit_kkt,
            fit_gap: s.fit_gap,
            fit_iterations: s.fit_iterations,
        };
        out.push_str(&serde_json::to_string(&line).expect("step serialization"));
        out.push('\n');
    }
    let summary = SummaryLine {
        outcome: trace.outcome.name().into(),
        final_position: coords(&trace.final_pose.position),
        final_frame: matrix_row_major(&trace.final_pose.frame),
        goal: coords(&trace.goal),
    };
    out.push_str(&serde_json::to_string(&summary).expect("summary serialization"));
    out.push('\n');
    out
}

pub fn read_trace<const D: usize>(text: &str) -> Result<PlanTrace<D>, TraceIoError> {
    let mut steps = Vec::new();
    let mut summary: Option<SummaryLine> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Ok(step) = serde_json::from_str::<StepLine>(raw) {
            let dim = step.position.len();
            if dim != D {
                return Err(TraceIoError::DimensionMismatch {
                    found: dim,
                    expected: D,
                });
            }
            steps.push(decode_step::<D>(step, line_no)?);
        } else {
            let s: SummaryLine =
                serde_json::from_str(raw).map_err(|e| TraceIoError::Malformed {
                    line: line_no,
                    message: e.to_string(),
                })?;
            summary = Some(s);
        }
    }
    let summary = summary.ok_or(TraceIoError::Empty)?;
    let outcome = match summary.outcome.as_str() {
        "GoalReached" => Outcome::GoalReached,
        "NoFeasibleEllipsoid" => Outcome::NoFeasibleEllipsoid,
        "Stalled" => Outcome::Stalled,
        "MaxSteps" => Outcome::MaxSteps,
        other => {
            return Err(TraceIoError::Malformed {
                line: 0,
                message: format!("unknown outcome `{other}`"),
            })
        }
    };
    Ok(PlanTrace {
        steps,
        outcome,
        final_pose: Pose {
            position: parse_vector::<D>(&summary.final_position, 0)?,
            frame: parse_matrix::<D>(&summary.final_frame, 0)?,
        },
        goal: parse_vector::<D>(&summary.goal, 0)?,
    })
}

fn decode_step<const D: usize>(s: StepLine, line: usize) -> Result<StepRecord<D>, TraceIoError> {
    let branch = match s.branch.as_str() {
        "boundary_navigation" => Branch::BoundaryNavigation,
        "goal_on_boundary" => Branch::GoalOnBoundary,
        other => {
            return Err(TraceIoError::Malformed {
                line,
                message: format!("unknown branch `{other}`"),
            })
        }
    };
    let cloud_points = s
        .cloud
        .iter()
        .map(|p| parse_vector::<D>(p, line))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StepRecord {
        t: s.t,
        pose: Pose {
            position: parse_vector::<D>(&s.position, line)?,
            frame: parse_matrix::<D>(&s.frame, line)?,
        },
        cloud: PointCloud {
            points: cloud_points,
        },
        ellipsoid: Ellipsoid {
            p: parse_matrix::<D>(&s.ellipsoid.p, line)?,
            q: parse_vector::<D>(&s.ellipsoid.q, line)?,
            r: s.ellipsoid.r,
        },
        branch,
        z_e: s.z_e.map(|v| parse_vector::<D>(&v, line)).transpose()?,
        l_e: s.l_e,
        z_n: parse_vector::<D>(&s.z_n, line)?,
        l_n: s.l_n,
        fit_time: s.fit_time,
        direction_time: s.direction_time,
        step_length_time: s.step_length_time,
        linear_constraints: s.linear_constraints,
        constraint_count: s.constraint_count,
        fit_kkt: s.fit_kkt,
        fit_gap: s.fit_gap,
        fit_iterations: s.fit_iterations,
    })
}

/// Dimension of a stored trace, read from its first line.
pub fn trace_dimension(text: &str) -> Result<usize, TraceIoError> {
    for raw in text.lines() {
        if raw.trim().is_empty() {
            continue;
        }
        if let Ok(step) = serde_json::from_str::<StepLine>(raw) {
            return Ok(step.position.len());
        }
        if let Ok(summary) = serde_json::from_str::<SummaryLine>(raw) {
            return Ok(summary.final_position.len());
        }
    }
    Err(TraceIoError::Empty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentModel;
    use crate::planner::{plan, PlannerParams};
    use crate::world::Environment;
    use nalgebra::Vector2;

    #[test]
    fn trace_round_trips_through_json_lines() {
        let goal = Vector2::new(4.0, 1.0);
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(2.0, 0.5)],
            ..Default::default()
        };
        let trace = plan(
            &env,
            &AgentModel::point(),
            Pose::facing(Vector2::zeros(), &goal).unwrap(),
            goal,
            &PlannerParams::defaults_2d(5e-5),
        )
        .unwrap();
        let text = write_trace(&trace);
        assert_eq!(text.lines().count(), trace.steps.len() + 1);
        let parsed = read_trace::<2>(&text).unwrap();
        assert_eq!(parsed.outcome, trace.outcome);
        assert_eq!(parsed.steps.len(), trace.steps.len());
        for (a, b) in trace.steps.iter().zip(parsed.steps.iter()) {
            assert_eq!(a.pose, b.pose);
            assert_eq!(a.ellipsoid, b.ellipsoid);
            assert_eq!(a.cloud.points, b.cloud.points);
            assert_eq!(a.l_n, b.l_n);
            assert_eq!(a.branch, b.branch);
        }
        assert_eq!(trace_dimension(&text).unwrap(), 2);
    }

    #[test]
    fn dimension_mismatch_is_detected() {
        let goal = Vector2::new(2.0, 0.0);
        let trace = plan(
            &Environment::<2>::default(),
            &AgentModel::point(),
            Pose::facing(Vector2::zeros(), &goal).unwrap(),
            goal,
            &PlannerParams::defaults_2d(5e-5),
        )
        .unwrap();
        let text = write_trace(&trace);
        assert!(matches!(
            read_trace::<3>(&text),
            Err(TraceIoError::DimensionMismatch { .. })
        ));
    }
}
