//! Per-program timing statistics of a run, mirroring the per-step
//! bookkeeping in the trace.

use serde::Serialize;

use crate::planner::PlanTrace;

#[derive(Debug, Clone, Default, Serialize)]
pub struct ProgramStats {
    pub calls: usize,
    pub mean_time: f64,
    pub stddev_time: f64,
}

fn program_stats(times: &[f64]) -> ProgramStats {
    let calls = times.len();
    if calls == 0 {
        return ProgramStats::default();
    }
    let mean = times.iter().sum::<f64>() / calls as f64;
    let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / calls as f64;
    ProgramStats {
        calls,
        mean_time: mean,
        stddev_time: var.sqrt(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub steps: usize,
    /// Ellipsoid-fitting program.
    pub fit: ProgramStats,
    /// Direction program (only called when the goal is off the boundary).
    pub direction: ProgramStats,
    /// Step-length program (only called for finite agents).
    pub step_length: ProgramStats,
    pub constraints_min: usize,
    pub constraints_max: usize,
}

pub fn compute_stats<const D: usize>(trace: &PlanTrace<D>) -> RunStats {
    let fit_times: Vec<f64> = trace.steps.iter().map(|s| s.fit_time).collect();
    let dir_times: Vec<f64> = trace.steps.iter().filter_map(|s| s.direction_time).collect();
    let len_times: Vec<f64> = trace
        .steps
        .iter()
        .filter_map(|s| s.step_length_time)
        .collect();
    RunStats {
        steps: trace.steps.len(),
        fit: program_stats(&fit_times),
        direction: program_stats(&dir_times),
        step_length: program_stats(&len_times),
        constraints_min: trace
            .steps
            .iter()
            .map(|s| s.constraint_count)
            .min()
            .unwrap_or(0),
        constraints_max: trace
            .steps
            .iter()
            .map(|s| s.constraint_count)
            .max()
            .unwrap_or(0),
    }
}

/// Per-step CSV: one row per step with the three program times and the
/// constraint count; programs not called on a step leave an empty cell.
pub fn stats_csv<const D: usize>(trace: &PlanTrace<D>) -> String {
    let mut out = String::from("t,fit_time,constraints,direction_time,step_length_time\n");
    for s in &trace.steps {
        let opt = |v: Option<f64>| v.map(|t| format!("{t:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{:.6},{},{},{}\n",
            s.t,
            s.fit_time,
            s.constraint_count,
            opt(s.direction_time),
            opt(s.step_length_time),
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::AgentModel;
    use crate::geometry::Pose;
    use crate::planner::{plan, PlannerParams};
    use crate::world::Environment;
    use nalgebra::Vector2;

    fn short_run() -> PlanTrace<2> {
        let goal = Vector2::new(3.0, 0.0);
        let env = Environment::<2> {
            point_obstacles: vec![Vector2::new(1.5, 0.1)],
            ..Default::default()
        };
        plan(
            &env,
            &AgentModel::box2d(0.4, 0.2),
            Pose::facing(Vector2::zeros(), &goal).unwrap(),
            goal,
            &PlannerParams {
                epsilon: 0.5,
                ..PlannerParams::defaults_2d(5e-5)
            },
        )
        .unwrap()
    }

    #[test]
    fn call_counts_match_trace_bookkeeping() {
        let trace = short_run();
        let stats = compute_stats(&trace);
        assert_eq!(stats.steps, trace.steps.len());
        assert_eq!(stats.fit.calls, trace.steps.len());
        assert!(stats.step_length.calls <= trace.steps.len());
        let nav_steps = trace
            .steps
            .iter()
            .filter(|s| s.direction_time.is_some())
            .count();
        assert_eq!(stats.direction.calls, nav_steps);
        assert!(stats.constraints_min >= 6);
    }

    #[test]
    fn csv_has_one_row_per_step() {
        let trace = short_run();
        let csv = stats_csv(&trace);
        assert_eq!(csv.lines().count(), trace.steps.len() + 1);
        assert!(csv.starts_with("t,fit_time,constraints"));
    }

    #[test]
    fn single_sample_has_zero_stddev() {
        let s = program_stats(&[0.25]);
        assert_eq!(s.calls, 1);
        assert_eq!(s.stddev_time, 0.0);
        assert_eq!(s.mean_time, 0.25);
    }
}
