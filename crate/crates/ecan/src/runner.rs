//! Scenario execution: runs the planner and writes the trace, statistics
//! and rendering artifacts to an output directory.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::audit::{validate_trace, AuditReport};
use crate::planner::{plan, Outcome, PlanError, PlanTrace};
use crate::render::{render_svg, Projection, RenderOptions};
use crate::scenario::{LoadedScenario, Scenario};
use crate::stats::{compute_stats, stats_csv, RunStats};
use crate::trace_io::{read_trace, trace_dimension, write_trace, TraceIoError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    TraceIo(#[from] TraceIoError),
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub svg: bool,
    pub svg_all_ellipses: bool,
    pub projection: Projection,
    pub stats: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            svg: false,
            svg_all_ellipses: false,
            projection: Projection::Xy,
            stats: false,
        }
    }
}

#[derive(Debug)]
pub struct RunReport {
    pub outcome: Outcome,
    pub steps: usize,
    pub final_distance: f64,
    pub stats: RunStats,
    pub written: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    fs::write(path, contents).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Executes the scenario and writes artifacts under `out_dir`:
/// `trace.jsonl` always, `stats.csv` plus `stats.json` with
/// [`RunOptions::stats`], and `run.svg` with [`RunOptions::svg`].
pub fn run(
    scenario: &LoadedScenario,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<RunReport, RunError> {
    fs::create_dir_all(out_dir).map_err(|source| RunError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    match scenario {
        LoadedScenario::D2(s) => run_dim(s, out_dir, opts),
        LoadedScenario::D3(s) => run_dim(s, out_dir, opts),
    }
}

fn run_dim<const D: usize>(
    s: &Scenario<D>,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<RunReport, RunError> {
    let trace: PlanTrace<D> = plan(&s.env, &s.agent, s.start.clone(), s.goal, &s.params)?;
    log::info!(
        "planner finished: outcome {}, {} steps, final distance {:.4}",
        trace.outcome.name(),
        trace.steps.len(),
        trace.final_distance()
    );

    let mut written = Vec::new();
    let trace_path = out_dir.join("trace.jsonl");
    write_file(&trace_path, &write_trace(&trace))?;
    written.push(trace_path);

    let stats = compute_stats(&trace);
    if opts.stats {
        let csv_path = out_dir.join("stats.csv");
        write_file(&csv_path, &stats_csv(&trace))?;
        written.push(csv_path);
        let json_path = out_dir.join("stats.json");
        let json = serde_json::to_string_pretty(&stats).expect("stats serialization");
        write_file(&json_path, &json)?;
        written.push(json_path);
    }

    if opts.svg {
        let svg_path = out_dir.join("run.svg");
        let svg = render_svg(
            &trace,
            &s.env,
            RenderOptions {
                projection: opts.projection,
                all_ellipses: opts.svg_all_ellipses,
            },
        );
        write_file(&svg_path, &svg)?;
        written.push(svg_path);
    }

    Ok(RunReport {
        outcome: trace.outcome,
        steps: trace.steps.len(),
        final_distance: trace.final_distance(),
        stats,
        written,
    })
}

/// Audits a stored trace against its scenario.
pub fn validate(
    scenario: &LoadedScenario,
    trace_text: &str,
) -> Result<AuditReport, RunError> {
    let dim = trace_dimension(trace_text)?;
    if dim != scenario.dimension() {
        return Err(TraceIoError::DimensionMismatch {
            found: dim,
            expected: scenario.dimension(),
        }
        .into());
    }
    match scenario {
        LoadedScenario::D2(s) => {
            let trace = read_trace::<2>(trace_text)?;
            Ok(validate_trace(&s.env, &s.agent, &trace))
        }
        LoadedScenario::D3(s) => {
            let trace = read_trace::<3>(trace_text)?;
            Ok(validate_trace(&s.env, &s.agent, &trace))
        }
    }
}
