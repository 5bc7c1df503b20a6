use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ecan::planner::Outcome;
use ecan::render::Projection;
use ecan::runner::{run, validate, RunOptions};
use ecan::scenario::{load_scenario_with, LoadOverrides};

/// Online ellipsoid-tunnel path planner.
#[derive(Parser)]
#[command(name = "ecan", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a scenario and write the trace (plus optional artifacts).
    Run {
        scenario: PathBuf,
        /// Output directory for trace/stats/svg.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Render the run to run.svg.
        #[arg(long)]
        svg: bool,
        /// Draw every step ellipsoid instead of branch-change steps only.
        #[arg(long)]
        svg_all: bool,
        /// Projection plane for 3D renders (xy, xz or yz).
        #[arg(long, default_value = "xy")]
        projection: String,
        /// Write per-step stats.csv and summary stats.json.
        #[arg(long)]
        stats: bool,
        /// Override the scenario seed for generated worlds.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the step budget.
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Re-check a stored trace against its scenario.
    Validate {
        trace: PathBuf,
        scenario: PathBuf,
    },
    /// Print the sensing-grid size of a scenario.
    GridInfo { scenario: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ECAN_LOG", "warn")).init();
    match dispatch() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn dispatch() -> Result<ExitCode, String> {
    match Cli::parse().command {
        Command::Run {
            scenario,
            out,
            svg,
            svg_all,
            projection,
            stats,
            seed,
            max_steps,
        } => {
            let projection = Projection::parse(&projection)
                .ok_or_else(|| format!("unknown projection `{projection}`"))?;
            let text = read(&scenario)?;
            let loaded = load_scenario_with(&text, LoadOverrides { seed, max_steps })
                .map_err(|e| e.to_string())?;
            let report = run(
                &loaded,
                &out,
                RunOptions {
                    svg: svg || svg_all,
                    svg_all_ellipses: svg_all,
                    projection,
                    stats,
                },
            )
            .map_err(|e| e.to_string())?;
            println!(
                "{}: {} steps, final distance {:.4}",
                report.outcome.name(),
                report.steps,
                report.final_distance
            );
            for p in &report.written {
                println!("wrote {}", p.display());
            }
            if report.outcome == Outcome::GoalReached {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{}", report.outcome.name());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Validate { trace, scenario } => {
            let scenario_text = read(&scenario)?;
            let loaded =
                load_scenario_with(&scenario_text, LoadOverrides::default())
                    .map_err(|e| e.to_string())?;
            let trace_text = read(&trace)?;
            let report = validate(&loaded, &trace_text).map_err(|e| e.to_string())?;
            if report.is_clean() {
                println!(
                    "trace is clean; minimum obstacle clearance {:.4}",
                    report.min_obstacle_clearance
                );
                Ok(ExitCode::SUCCESS)
            } else {
                for v in &report.violations {
                    eprintln!("step {}: {:?}: {}", v.step, v.kind, v.detail);
                }
                eprintln!("{} violation(s)", report.violations.len());
                Ok(ExitCode::FAILURE)
            }
        }
        Command::GridInfo { scenario } => {
            let text = read(&scenario)?;
            let loaded = load_scenario_with(&text, LoadOverrides::default())
                .map_err(|e| e.to_string())?;
            println!(
                "dimension {}: sensing grid has {} points",
                loaded.dimension(),
                loaded.grid_count()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
