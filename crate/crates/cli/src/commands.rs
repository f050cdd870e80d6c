//! The `solve`, `verify` and `sweep-alpha0` pipelines.

use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::{SecondsFormat, Utc};
use mechsolve_core::solver::{optimize_alpha0, solve, Alpha0Search, Solution};
use mechsolve_core::verifier::verify_with_matrix;
use mechsolve_core::{ProfitBreakdown, RewardSchedule, TypeGrid, VerificationReport};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, LoadedConfig, ProblemConfig};
use crate::output::{self, OutputError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success = 0,
    NotConverged = 2,
    VerificationFailed = 3,
}

impl Outcome {
    pub fn code(self) -> u8 {
        self as u8
    }
}

/// Any failure here maps to exit status 1.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{context}: {source}")]
    Model {
        context: String,
        source: mechsolve_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("self-check failed: {0} differs between two identical runs")]
    Nondeterministic(String),
}

impl CliError {
    pub const EXIT_CODE: u8 = 1;
}

fn model(context: impl Into<String>) -> impl FnOnce(mechsolve_core::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Model { context, source }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`; `./out` when both are absent.
    pub out_dir: Option<PathBuf>,
    pub quiet: bool,
    /// Run the pipeline twice and insist on byte-identical files.
    pub seedless: bool,
}

impl RunOptions {
    fn resolve_out(&self, cfg: &LoadedConfig) -> PathBuf {
        self.out_dir
            .clone()
            .or_else(|| cfg.raw.output_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn progress(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

#[derive(Debug, Serialize)]
struct VerificationSummary {
    passed: bool,
    failures: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SearchSummary {
    interval: [f64; 2],
    best_alpha0: f64,
    evaluations: usize,
    failed_candidates: Vec<(f64, String)>,
}

#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config_path: &'a Path,
    config: &'a ProblemConfig,
    started_at: String,
    finished_at: String,
    elapsed_seconds: f64,
    converged: bool,
    iterations: usize,
    alpha0: f64,
    u_bar: f64,
    profit: ProfitBreakdown,
    verification: VerificationSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    search: Option<SearchSummary>,
}

/// Files produced by a solve, rendered in memory.
#[derive(Debug, Clone, PartialEq)]
struct SolveArtifacts {
    schedule: Vec<u8>,
    trace: Vec<u8>,
    snapshots: Vec<u8>,
    sweep: Option<Vec<u8>>,
}

impl SolveArtifacts {
    fn render(solution: &Solution, search: Option<&Alpha0Search>) -> Self {
        Self {
            schedule: output::schedule_csv(&solution.schedule),
            trace: output::trace_csv(&solution.trace),
            snapshots: output::snapshots_csv(&solution.trace, solution.schedule.grid().nodes()),
            sweep: search.map(|s| output::sweep_csv(&s.candidates)),
        }
    }

    fn first_difference(&self, other: &Self) -> Option<&'static str> {
        if self.schedule != other.schedule {
            Some("schedule.csv")
        } else if self.trace != other.trace {
            Some("trace.csv")
        } else if self.snapshots != other.snapshots {
            Some("snapshots.csv")
        } else if self.sweep != other.sweep {
            Some("sweep.csv")
        } else {
            None
        }
    }
}

fn run_solver(
    cfg: &LoadedConfig,
    opts: &RunOptions,
) -> Result<(Solution, Option<Alpha0Search>), CliError> {
    match cfg.search_interval {
        Some(interval) => {
            opts.progress(format!(
                "searching alpha0 over [{}, {}]",
                interval.0, interval.1
            ));
            let search = optimize_alpha0(&cfg.solver, &cfg.problem, interval)
                .map_err(model("alpha0 search"))?;
            Ok((search.best.clone(), Some(search)))
        }
        None => {
            let sol = solve(&cfg.solver, &cfg.problem).map_err(model("solve"))?;
            Ok((sol, None))
        }
    }
}

fn finish_solve(
    command: &'static str,
    cfg: &LoadedConfig,
    opts: &RunOptions,
) -> Result<Outcome, CliError> {
    let started_at = Utc::now();
    let clock = Instant::now();
    let (solution, search) = run_solver(cfg, opts)?;
    let artifacts = SolveArtifacts::render(&solution, search.as_ref());
    if opts.seedless {
        let (again, again_search) = run_solver(cfg, opts)?;
        let rerun = SolveArtifacts::render(&again, again_search.as_ref());
        if let Some(name) = artifacts.first_difference(&rerun) {
            return Err(CliError::Nondeterministic(name.into()));
        }
    }

    let out = opts.resolve_out(cfg);
    output::write_file(&out, "schedule.csv", &artifacts.schedule)?;
    output::write_file(&out, "trace.csv", &artifacts.trace)?;
    output::write_file(&out, "snapshots.csv", &artifacts.snapshots)?;
    if let Some(bytes) = &artifacts.sweep {
        output::write_file(&out, "sweep.csv", bytes)?;
    }

    let report = verify_with_matrix(&solution.schedule, &cfg.problem, &cfg.raw.verify)
        .map(|(r, _)| r)
        .map_err(model("verification"))?;
    let manifest = RunManifest {
        tool: "mechsolve",
        version: VERSION,
        command,
        config_path: &cfg.path,
        config: &cfg.raw,
        started_at: started_at.to_rfc3339_opts(SecondsFormat::Millis, true),
        finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        converged: solution.converged,
        iterations: solution.iterations(),
        alpha0: solution.state.alpha[0],
        u_bar: solution.u_bar,
        profit: solution.profit,
        verification: VerificationSummary {
            passed: report.passed,
            failures: report.failures.clone(),
        },
        search: search.as_ref().map(|s| SearchSummary {
            interval: {
                let (lo, hi) = cfg.search_interval.expect("search ran");
                [lo, hi]
            },
            best_alpha0: s.best_alpha0,
            evaluations: s.candidates.len() + s.failures.len(),
            failed_candidates: s
                .failures
                .iter()
                .map(|(a, e)| (*a, e.to_string()))
                .collect(),
        }),
    };
    output::write_json(&out, "manifest.json", &manifest)?;

    opts.progress(format!(
        "{} after {} iterations; alpha0 = {}, profit = {} (virtual {}), verification {}",
        if solution.converged {
            "converged"
        } else {
            "NOT converged"
        },
        solution.iterations(),
        solution.state.alpha[0],
        solution.profit.direct,
        solution.profit.virtual_surplus,
        if report.passed { "passed" } else { "failed" },
    ));
    opts.progress(format!("outputs written to {}", out.display()));

    Ok(if solution.converged {
        Outcome::Success
    } else {
        Outcome::NotConverged
    })
}

pub fn cmd_solve(config_path: &Path, opts: &RunOptions) -> Result<Outcome, CliError> {
    let cfg = LoadedConfig::load(config_path)?;
    finish_solve("solve", &cfg, opts)
}

pub fn cmd_sweep_alpha0(config_path: &Path, opts: &RunOptions) -> Result<Outcome, CliError> {
    let cfg = LoadedConfig::load(config_path)?;
    if cfg.search_interval.is_none() {
        return Err(CliError::Usage(format!(
            "{}: sweep-alpha0 needs solver.alpha0 = \"search\" (optionally with solver.search_interval = [lo, hi])",
            config_path.display()
        )));
    }
    finish_solve("sweep-alpha0", &cfg, opts)
}

/// Rebuilds a schedule from file columns, checking it against the problem's support.
pub fn schedule_from_columns(
    cols: output::ScheduleColumns,
    cfg: &LoadedConfig,
    path: &Path,
) -> Result<RewardSchedule, CliError> {
    let bad = |message: String| {
        CliError::Output(OutputError::Format {
            path: path.to_path_buf(),
            message,
        })
    };
    let grid = TypeGrid::from_nodes(cols.theta).map_err(|e| bad(e.to_string()))?;
    let (lo, hi) = (cfg.problem.dist.lo(), cfg.problem.dist.hi());
    let tol = 1e-12 * hi.abs().max(1.0);
    if (grid.lo() - lo).abs() > tol || (grid.hi() - hi).abs() > tol {
        return Err(bad(format!(
            "grid spans [{}, {}] but the type support is [{lo}, {hi}]",
            grid.lo(),
            grid.hi()
        )));
    }
    RewardSchedule::new(grid, cols.alpha, cols.beta).map_err(|e| bad(e.to_string()))
}

pub fn run_verification(
    schedule: &RewardSchedule,
    cfg: &LoadedConfig,
) -> Result<(VerificationReport, Vec<u8>), CliError> {
    let (report, matrix) = verify_with_matrix(schedule, &cfg.problem, &cfg.raw.verify)
        .map_err(model("verification"))?;
    Ok((report, output::utility_matrix_csv(&matrix)))
}

pub fn cmd_verify(
    config_path: &Path,
    schedule_path: &Path,
    opts: &RunOptions,
) -> Result<Outcome, CliError> {
    let cfg = LoadedConfig::load(config_path)?;
    let cols = output::read_schedule_csv(schedule_path)?;
    let schedule = schedule_from_columns(cols, &cfg, schedule_path)?;

    let (report, matrix_csv) = run_verification(&schedule, &cfg)?;
    if opts.seedless {
        let (again, again_csv) = run_verification(&schedule, &cfg)?;
        if again_csv != matrix_csv || again != report {
            return Err(CliError::Nondeterministic("utility_matrix.csv".into()));
        }
    }

    let out = opts.resolve_out(&cfg);
    output::write_json(&out, "verification.json", &report)?;
    output::write_file(&out, "utility_matrix.csv", &matrix_csv)?;

    if report.passed {
        opts.progress(format!("verification passed ({} types)", report.n_grid));
        Ok(Outcome::Success)
    } else {
        opts.progress(format!(
            "verification failed: {}",
            report.failures.join(", ")
        ));
        Ok(Outcome::VerificationFailed)
    }
}
