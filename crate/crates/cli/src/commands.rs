//! Subcommands. Each writes data to `out`, diagnostics to `err`, and returns
//! the process exit code: 0 success, 1 runtime or data failure, 2 usage.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use tilebench::backends::{BackendError, PoolConfig, Registry, TileConfig};
use tilebench::harness::{self, HarnessError, RunConfig, RunEvent};
use tilebench::stats::percentile;

use crate::analysis::{analyze, AnalysisReport, AnalyzeOptions, SCHEMA};
use crate::render;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tilebench", version, about = "Benchmark and compare dense matrix multiplication backends")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time every backend at every size and write the trial records.
    Run(RunArgs),
    /// Summarize and test a trial CSV.
    Analyze(AnalyzeArgs),
    /// Render a saved analysis JSON.
    Report(ReportArgs),
    /// List the available backends.
    Backends,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Threads {
    Auto,
    Fixed(usize),
}

fn parse_threads(s: &str) -> Result<Threads, String> {
    if s == "auto" {
        return Ok(Threads::Auto);
    }
    match s.parse::<usize>() {
        Ok(0) | Err(_) => Err(format!("expected a positive integer or \"auto\", got {s:?}")),
        Ok(n) => Ok(Threads::Fixed(n)),
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Comma-separated backend names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub backends: Vec<String>,
    /// Comma-separated matrix sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Tile edge of the tiled backends.
    #[arg(long, default_value_t = 32)]
    pub tile: usize,
    /// Worker threads of the parallel backends.
    #[arg(long, default_value = "auto", value_parser = parse_threads)]
    pub threads: Threads,
    /// Untimed calls before the timed trials of each pair.
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Check the last product of each pair against the naive result.
    #[arg(long)]
    pub verify: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnalyzeFormat {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Bootstrap resamples per group.
    #[arg(long, default_value_t = tilebench::stats::DEFAULT_RESAMPLES)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = AnalyzeFormat::Table)]
    pub format: AnalyzeFormat,
    /// Also write `n,backend,mean,lo,hi` rows here.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    /// Run the pairwise tests even where the omnibus test does not reject.
    #[arg(long)]
    pub force_posthoc: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormat {
    Md,
    Csv,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Analysis JSON written by `analyze --format json`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    pub format: ReportFormat,
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().ansi().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    match cli.command {
        Command::Run(a) => cmd_run(&a, err),
        Command::Analyze(a) => cmd_analyze(&a, out, err),
        Command::Report(a) => cmd_report(&a, out, err),
        Command::Backends => cmd_backends(out),
    }
}

fn config_error(e: &HarnessError) -> bool {
    matches!(
        e,
        HarnessError::Config(_)
            | HarnessError::Backend(BackendError::Unknown(_) | BackendError::InvalidConfig(_))
    )
}

fn builtin_registry(tile: TileConfig, pool: PoolConfig) -> Registry {
    Registry::with_builtins(tile, pool)
}

pub fn cmd_run(a: &RunArgs, err: &mut dyn Write) -> i32 {
    let tile = match TileConfig::new(a.tile) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: --tile: {e}");
            return EXIT_USAGE;
        }
    };
    let pool = match a.threads {
        Threads::Auto => PoolConfig::default(),
        Threads::Fixed(n) => PoolConfig::new(n).expect("parser rejects zero"),
    };
    let config = RunConfig {
        trials: a.trials,
        warmup: a.warmup,
        seed: a.seed,
        tile,
        threads: pool,
        verify: a.verify,
        ..RunConfig::new(a.backends.clone(), a.sizes.clone())
    };
    let registry = builtin_registry(tile, pool);

    let pairs = config.backends.len() * config.sizes.len();
    let mut done = 0;
    let mut seconds = Vec::with_capacity(config.trials);
    let outcome = harness::run_trials_with(&config, &registry, |event| match event {
        RunEvent::PairStarted { backend, n } => {
            done += 1;
            seconds.clear();
            let _ = writeln!(err, "[{done}/{pairs}] {backend} n={n}");
        }
        RunEvent::Trial { record, .. } => seconds.push(record.seconds),
        RunEvent::Verified { backend, n, max_rel_diff } => {
            let _ = writeln!(err, "    verified {backend} n={n}: max rel diff {max_rel_diff:.2e}");
        }
        RunEvent::PairFinished { n, .. } => {
            seconds.sort_by(f64::total_cmp);
            if let Ok(median) = percentile(&seconds, 50.0) {
                let gflops = harness::flops_for(n, median).unwrap_or(f64::NAN) / 1e9;
                let _ = writeln!(err, "    median {median:.4e} s, {gflops:.3} GFLOPS");
            }
        }
    });

    let outcome = match outcome {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return if config_error(&e) { EXIT_USAGE } else { EXIT_FAILURE };
        }
    };
    if let Err(e) = harness::write_records(&a.out, &outcome.records, &outcome.metadata) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_FAILURE;
    }
    match outcome.failure {
        Some(f) => {
            let _ = writeln!(
                err,
                "error: {f}\n{} records written to {} (marked incomplete)",
                outcome.records.len(),
                a.out.display()
            );
            EXIT_FAILURE
        }
        None => {
            let _ = writeln!(err, "{} records written to {}", outcome.records.len(), a.out.display());
            EXIT_OK
        }
    }
}

fn write_file(path: &Path, text: &str, err: &mut dyn Write) -> bool {
    match std::fs::write(path, text) {
        Ok(()) => true,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", path.display());
            false
        }
    }
}

pub fn cmd_analyze(a: &AnalyzeArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let opts = AnalyzeOptions {
        alpha: a.alpha,
        resamples: a.bootstrap,
        level: a.level,
        seed: a.seed,
        force_posthoc: a.force_posthoc,
    };
    let records = match harness::read_csv(&a.input) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    match harness::read_metadata(&a.input) {
        Ok(Some(meta)) if !meta.complete => {
            let _ = writeln!(
                err,
                "warning: {} comes from an incomplete run: {}",
                a.input.display(),
                meta.error.as_deref().unwrap_or("unknown error")
            );
        }
        Ok(_) => {}
        Err(e) => {
            let _ = writeln!(err, "warning: {e}");
        }
    }
    let report = match analyze(&records, &opts) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {}: {e}", a.input.display());
            return EXIT_FAILURE;
        }
    };

    let text = match a.format {
        AnalyzeFormat::Table => Ok(render::table(&report)),
        AnalyzeFormat::Json => render::json(&report).map_err(|e| e.to_string()),
        AnalyzeFormat::Csv => render::summary_csv(&report).map_err(|e| e.to_string()),
    };
    let text = match text {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    if let Some(path) = &a.plot_data {
        let plot = match render::plot_data(&report) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                return EXIT_FAILURE;
            }
        };
        if !write_file(path, &plot, err) {
            return EXIT_FAILURE;
        }
    }
    if out.write_all(text.as_bytes()).is_err() {
        return EXIT_FAILURE;
    }
    EXIT_OK
}

/// Reads and checks an analysis JSON file.
pub fn load_report(path: &Path) -> Result<AnalysisReport, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    if text.trim().is_empty() {
        return Err(format!("{}: empty analysis file", path.display()));
    }
    let report: AnalysisReport =
        serde_json::from_str(&text).map_err(|e| format!("{}: not an analysis report: {e}", path.display()))?;
    if report.schema != SCHEMA {
        return Err(format!(
            "{}: schema {:?}, expected {SCHEMA:?}",
            path.display(),
            report.schema
        ));
    }
    if report.summaries.is_empty() {
        return Err(format!("{}: analysis has no groups", path.display()));
    }
    Ok(report)
}

pub fn cmd_report(a: &ReportArgs, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let report = match load_report(&a.input) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_FAILURE;
        }
    };
    let text = match a.format {
        ReportFormat::Md => Ok(render::markdown(&report)),
        ReportFormat::Csv => render::summary_csv(&report),
    };
    match text {
        Ok(t) if out.write_all(t.as_bytes()).is_ok() => EXIT_OK,
        Ok(_) => EXIT_FAILURE,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_FAILURE
        }
    }
}

pub fn cmd_backends(out: &mut dyn Write) -> i32 {
    let registry = builtin_registry(TileConfig::default(), PoolConfig::default());
    for d in registry.descriptors() {
        let kind = if d.parallel { "parallel" } else { "sequential" };
        let _ = writeln!(out, "{:<16} {kind}", d.name);
    }
    EXIT_OK
}
