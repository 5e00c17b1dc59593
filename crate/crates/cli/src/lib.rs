//! Experiment runner: reads a run configuration, executes suites of checks
//! and writes CSV reports, a summary and a metadata file.

pub mod config;
pub mod corpus;
pub mod summary;
mod suites;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use config::RunConfig;
use summary::{write_summary, SuiteResult};

/// Default output root when neither `--out` nor `output.dir` is given.
pub const OUTPUT_ROOT_ENV: &str = "BMOEXT_OUTPUT_ROOT";

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration or arguments (exit status 2).
    Config(String),
    Io(std::io::Error),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

impl From<bmoext::Error> for RunError {
    fn from(e: bmoext::Error) -> Self {
        match e {
            bmoext::Error::Io(e) => RunError::Io(e),
            other => RunError::Io(std::io::Error::other(other)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    HeatCheck,
    ExtendCheck,
    Admissibility,
    SquareEnergy,
    Equivalence,
    Pairing,
    Jacobian,
    Maximal,
    All,
}

impl Suite {
    pub const EACH: [Suite; 8] = [
        Suite::HeatCheck,
        Suite::ExtendCheck,
        Suite::Admissibility,
        Suite::SquareEnergy,
        Suite::Equivalence,
        Suite::Pairing,
        Suite::Jacobian,
        Suite::Maximal,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::HeatCheck => "heat-check",
            Suite::ExtendCheck => "extend-check",
            Suite::Admissibility => "admissibility",
            Suite::SquareEnergy => "square-energy",
            Suite::Equivalence => "equivalence",
            Suite::Pairing => "pairing",
            Suite::Jacobian => "jacobian",
            Suite::Maximal => "maximal",
            Suite::All => "all",
        }
    }

    fn expand(self) -> Vec<Suite> {
        if self == Suite::All {
            Suite::EACH.to_vec()
        } else {
            vec![self]
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub suite: Suite,
    pub grid_scale: usize,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub results: Vec<SuiteResult>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed())
    }
}

/// `--out`, then `output.dir`, then `<root>/<suite>` with the root from
/// the environment or `bmoext-out`.
pub fn output_dir(cfg: &RunConfig, suite: Suite, out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(d) = &cfg.output.dir {
        return PathBuf::from(d);
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("bmoext-out"));
    root.join(suite.name())
}

/// Runs the selected suites in order. Reports of completed suites are
/// written even when later checks fail.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, RunError> {
    if opts.grid_scale == 0 {
        return Err(RunError::Config("--grid-scale must be at least 1".into()));
    }
    cfg.validate()?;
    let resolved = cfg.scaled(opts.grid_scale);
    let dir = output_dir(cfg, opts.suite, opts.out.as_deref());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("config.toml"), resolved.to_toml())?;
    let started = chrono::Utc::now();
    let mut results = Vec::new();
    for suite in opts.suite.expand() {
        let t0 = Instant::now();
        let mut checks = suites::run_suite(suite, &resolved, &dir.join(suite.name()))?;
        for c in &mut checks {
            c.suite = suite.name().to_string();
        }
        let result = SuiteResult { suite: suite.name().to_string(), checks, wall_seconds: t0.elapsed().as_secs_f64() };
        eprintln!(
            "{:<14} {} ({} checks, {:.1} s)",
            result.suite,
            if result.passed() { "pass" } else { "FAIL" },
            result.checks.len(),
            result.wall_seconds
        );
        results.push(result);
        write_summary(&results, fs::File::create(dir.join("summary.csv"))?)?;
    }
    let finished = chrono::Utc::now();
    let mut meta = format!(
        "version = \"{}\"\nsuite = \"{}\"\ngrid_scale = {}\nworkers = {}\nstarted = \"{}\"\nfinished = \"{}\"\n",
        env!("CARGO_PKG_VERSION"),
        opts.suite.name(),
        opts.grid_scale,
        rayon::current_num_threads(),
        started.to_rfc3339(),
        finished.to_rfc3339(),
    );
    meta.push_str("\n[wall_seconds]\n");
    for r in &results {
        meta.push_str(&format!("\"{}\" = {:.3}\n", r.suite, r.wall_seconds));
    }
    fs::write(dir.join("metadata.toml"), meta)?;
    Ok(RunOutcome { dir, results })
}
