use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bmoext_cli::config::RunConfig;
use bmoext_cli::{run, RunOptions, Suite};

#[derive(Parser)]
#[command(name = "bmoext", version, about = "Runs numerical check suites for sigma-harmonic extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite from a TOML configuration.
    Run {
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        /// Multiply every grid resolution by this factor.
        #[arg(long, default_value_t = 1)]
        grid_scale: usize,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides the configuration and the environment).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run { config, suite, grid_scale, workers, out } = cli.command;
    if let Some(n) = workers {
        if n == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = RunConfig::load(&config).and_then(|cfg| run(&cfg, &RunOptions { suite, grid_scale, out }));
    match outcome {
        Ok(o) => {
            eprintln!("reports in {}", o.dir.display());
            if o.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
