use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sparsebayes_cli::config::{ExperimentConfig, Format};
use sparsebayes_cli::error::{CliError, CliResult};
use sparsebayes_cli::run_to_dir;

#[derive(Parser)]
#[command(name = "sparsebayes", version, about = "Sparse Bayesian spectral recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; all cores when absent.
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory; overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated subset of csv, json, pgm; overrides `formats`.
        #[arg(long, value_delimiter = ',')]
        format: Option<Vec<Format>>,
    },
}

fn run(cmd: Command) -> CliResult<()> {
    let Command::Run { config, seed, jobs, out, format } = cmd;
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(j) = jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let formats = format.unwrap_or_else(|| cfg.formats.clone());
    log::info!("running {} into {}", cfg.experiment.name(), dir.display());
    let outcome = run_to_dir(&cfg, &dir, &formats)?;
    for line in &outcome.summary {
        println!("{line}");
    }
    for f in &outcome.files {
        log::info!("wrote {}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPARSEBAYES_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
