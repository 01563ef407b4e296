use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use perpsim::harness::{emit_reports, run_experiment, seed_plan, ExperimentConfig};
use perpsim::Error;

#[derive(Parser)]
#[command(name = "perpsim", version, about = "Perpetuity Monte Carlo experiments")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding `output_dir`.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Master seed, overriding `master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its reports.
    Run { config: PathBuf },
    /// Parse and validate a config file.
    Validate { config: PathBuf },
    /// Print the replicate streams derived from the master seed.
    Seeds { config: PathBuf },
}

const EXIT_ERROR: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_CHECKS: u8 = 3;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_ERROR })
}

fn load(cli: &Cli, path: &Path) -> Result<ExperimentConfig, Error> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(t) = cli.threads {
        config.threads = Some(t);
    }
    if let Some(dir) = &cli.output {
        config.output_dir = dir.clone();
    }
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let path = match &cli.command {
        Command::Run { config } | Command::Validate { config } | Command::Seeds { config } => config.clone(),
    };
    let config = match load(&cli, &path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match cli.command {
        Command::Validate { .. } => {
            println!("ok: {} (digest {})", config.experiment.name(), config.digest());
            ExitCode::SUCCESS
        }
        Command::Seeds { .. } => {
            println!("master_seed {}", config.master_seed);
            println!("cell,a,replicates,first_stream,last_stream");
            for line in seed_plan(&config) {
                let a = line.a.map(|a| a.to_string()).unwrap_or_default();
                println!(
                    "{},{},{},{:#018x},{:#018x}",
                    line.cell, a, line.replicates, line.first_stream, line.last_stream
                );
            }
            ExitCode::SUCCESS
        }
        Command::Run { .. } => {
            let bundle = match run_experiment(&config) {
                Ok(b) => b,
                Err(e) => return fail(&e),
            };
            match emit_reports(&bundle, &config.output_dir) {
                Ok(files) => {
                    for f in files {
                        println!("wrote {}", f.display());
                    }
                }
                Err(e) => return fail(&e),
            }
            for c in bundle.checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {}: {}", c.name, c.detail);
            }
            if bundle.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECKS)
            }
        }
    }
}
