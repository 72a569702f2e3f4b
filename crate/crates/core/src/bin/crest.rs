//! Command-line harness: run config-driven experiments, validate configs,
//! summarize output directories, and run built-in oracle checks.
//!
//! Exit codes: 0 success, 2 config/validation failure, 3 numeric failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crest_core::config::parse_config;
use crest_core::experiment::{print_oracle, run_experiment, run_oracle, summarize, ORACLE_NAMES};
use crest_core::Error;

#[derive(Parser)]
#[command(
    name = "crest",
    version,
    about = "Random-field maxima, Laplace integrals and tail asymptotics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config file.
    Run {
        config: PathBuf,
        /// Override the config's base seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config file without running it.
    Validate { config: PathBuf },
    /// Summarize the experiment CSVs in a directory into report.md.
    Summarize { dir: PathBuf },
    /// Run a built-in oracle check by name (use `list` to enumerate).
    Oracle { name: String },
}

fn init_threads() {
    if let Ok(v) = std::env::var("CREST_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

fn load_config(
    path: &PathBuf,
    seed: Option<u64>,
) -> Result<crest_core::config::ExperimentConfig, u8> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_VALIDATION
    })?;
    parse_config(&text, seed).map_err(|e| {
        eprintln!("config error: {e}");
        EXIT_VALIDATION
    })
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, seed } => match load_config(&config, seed) {
            Ok(cfg) => match run_experiment(&cfg) {
                Ok(outcome) => {
                    for file in &outcome.files {
                        println!("wrote {}", file.display());
                    }
                    println!("wrote {}", outcome.manifest.display());
                    0
                }
                Err(e @ (Error::Config(_) | Error::InvalidInput(_))) => {
                    eprintln!("validation failure: {e}");
                    EXIT_VALIDATION
                }
                Err(e) => {
                    eprintln!("numeric failure: {e}");
                    EXIT_NUMERIC
                }
            },
            Err(code) => code,
        },
        Command::Validate { config } => match load_config(&config, None) {
            Ok(cfg) => {
                println!(
                    "ok: {} experiment -> {}",
                    cfg.kind.as_str(),
                    cfg.output_dir.display()
                );
                0
            }
            Err(code) => code,
        },
        Command::Summarize { dir } => match summarize(&dir) {
            Ok(report) => {
                println!("wrote {}", report.display());
                0
            }
            Err(e @ Error::EmptyDirectory(_)) => {
                eprintln!("validation failure: {e}");
                EXIT_VALIDATION
            }
            Err(e) => {
                eprintln!("numeric failure: {e}");
                EXIT_NUMERIC
            }
        },
        Command::Oracle { name } => {
            if name == "list" {
                for n in ORACLE_NAMES {
                    println!("{n}");
                }
                0
            } else {
                match run_oracle(&name) {
                    Ok(outcome) => {
                        print_oracle(&outcome, std::io::stdout()).ok();
                        if outcome.passed {
                            0
                        } else {
                            EXIT_NUMERIC
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        EXIT_VALIDATION
                    }
                }
            }
        }
    };
    ExitCode::from(code)
}
