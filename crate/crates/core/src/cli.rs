//! Command-line front end: `run` a scenario file or write golden `vectors`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::scenario::{run_scenario, ScenarioConfig};
use crate::vectors::write_vectors;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "trustee-sim",
    version,
    about = "Sealed-bid auction simulation with an untrusted relay"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario file and emit its JSON report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the report destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the golden test vectors as JSON files.
    Vectors {
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs a scenario. Exit code 0 on success, 1 if the report disagrees with the
/// scenario's expectations or the run fails, 2 if the config cannot be used.
pub fn cmd_run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> i32 {
    let mut config = match ScenarioConfig::load(config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INVALID;
        }
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let report = match run_scenario(&config) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: scenario failed: {e}");
            return EXIT_MISMATCH;
        }
    };
    let json = report.to_json();
    match out.map(Path::to_path_buf).or(config.output.clone()) {
        Some(path) => {
            if let Err(e) = std::fs::write(&path, &json) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_INVALID;
            }
            eprintln!(
                "{}: phase {}, winner {:?}, price {}",
                report.scenario,
                report.final_phase,
                report.winner_index,
                report.price.map(|p| p.to_string()).unwrap_or_else(|| "-".into())
            );
        }
        None => print!("{json}"),
    }
    let mismatches = config
        .expect
        .as_ref()
        .map(|e| e.mismatches(&report))
        .unwrap_or_default();
    for m in &mismatches {
        eprintln!("mismatch: {m}");
    }
    if mismatches.is_empty() {
        EXIT_OK
    } else {
        EXIT_MISMATCH
    }
}

pub fn cmd_vectors(out_dir: &Path) -> i32 {
    match write_vectors(out_dir) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: cannot write vectors to {}: {e}", out_dir.display());
            EXIT_INVALID
        }
    }
}

pub fn dispatch(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { config, seed, out } => cmd_run(&config, seed, out.as_deref()),
        Command::Vectors { out } => cmd_vectors(&out),
    }
}
