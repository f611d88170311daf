//! Command-line front end: config loading, dispatch and output files.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error, 3 certification
//! failure.

mod commands;
mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::optimizer::SolverConfig;

pub use commands::{
    cmd_certify, cmd_maximize, cmd_oracle, cmd_region, exit_code, fmt_real, load_solution, region_csv, CommandOutput, RegionOptions,
};
pub use config::{load_config, parse_config, validate, ChannelConfig, ConfigFile, Mode, Units};

#[derive(Debug, Parser)]
#[command(name = "mimo-secrecy", version, about = "Secrecy capacity regions of two-user MIMO Gaussian broadcast channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Channel configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Rate units for inputs and outputs; defaults to the config's units.
    #[arg(long, value_enum)]
    units: Option<Units>,
}

#[derive(Debug, Args)]
struct Point {
    #[arg(long)]
    l1: f64,
    #[arg(long)]
    l2: f64,
    /// Common-rate floor, in the chosen units.
    #[arg(long, default_value_t = 0.0)]
    r0: f64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace the region boundary into a CSV file plus a manifest.
    Region {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        r0_steps: usize,
        #[arg(long, default_value_t = 9)]
        weight_steps: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Append row-major B0 and B1 entries to every row.
        #[arg(long)]
        dump_covariances: bool,
    },
    /// Maximize l1 R1 + l2 R2 at a common-rate floor.
    Maximize {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Certify a solution file holding B0 and B1.
    Certify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Exhaustive grid search (t <= 2).
    Oracle {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        point: Point,
        #[arg(long, default_value_t = 9)]
        resolution: usize,
    },
}

fn solver_with_seed(cfg: &ChannelConfig, seed: Option<u64>) -> SolverConfig {
    let mut s = cfg.solver().clone();
    if let Some(seed) = seed {
        s.seed = seed;
    }
    s
}

/// `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<CommandOutput> {
    match cli.command {
        Command::Region {
            common,
            out,
            r0_steps,
            weight_steps,
            seed,
            dump_covariances,
        } => {
            let started = chrono::Utc::now().to_rfc3339();
            let cfg = load_config(&common.config)?;
            let solver = solver_with_seed(&cfg, seed);
            let opts = RegionOptions {
                r0_steps,
                weight_steps,
                units: common.units.unwrap_or(cfg.units()),
                dump_covariances,
            };
            let csv = cmd_region(&cfg, &solver, &opts)?;
            write_file(&out, &csv)?;
            let manifest = json!({
                "command": "region",
                "arguments": {
                    "config": common.config,
                    "out": out,
                    "r0_steps": r0_steps,
                    "weight_steps": weight_steps,
                    "units": opts.units,
                    "dump_covariances": dump_covariances,
                },
                "config": cfg.file,
                "seed": solver.seed,
                "solver": solver,
                "version": env!("CARGO_PKG_VERSION"),
                "started_at": started,
            });
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
            write_file(&manifest_path(&out), &text)?;
            Ok(CommandOutput {
                stdout: String::new(),
                exit: 0,
            })
        }
        Command::Maximize { common, point, seed } => {
            let cfg = load_config(&common.config)?;
            let solver = solver_with_seed(&cfg, seed);
            cmd_maximize(&cfg, &solver, point.l1, point.l2, point.r0, common.units.unwrap_or(cfg.units()))
        }
        Command::Certify { common, point, solution } => {
            let cfg = load_config(&common.config)?;
            let split = load_solution(&solution)?;
            cmd_certify(&cfg, &split, point.l1, point.l2, point.r0, common.units.unwrap_or(cfg.units()))
        }
        Command::Oracle {
            common,
            point,
            resolution,
        } => {
            let cfg = load_config(&common.config)?;
            cmd_oracle(&cfg, point.l1, point.l2, point.r0, resolution, common.units.unwrap_or(cfg.units()))
        }
    }
}

/// Parses `args` (program name first), runs the command, and returns the
/// exit code. Reports go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.stdout.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return 2;
            }
            out.exit
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
