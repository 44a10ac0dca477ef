use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cloakbench::commands::{
    cmd_export_tensors, cmd_exponents, cmd_solve, cmd_sweep, selftest, summary_line, write_sweep,
};
use cloakbench::{exit, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "cloakbench", version, about = "Near-cloak decay-rate experiments")]
struct Cli {
    /// Worker threads; 0 uses every core. Falls back to CLOAKBENCH_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "cloakbench-out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Decay exponents for the layer parameters (r, s, t).
    Exponents {
        #[arg(short, allow_negative_numbers = true)]
        r: f64,
        #[arg(short, allow_negative_numbers = true)]
        s: f64,
        #[arg(short, allow_negative_numbers = true)]
        t: f64,
    },
    /// One solve at fixed rho: farfield.csv, coefficients.json, diagnostics.json.
    Solve {
        #[command(flatten)]
        common: Common,
    },
    /// Rho sweep with slope fit: sweep.json and sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Synthetic data instead of a config, e.g. `powerlaw:3`.
        #[arg(long)]
        selftest: Option<String>,
    },
    /// Physical material tensors on a grid as CSV.
    ExportTensors {
        #[command(flatten)]
        common: Common,
    },
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return Ok(n);
    }
    match std::env::var("CLOAKBENCH_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("CLOAKBENCH_THREADS = \"{v}\" is not a thread count"))),
        Err(_) => Ok(0),
    }
}

fn load(path: &Option<PathBuf>) -> Result<ExperimentConfig, CliError> {
    let p = path
        .as_deref()
        .ok_or_else(|| CliError::Config("--config <path> is required".into()))?;
    ExperimentConfig::load(p)
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let threads = thread_count(cli.threads)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    match cli.command {
        Command::Exponents { r, s, t } => {
            let (line, valid) = cmd_exponents(r, s, t);
            println!("{line}");
            Ok(if valid { exit::OK } else { exit::INVALID_EXPONENTS })
        }
        Command::Solve { common } => {
            let cfg = load(&common.config)?;
            let report = cmd_solve(&cfg, &common.out)?;
            log::info!("wrote solve outputs to {}", common.out.display());
            let residual = report.diagnostics["energy_residual"].clone();
            println!("n_max={} energy_residual={residual}", report.coefficients.n_max());
            Ok(exit::OK)
        }
        Command::Sweep {
            common,
            tolerance,
            selftest: mode,
        } => {
            let result = match mode {
                Some(mode) => {
                    let r = selftest(&mode, tolerance)?;
                    write_sweep(&r, &serde_json::json!({ "selftest": mode }), &common.out)?;
                    r
                }
                None => cmd_sweep(&load(&common.config)?, tolerance, &common.out)?,
            };
            println!("{}", summary_line(&result));
            if result.fit.is_none() && !result.failures.is_empty() {
                for f in &result.failures {
                    eprintln!("rho = {}: {}", f.rho, f.error);
                }
                return Ok(exit::SOLVER);
            }
            Ok(if result.passed { exit::OK } else { exit::SWEEP_FAILED })
        }
        Command::ExportTensors { common } => {
            let cfg = load(&common.config)?;
            let n = cmd_export_tensors(&cfg, &common.out)?;
            println!("wrote {n} rows to {}", Path::new(&common.out).join("tensors.csv").display());
            Ok(exit::OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::CONFIG as u8),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
