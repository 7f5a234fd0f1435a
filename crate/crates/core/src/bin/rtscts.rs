use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rtscts::experiment::{emit, run_sweep, ExperimentConfig};
use rtscts::verify::{self, CheckOutcome, Effort};

const EXIT_CONFIG: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;

/// Mean interference under RTS/CTS thinning: sweeps and self-checks.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the parameter sweep described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Skip the Monte Carlo stages.
        #[arg(long)]
        analytic_only: bool,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (defaults to the number of CPUs).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Exclusion-zone areas, union areas and the β closed form.
    VerifyGeometry(VerifyArgs),
    /// Retained intensities, joint-retention kernels and nesting of the two rules.
    VerifyIntensity(VerifyArgs),
    /// Mean interference: quadrature against Palm simulation.
    VerifyInterference(VerifyArgs),
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Smaller sample sizes.
    #[arg(long)]
    quick: bool,
    /// Write the outcomes as CSV to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
}

fn workers(requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn run(
    config: PathBuf,
    analytic_only: bool,
    out: Option<PathBuf>,
    requested: Option<usize>,
) -> ExitCode {
    let mut cfg = match ExperimentConfig::load(&config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    cfg.sweep.analytic_only |= analytic_only;
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    let points = match cfg.points() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let records = match run_sweep(&points, cfg.output.timing, workers(requested)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match emit(&records, cfg.output.format, &cfg.output.dir) {
        Ok(path) => println!("wrote {} records to {}", records.len(), path.display()),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    let stalled: Vec<_> = records.iter().filter(|r| !r.converged).collect();
    for r in &stalled {
        eprintln!(
            "warning: {} at lambda_p = {} did not converge; history {:?}",
            r.thinning, r.lambda_p, r.interference_history
        );
    }
    if stalled.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CONVERGENCE)
    }
}

fn report(outcomes: &[CheckOutcome], out: Option<PathBuf>) -> ExitCode {
    for o in outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "[{status}] criterion {}: {} ({})",
            o.criterion, o.check, o.detail
        );
    }
    if let Some(path) = out {
        if let Err(e) = fs::write(&path, verify::outcomes_csv(outcomes)) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    if outcomes.iter().all(|o| o.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VERIFY)
    }
}

fn run_verify(
    args: VerifyArgs,
    checks: impl FnOnce(u64, Effort) -> Result<Vec<CheckOutcome>, String> + Send,
) -> ExitCode {
    let effort = if args.quick {
        Effort::Quick
    } else {
        Effort::Full
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(workers(args.workers))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| checks(args.seed, effort)) {
        Ok(outcomes) => report(&outcomes, args.out),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_VERIFY)
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            analytic_only,
            out,
            workers,
        } => run(config, analytic_only, out, workers),
        Command::VerifyGeometry(args) => run_verify(args, |seed, effort| {
            Ok(verify::geometry_checks(seed, effort))
        }),
        Command::VerifyIntensity(args) => run_verify(args, |seed, effort| {
            verify::intensity_checks(seed, effort).map_err(|e| e.to_string())
        }),
        Command::VerifyInterference(args) => run_verify(args, |seed, effort| {
            verify::interference_checks(seed, effort).map_err(|e| e.to_string())
        }),
    }
}
