use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use finslab_harness::{run_experiment, Config, Experiment, HarnessError, RunOptions};

/// Run a pseudo-Finsler verification experiment.
#[derive(Debug, Parser)]
#[command(name = "finslab", version)]
struct Cli {
    /// tensors, geodesic, lightcone, conformal-pregeodesic, variation, focal,
    /// focal-correspondence
    experiment: String,
    /// Sectioned key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for report.txt and curves/.
    #[arg(long, default_value = "finslab-out")]
    out: PathBuf,
    /// Seed for every random draw (overrides [run] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Integration step (overrides [run] step).
    #[arg(long)]
    step: Option<f64>,
    /// Headline tolerance (overrides [run] tol).
    #[arg(long)]
    tol: Option<f64>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e:#}");
            let config = e.downcast_ref::<HarnessError>().is_some_and(|h| matches!(h, HarnessError::Config(_)));
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_FAIL })
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<bool> {
    let experiment: Experiment = cli.experiment.parse().map_err(HarnessError::Config)?;
    let cfg = Config::load(&cli.config).map_err(HarnessError::Config)?;
    let opts = RunOptions {
        seed: cli.seed,
        step: cli.step,
        tol: cli.tol,
    };
    let report = run_experiment(experiment, &cfg, opts)?;
    report
        .write(&cli.out)
        .with_context(|| format!("writing results to '{}'", cli.out.display()))?;
    for r in report.failures() {
        eprintln!("FAIL {}: {:e} > {:e}", r.name, r.value, r.tolerance);
    }
    let passed = report.passed();
    println!(
        "{}: {} of {} assertions passed; report in {}",
        experiment.name(),
        report.records.iter().filter(|r| r.pass).count(),
        report.records.len(),
        cli.out.join("report.txt").display()
    );
    Ok(passed)
}
