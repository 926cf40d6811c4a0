use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use livsic_lab::config::{Experiment, ExperimentConfig};
use livsic_lab::pool::workers_from_env;
use livsic_lab::{execute, LabError};

/// Runs one experiment. The worker count comes from LIVSIC_LAB_WORKERS.
#[derive(Parser)]
#[command(name = "livsic-lab", version)]
struct Cli {
    experiment: Experiment,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, default `runs/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<i32, LabError> {
    let cfg = ExperimentConfig::load(&cli.config)?.resolve(cli.experiment, cli.seed, cli.out)?;
    let cfg = match cfg.out {
        Some(_) => cfg,
        None => ExperimentConfig { out: Some(PathBuf::from("runs").join(cli.experiment.name())), ..cfg },
    };
    let workers = workers_from_env()?;
    let done = execute(&cfg, workers)?;
    for v in &done.outcome.verdicts {
        println!("{:<5} {}: {}", if v.ok { "ok" } else { "FAIL" }, v.name, v.verdict);
    }
    if let Some(p) = &done.report {
        println!("report: {}", p.display());
    }
    Ok(done.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("livsic-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
