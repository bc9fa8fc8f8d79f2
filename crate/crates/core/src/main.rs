use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fracshe::config::{ExperimentConfig, Pipeline};
use fracshe::lab::{emit_report, run_experiment};

#[derive(Parser)]
#[command(name = "fracshe-lab", about = "Experiments for the fractional semilinear heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    KernelDiagnostics,
    ConditionSweep,
    PicardRun,
    KappaStar,
    CalibrateConstants,
    /// Summarize the artifacts in the output directory.
    Report,
}

fn pipeline(c: Command) -> Option<Pipeline> {
    Some(match c {
        Command::KernelDiagnostics => Pipeline::KernelDiagnostics,
        Command::ConditionSweep => Pipeline::ConditionSweep,
        Command::PicardRun => Pipeline::PicardRun,
        Command::KappaStar => Pipeline::KappaStar,
        Command::CalibrateConstants => Pipeline::CalibrateConstants,
        Command::Report => return None,
    })
}

fn run(cli: Cli) -> fracshe::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::parse("")?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let out = cli.out.clone().or(cfg.output.clone()).unwrap_or_else(|| PathBuf::from("lab-out"));
    match pipeline(cli.command) {
        Some(pl) => {
            let res = run_experiment(&cfg, pl, &out, cli.workers)?;
            for (k, v) in &res.summary {
                println!("{k} = {v}");
            }
        }
        None => {
            let text = emit_report(&out)?;
            std::fs::create_dir_all(&out)?;
            std::fs::write(out.join("report.txt"), &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
