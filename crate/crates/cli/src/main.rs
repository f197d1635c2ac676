use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use parabolic_uzawa_cli::{parse_config, run_subcommand, Report, RunError, Subcommand};

#[derive(Parser)]
#[command(name = "parabolic-uzawa", version, about = "Space-time saddle-point experiments for quasi-linear parabolic problems")]
enum Cli {
    /// Inexact Uzawa solve; writes the nodal solution and a summary.
    Solve(Common),
    /// Error, rate and quasi-optimality over the configured mesh sizes.
    Convergence(Common),
    /// Per-iteration Uzawa trace against a reference solution, plus the estimator band.
    UzawaTrace(Common),
    /// Inf-sup constants over uniform refinements.
    Infsup(Common),
    /// Test-space enrichment until the quasi-optimality test holds.
    Pjotr(Common),
    /// Condition numbers of the preconditioned trial Riesz map.
    Precond(Common),
    /// Constant bundle and Uzawa inner-step plan.
    Constants(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn print_report(cmd: Subcommand, report: &Report) {
    for (k, v) in &report.summary {
        println!("{k} = {v}");
    }
    for f in &report.files {
        println!("{}: wrote {}", cmd.name(), f.display());
    }
}

fn main() -> ExitCode {
    let (cmd, args) = match Cli::parse() {
        Cli::Solve(a) => (Subcommand::Solve, a),
        Cli::Convergence(a) => (Subcommand::Convergence, a),
        Cli::UzawaTrace(a) => (Subcommand::UzawaTrace, a),
        Cli::Infsup(a) => (Subcommand::Infsup, a),
        Cli::Pjotr(a) => (Subcommand::Pjotr, a),
        Cli::Precond(a) => (Subcommand::Precond, a),
        Cli::Constants(a) => (Subcommand::Constants, a),
    };
    let result = parse_config(&args.config).map_err(RunError::Config).and_then(|mut cfg| {
        if let Some(out) = args.out {
            cfg.output.dir = out;
        }
        if let Some(seed) = args.seed {
            cfg.seed = seed;
        }
        run_subcommand(cmd, &cfg)
    });
    match result {
        Ok(report) => {
            print_report(cmd, &report);
            ExitCode::SUCCESS
        }
        Err(e) => {
            if let RunError::NotConverged { report: Some(r), .. } = &e {
                print_report(cmd, r);
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
