//! `tabular-pg`: run experiment suites, generate Garnet instances and
//! re-audit trace files.
//!
//! Exit codes: 0 on success, 1 when a bound audit fails, 2 on any error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tabular_pg::harness::{
    audit_trace_file, generate_garnet, run_experiment, AuditBound, ExperimentConfig, GarnetSpec,
};
use tabular_pg::TabularMdp;

#[derive(Parser)]
#[command(
    name = "tabular-pg",
    version,
    about = "Exact-gradient policy optimization on tabular MDPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every algorithm of an experiment config and audit the traces.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a Garnet instance as MDP JSON.
    Generate {
        /// e.g. `n=10,k=5,b=3,gamma=0.9,seed=42[,cost=0:1][,rho=uniform|random-dirichlet]`
        #[arg(long)]
        garnet: GarnetSpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-audit an existing trace CSV; prints the report as JSON.
    Audit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        mdp: PathBuf,
        #[arg(long, value_enum)]
        bound: BoundArg,
        /// Constant Frank-Wolfe stepsize for `1b`; inferred from the trace if omitted.
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundArg {
    #[value(name = "1a")]
    LineSearch,
    #[value(name = "1b")]
    FrankWolfe,
    #[value(name = "pi")]
    PolicyIteration,
}

fn execute(command: Command) -> Result<bool> {
    match command {
        Command::Run { config } => {
            let config = ExperimentConfig::from_file(&config)
                .with_context(|| format!("loading config {}", config.display()))?;
            let summary = run_experiment(&config)?;
            for entry in &summary.entries {
                let status = if entry.satisfied { "ok" } else { "VIOLATED" };
                println!(
                    "{:<16} {:<22} {:<24} {:>4} iters  worst slack {:.3e}  {status}",
                    entry.algorithm,
                    entry.stepsize_rule,
                    entry.bound_kind.label(),
                    entry.iterations,
                    entry.worst_slack,
                );
            }
            println!("report: {}", summary.report.display());
            Ok(summary.all_satisfied())
        }
        Command::Generate { garnet, out } => {
            let mdp = generate_garnet(&garnet)?;
            mdp.write_json_file(&out)?;
            Ok(true)
        }
        Command::Audit {
            trace,
            mdp,
            bound,
            alpha,
        } => {
            let mdp = TabularMdp::from_json_file(&mdp)?;
            let bound = match bound {
                BoundArg::LineSearch => AuditBound::Theorem1a,
                BoundArg::FrankWolfe => AuditBound::Theorem1b { alpha },
                BoundArg::PolicyIteration => AuditBound::PolicyIteration,
            };
            let report = audit_trace_file(&trace, &mdp, bound)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.satisfied)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
