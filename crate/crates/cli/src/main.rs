//! `reconcile`: run reconciliations, contestation sessions and generalization experiments
//! from files.
//!
//! Exit status: 0 on success, 1 when a checked bound is violated, 2 on usage or input errors.

mod audit;
mod contest;
mod files;
mod reconcile_cmd;
mod simulate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

const OUT_DIR_ENV: &str = "RECONCILE_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "reconcile", version, about = "Reconcile disagreeing probability forecasters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reconcile two models given as prediction files on a labeled dataset.
    Reconcile(reconcile_cmd::ReconcileArgs),
    /// Replay a transcript against the base predictions and re-check the halting condition.
    Audit(audit::AuditArgs),
    /// Run the out-of-sample Monte Carlo experiment on a synthetic distribution.
    Simulate(simulate::SimulateArgs),
    /// Submit group contestations to a contestable model, resuming from a checkpoint.
    ContestSession(contest::ContestArgs),
}

/// Output directory, defaulting to `$RECONCILE_OUT_DIR`.
#[derive(Args, Debug, Clone)]
pub struct OutDir {
    #[arg(long, env = OUT_DIR_ENV)]
    pub out: PathBuf,
}

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    BoundViolated,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<reconcile_core::Error>() {
        // the round cap only trips when a proven bound fails
        Some(reconcile_core::Error::RoundCapExceeded { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconcile(args) => reconcile_cmd::run(&args),
        Command::Audit(args) => audit::run(&args),
        Command::Simulate(args) => simulate::run(&args),
        Command::ContestSession(args) => contest::run(&args),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::BoundViolated) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
