mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Factorization toolkit for monic matrix polynomials.
#[derive(Debug, Parser)]
#[command(name = "blockroots", version, about)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
enum Command {
    /// Factor a polynomial into a chain of linear factors.
    Factorize(FactorizeArgs),
    /// Convert between factor chains and solvent sets.
    Convert(ConvertArgs),
    /// Design decoupling state feedback for a matrix fraction description.
    Decouple(DecoupleArgs),
    /// Check a factor chain against a polynomial.
    Verify(VerifyArgs),
    /// Re-run the command recorded in a run manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    /// Quotient-difference table only.
    Qd,
    /// Repeated plain Horner extraction and deflation.
    Horner,
    /// Repeated Newton extraction and deflation.
    NewtonHorner,
    /// Repeated two-stage extraction and deflation.
    TwoStage,
    /// Two-stage with the explicit derivative polynomial.
    TwoStageDelta,
    /// Table seeds refined and deflated one factor at a time.
    Pipeline,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct FactorizeArgs {
    /// Polynomial file.
    input: PathBuf,
    #[arg(long, value_enum, default_value = "pipeline")]
    method: Method,
    /// Refinement used by the pipeline method.
    #[arg(long, default_value = "newton-horner")]
    refine: String,
    /// Iteration budget for the iterative solvers and the table.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Relative residual tolerance for solvents and verification.
    #[arg(long)]
    tol: Option<f64>,
    /// Percent step-size tolerance of the iterative solvers.
    #[arg(long)]
    eta: Option<f64>,
    /// Also write complete right and left solvent sets.
    #[arg(long)]
    solvents: bool,
    /// Seed for default initial guesses.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference factors to compare against.
    #[arg(long)]
    references: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Direction {
    ChainToRight,
    ChainToLeft,
    RightToLeft,
    RightToChain,
    LeftToChain,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ConvertArgs {
    /// Factors or solvents file.
    input: PathBuf,
    #[arg(long, value_enum)]
    direction: Direction,
    /// Polynomial the factors or solvents belong to.
    #[arg(long)]
    poly: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct DecoupleArgs {
    /// Matrix fraction description file.
    input: PathBuf,
    /// Diagonal of one desired mode block, comma separated. Repeat once
    /// per block.
    #[arg(long, required = true, allow_hyphen_values = true)]
    modes: Vec<String>,
    /// Points at which to evaluate the closed loop, e.g. `0,1,2+1i`.
    #[arg(long, allow_hyphen_values = true)]
    eval: Option<String>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct VerifyArgs {
    /// Polynomial file.
    input: PathBuf,
    /// Factors file to check.
    #[arg(long)]
    against: PathBuf,
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    manifest: PathBuf,
    /// Output directory; defaults to the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Exit status for a failed run.
#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<blockroots::Error> for Failure {
    fn from(e: blockroots::Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(2)
        }
    }
}
