//! `torushu`: generate point sets on flat tori and measure their number
//! variance, worst-case error and discrepancy.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};

use config::RunConfig;

/// Exit status for precondition failures (bad flags, bad input files).
const EXIT_PRECONDITION: u8 = 2;
/// Exit status when a numeric budget (enumeration cap, tolerance, sampler)
/// was exhausted; a partial result is written when one exists.
const EXIT_NUMERIC_CAP: u8 = 3;
/// Exit status for an unknown or missing command.
const EXIT_USAGE: u8 = 64;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Lib(#[from] torushu::Error),
    /// The partial record has already been written.
    #[error("{0}")]
    Partial(torushu::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Precondition(_) => EXIT_PRECONDITION,
            CliError::Lib(e) if e.is_numeric_cap() => EXIT_NUMERIC_CAP,
            CliError::Lib(_) => EXIT_PRECONDITION,
            CliError::Partial(_) => EXIT_NUMERIC_CAP,
        }
    }
}

#[derive(Parser)]
#[command(name = "torushu", version, about = "Hyperuniformity measurements on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a point set (CSV with a metadata header, or JSON).
    Gen(RunConfig),
    /// Number variance of a point set by one or all methods.
    Variance(RunConfig),
    /// Worst-case QMC error in W^{alpha,2}.
    Wce(RunConfig),
    /// L2-discrepancy over all radii up to the half diameter.
    Discrepancy(RunConfig),
    /// Regime sweep with a fitted exponent and verdict.
    Scan(RunConfig),
    /// Expected variance of the projection DPP.
    #[command(name = "dpp-expected")]
    DppExpected(RunConfig),
    /// Expected variance of jittered sampling.
    #[command(name = "jittered-expected")]
    JitteredExpected(RunConfig),
}

impl Command {
    fn split(self) -> (&'static str, RunConfig) {
        match self {
            Command::Gen(c) => ("gen", c),
            Command::Variance(c) => ("variance", c),
            Command::Wce(c) => ("wce", c),
            Command::Discrepancy(c) => ("discrepancy", c),
            Command::Scan(c) => ("scan", c),
            Command::DppExpected(c) => ("dpp-expected", c),
            Command::JitteredExpected(c) => ("jittered-expected", c),
        }
    }
}

fn run(name: &str, flags: RunConfig) -> Result<(), CliError> {
    let mut cfg = RunConfig::resolve(flags)?;
    if let Some(other) = cfg.command.as_deref().filter(|c| *c != name) {
        return Err(CliError::Precondition(format!("config file is for '{other}', not '{name}'")));
    }
    cfg.command = Some(name.to_string());
    let threads = cfg.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Precondition(format!("thread pool: {e}")))?;
    pool.install(|| match name {
        "gen" => commands::gen(cfg),
        "variance" => commands::variance(cfg),
        "wce" => commands::wce(cfg),
        "discrepancy" => commands::discrepancy(cfg),
        "scan" => commands::scan(cfg),
        "dpp-expected" => commands::dpp_expected(cfg),
        "jittered-expected" => commands::jittered_expected(cfg),
        _ => unreachable!("clap only yields known commands"),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                ErrorKind::InvalidSubcommand
                | ErrorKind::MissingSubcommand
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => EXIT_USAGE,
                _ => EXIT_PRECONDITION,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, flags) = cli.command.split();
    match run(name, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("torushu {name}: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
