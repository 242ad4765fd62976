mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Lib(#[from] critrange::Error),
    #[error("threshold exceeded: {0}")]
    Threshold(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use critrange::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(E::Domain(_) | E::EmptyInput) => 2,
            CliError::Lib(E::TermCapExceeded { .. } | E::QuadratureFailure(_)) => 3,
            CliError::Lib(E::DegenerateWeights { .. } | E::Coverage { .. }) => 4,
            CliError::Threshold(_) => 5,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let run = commands::Run::resolve(cli.opts, &cli.command)?;
    run.install_pool()?;
    match &cli.command {
        Command::Eval(a) => commands::eval(&run, a),
        Command::Expansion(a) => commands::expansion(&run, a),
        Command::Quadrature => commands::quadrature(&run),
        Command::Simulate => commands::simulate(&run),
        Command::Compare(a) => commands::compare(&run, a),
        Command::Limits(a) => commands::limits(&run, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("critrange: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
