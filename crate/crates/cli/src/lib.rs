//! Library side of the `ridegame` command-line tool: scenario parsing, the
//! subcommands and CSV/JSON rendering.

pub mod commands;
pub mod config;
pub mod output;

use thiserror::Error;

pub use config::ScenarioConfig;
pub use output::Format;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("regime error: {0}")]
    Regime(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 2,
            CliError::Regime(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<ridegame::Error> for CliError {
    fn from(e: ridegame::Error) -> Self {
        use ridegame::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParams(_) => CliError::Config(msg),
            E::Regime(_) | E::NotDecreasing(_) | E::InsufficientLength { .. } | E::Domain { .. } => {
                CliError::Regime(msg)
            }
            E::NonPositive { .. }
            | E::TruncationTooSmall { .. }
            | E::Singular(_)
            | E::MonotonicityViolation { .. }
            | E::DivisionByZero(_) => CliError::Numerical(msg),
        }
    }
}
