//! Command-line front end: figure tables, moment tables, simulation dumps and
//! the verification suite.

pub mod args;
pub mod eval;
pub mod grid;
pub mod moments;
pub mod simulate;
pub mod verify;

use telegraph_core::Error as CoreError;

pub use args::{Cli, Command};
pub use grid::EvalGrid;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid argument: {0}")]
    Usage(String),
    #[error("verification failed: {failed} of {total} checks")]
    Verification { failed: usize, total: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for domain errors, 3 for failed verification, 4 for numerical
    /// non-convergence and 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::Domain { .. }) | CliError::Usage(_) => 2,
            CliError::Core(_) => 4,
            CliError::Verification { .. } => 3,
            CliError::Io(_) | CliError::Json(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Runs a parsed command line, writing to `out`.
pub fn run(cli: &Cli, out: &mut dyn std::io::Write) -> CliResult<()> {
    match &cli.command {
        Command::Eval(a) => eval::run(a, out),
        Command::Moments(a) => moments::run(a, out),
        Command::Simulate(a) => simulate::run(a, out),
        Command::Verify(a) => verify::run(a, out),
    }
}
