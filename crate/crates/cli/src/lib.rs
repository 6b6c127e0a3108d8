//! Library side of the `pingpong` command-line tool: scenario parsing and
//! the `run`, `sweep` and `compare` commands.
//!
//! Exit codes: 0 ok, 2 parse error, 3 constraint violation, 4 unknown sweep
//! field, 5 I/O error, 1 internal simulation failure.

pub mod commands;
pub mod scenario;

use thiserror::Error;

pub use commands::{compare, run, sweep, Overrides, SweepField};
pub use scenario::Scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("unknown sweep field `{0}` (expected passband_half_width_nm, lambda_e_nm, control_prob or n)")]
    SweepField(String),
    #[error("simulation failed: {0}")]
    Simulation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Constraint(_) => 3,
            CliError::SweepField(_) => 4,
            CliError::Io(_) => 5,
            CliError::Simulation(_) => 1,
        }
    }
}
