//! Scenario-file driven front end for the agora solvers.
//!
//! A scenario is a JSON document describing an exchange economy (and
//! optionally a closed-form demand curve and command defaults); the commands
//! `solve`, `replicate`, `welfare`, and `compare` dispatch it to the library
//! and emit CSV or Markdown tables.
//!
//! Exit codes: 0 success, 2 schema error, 3 solver failure, 4 verification
//! failure.

use thiserror::Error;

pub mod run;
pub mod scenario;
pub mod table;

pub use run::{resolve_tolerance, run_compare, run_replicate, run_solve, run_welfare, RunOutput};
pub use scenario::{parse_scenario, Concept, FormatArg, GameArg, ModeArg, Scenario};
pub use table::{num, render_tables, OutputTable};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("verification failure: {0}")]
    Verification(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}
