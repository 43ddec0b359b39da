//! Scenario-driven front end for `arbiter-core`.
//!
//! ```text
//! arbiter <mode> --scenario <file> [--seed N] [--out <dir>]
//! ```
//!
//! Exit codes: 0 success, 2 validation error, 3 runtime or search failure.

pub mod output;
pub mod run;
pub mod scenario;

pub use run::{run_scenario, Outcome};
pub use scenario::{parse_scenario, Mode, Plan, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("runtime error: {0}")]
    Runtime(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Runtime(_) | CliError::Io(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Runtime(_) => "runtime",
            CliError::Io(_) => "io",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Runtime(m) | CliError::Io(m) => m,
        }
    }

    /// One-line JSON for stderr.
    pub fn report(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.message(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
