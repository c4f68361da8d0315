//! Scenario runner behind the `bcl` binary: config parsing, diagnostics and
//! plan construction, statement dispatch and deterministic report files.

pub mod config;
pub mod report;
pub mod runner;

/// Runner-level errors mapped to exit codes: config/validation problems exit
/// with 2, infeasible gates with 3, I/O and internal failures with 1.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Gate(String),
    Io(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Gate(m) => write!(f, "infeasible: {m}"),
            RunError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Gate(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

pub(crate) fn core_gate_error(e: bcl_core::Error) -> RunError {
    match e {
        bcl_core::Error::Infeasible { .. } | bcl_core::Error::Hypothesis(_) => {
            RunError::Gate(e.to_string())
        }
        other => RunError::Config(other.to_string()),
    }
}
