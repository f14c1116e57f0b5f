use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::cli::{ConfigError, OutputError};
use crate::eom::EomError;
use crate::netlist::NetlistError;
use crate::quantum::QuantumError;
use crate::topology::TopologyError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline error, labelled with the stage that produced it.
#[derive(Debug, Error)]
pub enum Error {
    #[error("netlist: {0}")]
    Netlist(#[from] NetlistError),
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
    #[error("eom: {0}")]
    Eom(#[from] EomError),
    #[error("quantum: {0}")]
    Quantum(#[from] QuantumError),
    #[error("analysis: {0}")]
    Analysis(#[from] AnalysisError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("output: {0}")]
    Output(#[from] OutputError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the failure came from the numerics rather than from user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Eom(e) => e.is_numerical(),
            Error::Quantum(e) => e.is_numerical(),
            Error::Analysis(e) => e.is_numerical(),
            _ => false,
        }
    }

    /// Process exit code: 1 for input errors, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }
}
