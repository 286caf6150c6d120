//! Errors and context shared by all passes.

use thiserror::Error;

use crate::ir::IrError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PassError {
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("canonicalization did not converge within {0} sweeps")]
    FixpointOverflow(usize),
    #[error("recursive call cycle through @{0}")]
    RecursionDetected(String),
    #[error("non-unitary circuit: {0}")]
    NonUnitaryCircuit(String),
    #[error("meta-operation on a circuit was not lowered: {0}")]
    UnloweredMetaOp(String),
    #[error("unknown pass `{0}`")]
    UnknownPass(String),
    #[error("verification failed after transformation: {0}")]
    Verify(String),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Mutable state threaded through a pipeline run.
#[derive(Debug, Default, Clone)]
pub struct PassContext {
    /// Informational notes (e.g. loops skipped by unrolling).
    pub notes: Vec<String>,
}

impl PassContext {
    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }
}
