use thiserror::Error;

use super::module::{OpId, ValueId};

/// Errors raised by IR construction and mutation primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IrError {
    #[error("unknown operation name `{0}`")]
    UnknownOpName(String),
    #[error("arity mismatch for `{op}`: {msg}")]
    ArityMismatch { op: String, msg: String },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("operation {0:?} still has live uses")]
    HasLiveUses(OpId),
    #[error("value {0:?} is not defined in this module")]
    UnknownValue(ValueId),
    #[error("unresolved symbol `@{0}`")]
    UnresolvedSymbol(String),
    #[error("invalid attribute: {0}")]
    InvalidAttribute(String),
}
