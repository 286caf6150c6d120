//! Core SSA IR shared by both quantum dialects and the classical core.

pub mod attr;
pub mod equiv;
pub mod error;
pub mod module;
pub mod ops;
pub mod signature;
pub mod types;
pub mod verify;
pub mod view;

pub use attr::{names, Attribute, Attrs};
pub use error::IrError;
pub use module::{
    Access, BlockId, Index, InsertPoint, Module, OpData, OpId, OpSpec, RegAccess, RegionId, Successor, ValueId,
};
pub use ops::{trait_query, ArithOp, CmpPred, Dialect, Gate, OpKind, OpName, Trait, TraitSet};
pub use signature::{build, build_op};
pub use types::Type;
pub use verify::{verify, DiagKind, Diagnostic};
pub use equiv::isomorphic;
