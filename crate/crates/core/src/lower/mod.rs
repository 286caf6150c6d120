//! Lowering from the memory-semantics dialect.

pub mod mem2val;

pub use mem2val::lower_module;
