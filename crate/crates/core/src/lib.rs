//! QIRO: a two-dialect SSA IR for mixed quantum-classical programs.

pub mod ir;
pub mod text;
pub mod pass;
pub mod lower;
pub mod resource;
pub mod transforms;
pub mod quantum;
pub mod driver;
