//! Resource estimation: counter conversion, interpretation and reporting.

pub mod convert;
pub mod cost;
pub mod interp;
pub mod report;

pub use convert::count_resources;
pub use cost::CostModel;
pub use report::{ArgValue, BoundArg, ResourceReport};
