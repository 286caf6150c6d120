//! Classical and structural transformations.

pub mod canonicalize;
pub mod cse;
pub mod inline;
pub mod strip;
pub mod unroll;
pub mod util;

pub use canonicalize::canonicalize;
pub use cse::cse;
pub use inline::inline;
pub use strip::strip_unused;
pub use unroll::unroll_affine;
