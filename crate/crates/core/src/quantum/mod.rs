//! Quantum-specific rewrites on the value-semantics dialect.

pub mod loop_boundary;
pub mod lower_adj;
pub mod lower_ctrl;
pub mod peephole;
pub mod unitary;

pub use loop_boundary::loop_boundary;
pub use lower_adj::lower_adj;
pub use lower_ctrl::lower_ctrl;
pub use peephole::{peephole, GateOpt};

use crate::ir::Module;
use crate::pass::{PassContext, PassError};

/// Upper bound on peephole/loop-boundary alternations.
const MAX_ROUNDS: usize = 10_000;

/// The gate optimization bundle: pair rewrites and loop-boundary hoisting
/// alternated until neither applies.
pub fn quantum_gate_opt(m: &mut Module, cx: &mut PassContext, opts: &GateOpt) -> Result<(), PassError> {
    for _ in 0..MAX_ROUNDS {
        let a = peephole(m, opts);
        let b = opts.loop_boundary && loop_boundary(m, opts);
        if !a && !b {
            return Ok(());
        }
    }
    cx.note("gate optimization stopped at the round limit");
    Ok(())
}
