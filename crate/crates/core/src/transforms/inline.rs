//! `--inline`: replaces calls by the callee body, callees first.
//!
//! Callees marked `no_inline` and callers marked `no_inline_target` are left
//! alone, as are callees with more than one block.

use std::collections::{HashMap, HashSet};

use super::util::replace_op;
use crate::ir::{names, InsertPoint, Module, OpId, OpKind, ValueId};
use crate::pass::{PassContext, PassError};

fn is_call(m: &Module, op: OpId) -> bool {
    matches!(m.kind(op), OpKind::Call | OpKind::QCall)
}

fn inlinable(m: &Module, f: OpId) -> bool {
    !m.op(f).has_attr(names::NO_INLINE) && m.region_blocks(m.op(f).regions[0]).len() == 1
}

pub fn inline(m: &mut Module, cx: &mut PassContext) -> Result<(), PassError> {
    let syms = m.symbols();
    // post-order over the call graph restricted to inlinable edges
    let mut order = Vec::new();
    let mut state: HashMap<OpId, u8> = HashMap::new();
    for f in m.symbol_defs() {
        visit(m, &syms, f, &mut state, &mut order)?;
    }
    let mut skipped = HashSet::new();
    for f in order {
        if m.op(f).has_attr(names::NO_INLINE_TARGET) {
            continue;
        }
        for op in m.nested_ops(f) {
            if m.is_erased(op) || !is_call(m, op) {
                continue;
            }
            let callee = m.op(op).callee().unwrap_or_default().to_string();
            let Some(&g) = syms.get(&callee) else { continue };
            if !inlinable(m, g) {
                if !m.op(g).has_attr(names::NO_INLINE) && skipped.insert(callee.clone()) {
                    cx.note(format!("@{callee} has several blocks and was not inlined"));
                }
                continue;
            }
            inline_call(m, op, g);
        }
    }
    Ok(())
}

fn visit(
    m: &Module,
    syms: &HashMap<String, OpId>,
    f: OpId,
    state: &mut HashMap<OpId, u8>,
    order: &mut Vec<OpId>,
) -> Result<(), PassError> {
    match state.get(&f) {
        Some(2) => return Ok(()),
        Some(1) => {
            return Err(PassError::RecursionDetected(m.op(f).sym_name().unwrap_or_default().to_string()));
        }
        _ => {}
    }
    state.insert(f, 1);
    for op in m.nested_ops(f) {
        if !is_call(m, op) {
            continue;
        }
        if let Some(&g) = m.op(op).callee().and_then(|c| syms.get(c)) {
            if inlinable(m, g) {
                visit(m, syms, g, state, order)?;
            }
        }
    }
    state.insert(f, 2);
    order.push(f);
    Ok(())
}

/// Inlines one call site of the single-block callee `g`.
pub fn inline_call(m: &mut Module, call: OpId, g: OpId) {
    let entry = m.region_entry(g, 0);
    let params = m.block(entry).args.clone();
    let args = m.op(call).operands.clone();
    let mut map: HashMap<ValueId, ValueId> = params.into_iter().zip(args).collect();
    let mut rets = Vec::new();
    for o in m.block_ops(entry) {
        if m.kind(o) == OpKind::Return {
            rets = m.op(o).operands.iter().map(|v| *map.get(v).unwrap_or(v)).collect();
            continue;
        }
        m.clone_op(o, &mut map, InsertPoint::Before(call));
    }
    replace_op(m, call, &rets);
}
