//! `--cse`: merges identical pure operations whose first occurrence
//! dominates the later ones.

use std::collections::HashMap;

use super::util::{is_pure, replace_op};
use crate::ir::{BlockId, Module, OpId};
use crate::pass::{PassContext, PassError};

pub fn cse(m: &mut Module, _cx: &mut PassContext) -> Result<(), PassError> {
    for f in m.symbol_defs() {
        for r in m.op(f).regions.clone() {
            for b in m.region_blocks(r).to_vec() {
                let mut scopes = vec![HashMap::new()];
                block(m, b, &mut scopes);
            }
        }
    }
    Ok(())
}

fn key(m: &Module, op: OpId) -> String {
    let d = m.op(op);
    let tys: Vec<_> = d.results.iter().map(|r| m.ty(*r)).collect();
    format!("{}|{:?}|{:?}|{:?}|{:?}", d.name, d.operands, d.accesses, d.attrs, tys)
}

fn block(m: &mut Module, b: BlockId, scopes: &mut Vec<HashMap<String, OpId>>) {
    for op in m.block_ops(b) {
        if is_pure(m, op) && m.op(op).regions.is_empty() {
            let k = key(m, op);
            if let Some(prev) = scopes.iter().rev().find_map(|s| s.get(&k)) {
                let vals = m.op(*prev).results.clone();
                replace_op(m, op, &vals);
                continue;
            }
            scopes.last_mut().unwrap().insert(k, op);
        }
        for r in m.op(op).regions.clone() {
            for inner in m.region_blocks(r).to_vec() {
                scopes.push(HashMap::new());
                block(m, inner, scopes);
                scopes.pop();
            }
        }
    }
}
