//! `--strip-unused-circ`: drops symbols not reachable from the entry points.

use std::collections::HashSet;

use crate::ir::{names, Attribute, Module, OpKind};
use crate::pass::{PassContext, PassError};

/// Symbols always kept when present.
pub const DEFAULT_ROOTS: &[&str] = &["mlir_main", "main"];

pub fn strip_unused(m: &mut Module, cx: &mut PassContext) -> Result<(), PassError> {
    strip_with_roots(m, cx, &[])
}

/// Keeps `extra` roots in addition to the defaults and symbols marked `entry`.
pub fn strip_with_roots(m: &mut Module, _cx: &mut PassContext, extra: &[String]) -> Result<(), PassError> {
    let syms = m.symbols();
    let mut work: Vec<String> = Vec::new();
    for &f in &m.symbol_defs() {
        if m.op(f).has_attr(names::ENTRY) {
            work.push(m.op(f).sym_name().unwrap_or_default().to_string());
        }
    }
    work.extend(DEFAULT_ROOTS.iter().map(|s| s.to_string()).filter(|s| syms.contains_key(s)));
    work.extend(extra.iter().filter(|s| syms.contains_key(*s)).cloned());
    if work.is_empty() {
        return Ok(());
    }
    let mut live: HashSet<String> = HashSet::new();
    while let Some(s) = work.pop() {
        if !live.insert(s.clone()) {
            continue;
        }
        let Some(&f) = syms.get(&s) else { continue };
        for op in m.nested_ops(f) {
            for a in m.op(op).attrs.values() {
                if let Attribute::Symbol(t) = a {
                    if !live.contains(t) {
                        work.push(t.clone());
                    }
                }
            }
        }
    }
    for f in m.symbol_defs() {
        let name = m.op(f).sym_name().unwrap_or_default().to_string();
        if !live.contains(&name) && matches!(m.kind(f), OpKind::Func | OpKind::Circ) {
            m.erase_unchecked(f);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::parse;

    #[test]
    fn keeps_transitive_callees() {
        let mut m = parse(
            "func @dead() { return }
             func @leaf() { return }
             func @mid() { call @leaf() return }
             func @mlir_main() { call @mid() return }",
        )
        .unwrap();
        strip_unused(&mut m, &mut PassContext::default()).unwrap();
        let names: Vec<_> = m.symbol_defs().iter().map(|f| m.op(*f).sym_name().unwrap().to_string()).collect();
        assert_eq!(names, ["leaf", "mid", "mlir_main"]);
    }
}
