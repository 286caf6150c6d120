//! Small rewriting helpers shared by the passes.

use crate::ir::view::{constant_value, is_gate_value, ConstVal};
use crate::ir::{names, Attribute, Gate, Index, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, Type, ValueId};

/// Redirects every result of `op` to `vals` and erases `op`.
pub fn replace_op(m: &mut Module, op: OpId, vals: &[ValueId]) {
    let results = m.op(op).results.clone();
    debug_assert_eq!(results.len(), vals.len());
    for (r, v) in results.into_iter().zip(vals) {
        if r != *v {
            m.replace_uses_unchecked(r, *v);
        }
    }
    m.erase_unchecked(op);
}

/// Side-effect free ops that may be removed when unused or deduplicated.
pub fn is_pure(m: &Module, op: OpId) -> bool {
    let d = m.op(op);
    match d.kind() {
        OpKind::Constant
        | OpKind::Arith(_)
        | OpKind::CmpI
        | OpKind::CmpF
        | OpKind::Select
        | OpKind::GetVal
        | OpKind::Adj
        | OpKind::Ctrl => true,
        OpKind::Gate(_) => is_gate_value(m, op),
        _ => false,
    }
}

pub fn int_constant(m: &mut Module, at: InsertPoint, v: i64, ty: Type) -> ValueId {
    let op = m.insert_new(
        at,
        OpSpec::new(OpName::std(OpKind::Constant)).attr(names::VALUE, Attribute::Int(v)).results([ty]),
    );
    m.op(op).results[0]
}

pub fn float_constant(m: &mut Module, at: InsertPoint, v: f64) -> ValueId {
    let op = m.insert_new(
        at,
        OpSpec::new(OpName::std(OpKind::Constant)).attr(names::VALUE, Attribute::Float(v)).results([Type::F64]),
    );
    m.op(op).results[0]
}

/// Two values known to hold the same number.
pub fn same_value(m: &Module, a: ValueId, b: ValueId) -> bool {
    if a == b {
        return true;
    }
    match (constant_value(m, a), constant_value(m, b)) {
        (Some(ConstVal::Int(x)), Some(ConstVal::Int(y))) => x == y,
        (Some(ConstVal::Float(x)), Some(ConstVal::Float(y))) => x.to_bits() == y.to_bits(),
        _ => false,
    }
}

pub fn index_value(m: &Module, i: &Index) -> Option<i64> {
    match i {
        Index::Static(v) => Some(*v),
        Index::Dyn(v) => crate::ir::view::constant_int(m, *v),
    }
}

/// `Some(true)` when two register indices are provably equal, `Some(false)`
/// when provably different and `None` when it depends on run-time values.
pub fn compare_index(m: &Module, a: &Index, b: &Index) -> Option<bool> {
    if let (Index::Dyn(x), Index::Dyn(y)) = (a, b) {
        if x == y {
            return Some(true);
        }
    }
    match (index_value(m, a), index_value(m, b)) {
        (Some(x), Some(y)) => Some(x == y),
        _ => None,
    }
}

/// Ops of a block followed by everything nested below them.
pub fn ops_under(m: &Module, op: OpId) -> Vec<OpId> {
    let mut v = vec![op];
    v.extend(m.nested_ops(op));
    v
}

/// Rotation angle equivalent to the identity (up to global phase for `R`).
pub fn is_zero_angle(g: Gate, a: f64) -> bool {
    let p = if g == Gate::R { 2.0 * std::f64::consts::PI } else { 4.0 * std::f64::consts::PI };
    let r = a.rem_euclid(p);
    r.abs() < 1e-12 || (p - r).abs() < 1e-12
}
