//! Typed accessors over the generic operation layout.
//!
//! Conventions shared by every producer of IR:
//! - dynamic rotation angles, dynamic register sizes and other parenthesised
//!   value arguments are stored as *trailing* operands;
//! - loop bounds are either attributes (`lb`/`ub`/`step`) or leading operands,
//!   in that order, followed by the loop-carried initial values;
//! - `apply` takes the operation value first, then its arguments;
//! - gate ops with no targets and a single op-typed result denote the gate
//!   value itself (`%op = qs.T`).

use super::attr::{names, Attribute};
use super::module::{Module, OpId, ValueId};
use super::ops::{Gate, OpKind};
use super::types::Type;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Static(i64),
    Value(ValueId),
}

impl Bound {
    pub fn as_static(self) -> Option<i64> {
        match self {
            Bound::Static(v) => Some(v),
            Bound::Value(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoopBounds {
    pub lb: Bound,
    pub ub: Bound,
    pub step: Bound,
    /// Number of leading operands used by dynamic bounds.
    pub bound_operands: usize,
}

impl LoopBounds {
    /// Static trip count when all three bounds are constants.
    pub fn static_trip_count(&self) -> Option<u64> {
        let (lb, ub, st) = (self.lb.as_static()?, self.ub.as_static()?, self.step.as_static()?);
        if st <= 0 {
            return None;
        }
        if ub <= lb {
            return Some(0);
        }
        Some(((ub - lb + st - 1) / st) as u64)
    }
}

pub fn loop_bounds(m: &Module, op: OpId) -> LoopBounds {
    let data = m.op(op);
    let mut next = 0usize;
    let mut take = |key: &str| match data.attrs.get(key).and_then(Attribute::as_int) {
        Some(v) => Bound::Static(v),
        None => {
            let v = data.operands[next];
            next += 1;
            Bound::Value(v)
        }
    };
    let lb = take(names::LB);
    let ub = take(names::UB);
    let step = take(names::STEP);
    LoopBounds { lb, ub, step, bound_operands: next }
}

/// Number of leading bound operands of a loop, computed from attributes only.
pub fn loop_bound_operand_count(attrs: &super::attr::Attrs) -> usize {
    [names::LB, names::UB, names::STEP].iter().filter(|k| !attrs.contains_key(**k)).count()
}

pub fn loop_inits(m: &Module, op: OpId) -> Vec<ValueId> {
    let n = loop_bound_operand_count(&m.op(op).attrs);
    m.op(op).operands[n..].to_vec()
}

/// Induction variable and iteration arguments of a loop body.
pub fn loop_body_args(m: &Module, op: OpId) -> (ValueId, Vec<ValueId>) {
    let b = m.region_entry(op, 0);
    let args = &m.block(b).args;
    (args[0], args[1..].to_vec())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Angle {
    Static(f64),
    Dyn(ValueId),
}

pub fn is_rotation(m: &Module, op: OpId) -> bool {
    m.op(op).name.gate().map_or(false, Gate::is_rotation)
}

pub fn gate_angle(m: &Module, op: OpId) -> Option<Angle> {
    let data = m.op(op);
    if !data.name.gate()?.is_rotation() {
        return None;
    }
    match data.attrs.get(names::ANGLE).and_then(Attribute::as_float) {
        Some(a) => Some(Angle::Static(a)),
        None => data.operands.last().map(|v| Angle::Dyn(*v)),
    }
}

/// Quantum target operands of a gate (excluding a dynamic angle).
pub fn gate_targets(m: &Module, op: OpId) -> &[ValueId] {
    let data = m.op(op);
    let dyn_angle = matches!(gate_angle(m, op), Some(Angle::Dyn(_)));
    let n = data.operands.len() - usize::from(dyn_angle);
    &data.operands[..n]
}

/// Gate op that denotes a gate value rather than an application.
pub fn is_gate_value(m: &Module, op: OpId) -> bool {
    let data = m.op(op);
    data.name.gate().is_some() && gate_targets(m, op).is_empty() && data.results.len() == 1
}

/// Gate op applied to targets.
pub fn is_gate_application(m: &Module, op: OpId) -> bool {
    m.op(op).name.gate().is_some() && !is_gate_value(m, op)
}

/// Op-value type of a native gate.
pub fn gate_value_type(g: Gate) -> Type {
    if g.arity() == 2 {
        Type::U2
    } else {
        Type::U1
    }
}

pub fn static_int_attr(m: &Module, op: OpId, key: &str) -> Option<i64> {
    m.op(op).attrs.get(key).and_then(Attribute::as_int)
}

/// Size operand or attribute of `allocreg`.
pub fn allocreg_size(m: &Module, op: OpId) -> Bound {
    match static_int_attr(m, op, names::SIZE) {
        Some(n) => Bound::Static(n),
        None => Bound::Value(m.op(op).operands[0]),
    }
}

/// Constant value produced by a `constant` op.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstVal {
    Int(i64),
    Float(f64),
}

pub fn constant_value(m: &Module, v: ValueId) -> Option<ConstVal> {
    let op = m.defining_op(v)?;
    let data = m.op(op);
    if data.kind() != OpKind::Constant {
        return None;
    }
    match data.attrs.get(names::VALUE)? {
        Attribute::Int(i) => Some(ConstVal::Int(*i)),
        Attribute::Float(f) => Some(ConstVal::Float(*f)),
        _ => None,
    }
}

pub fn constant_int(m: &Module, v: ValueId) -> Option<i64> {
    match constant_value(m, v)? {
        ConstVal::Int(i) => Some(i),
        ConstVal::Float(_) => None,
    }
}

pub fn constant_float(m: &Module, v: ValueId) -> Option<f64> {
    match constant_value(m, v)? {
        ConstVal::Float(f) => Some(f),
        ConstVal::Int(_) => None,
    }
}

/// Quantum (state or reference) operands of an op.
pub fn quantum_operands(m: &Module, op: OpId) -> Vec<ValueId> {
    m.op(op).operands.iter().copied().filter(|v| m.ty(*v).is_quantum_data()).collect()
}

/// Quantum results of an op.
pub fn quantum_results(m: &Module, op: OpId) -> Vec<ValueId> {
    m.op(op).results.iter().copied().filter(|v| m.ty(*v).is_quantum_data()).collect()
}

pub fn is_marked(m: &Module, op: OpId) -> bool {
    let a = &m.op(op).attrs;
    a.contains_key(names::COMPUTE) || a.contains_key(names::UNCOMPUTE)
}
