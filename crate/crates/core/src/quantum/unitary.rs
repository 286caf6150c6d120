//! What a quantum operation applies, independent of its spelling.
//!
//! `qs.T %q`, `qs.apply %t(%q)` with `%t = qs.T` and a call of a circuit all
//! reduce to a [`Desc`] so pair matching can compare them directly.

use crate::ir::view::{gate_angle, gate_targets, is_gate_application, is_gate_value, Angle};
use crate::ir::{names, Attribute, Gate, Module, OpId, OpKind, ValueId};
use crate::transforms::util::same_value;

#[derive(Clone, Debug, PartialEq)]
pub enum Base {
    Gate(Gate, Option<Angle>),
    Circ(String),
}

/// Operation value after peeling `adj`/`ctrl` wrappers.
#[derive(Clone, Debug, PartialEq)]
pub struct Chain {
    pub base: Base,
    pub adjoint: bool,
    pub controls: u32,
}

pub fn chain(m: &Module, v: ValueId) -> Option<Chain> {
    let d = m.defining_op(v)?;
    let data = m.op(d);
    match data.kind() {
        OpKind::GetVal => Some(Chain { base: Base::Circ(data.callee()?.to_string()), adjoint: false, controls: 0 }),
        OpKind::Gate(g) if is_gate_value(m, d) => {
            Some(Chain { base: Base::Gate(g, gate_angle(m, d)), adjoint: false, controls: 0 })
        }
        OpKind::Adj => {
            let mut c = chain(m, data.operands[0])?;
            c.adjoint = !c.adjoint;
            Some(c)
        }
        OpKind::Ctrl => {
            let mut c = chain(m, data.operands[0])?;
            c.controls += data.attrs.get(names::COUNT).and_then(Attribute::as_int).unwrap_or(1) as u32;
            Some(c)
        }
        _ => None,
    }
}

/// A quantum application in normal form.
#[derive(Clone, Debug)]
pub struct Desc {
    pub chain: Chain,
    /// Classical arguments besides a rotation angle.
    pub classical: Vec<ValueId>,
    pub quantum: Vec<ValueId>,
    pub qresults: Vec<ValueId>,
    /// Classical results (calls only).
    pub cresults: Vec<ValueId>,
}

pub fn describe(m: &Module, op: OpId) -> Option<Desc> {
    let d = m.op(op);
    let split = |vals: &[ValueId]| -> (Vec<ValueId>, Vec<ValueId>) {
        vals.iter().partition(|v| m.ty(**v).is_quantum_data())
    };
    let (qresults, cresults) = split(&d.results);
    match d.kind() {
        OpKind::Gate(g) if is_gate_application(m, op) => Some(Desc {
            chain: Chain { base: Base::Gate(g, gate_angle(m, op)), adjoint: false, controls: 0 },
            classical: vec![],
            quantum: gate_targets(m, op).to_vec(),
            qresults,
            cresults,
        }),
        OpKind::Apply => {
            let chain = chain(m, d.operands[0])?;
            let (quantum, classical) = split(&d.operands[1..]);
            Some(Desc { chain, classical, quantum, qresults, cresults })
        }
        OpKind::QCall => {
            let chain = Chain { base: Base::Circ(d.callee()?.to_string()), adjoint: false, controls: 0 };
            let (quantum, classical) = split(&d.operands);
            Some(Desc { chain, classical, quantum, qresults, cresults })
        }
        _ => None,
    }
}

/// Angle with the sign of the adjoint folded in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Signed {
    pub angle: Angle,
    pub negate: bool,
}

impl Signed {
    pub fn as_static(&self) -> Option<f64> {
        match self.angle {
            Angle::Static(a) => Some(if self.negate { -a } else { a }),
            Angle::Dyn(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Relation {
    /// The two applications multiply to the identity.
    Cancel,
    /// Same-axis rotations whose angles add.
    Merge(Gate, Signed, Signed),
}

fn same_angle(m: &Module, a: &Option<Angle>, b: &Option<Angle>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(Angle::Static(x)), Some(Angle::Static(y))) => x.to_bits() == y.to_bits(),
        (Some(Angle::Dyn(x)), Some(Angle::Dyn(y))) => same_value(m, *x, *y),
        _ => false,
    }
}

/// How `a` followed by `b` on the same wires combine, if at all. Wiring is
/// checked by the caller.
pub fn relate(m: &Module, a: &Desc, b: &Desc) -> Option<Relation> {
    let (x, y) = (&a.chain, &b.chain);
    if x.controls != y.controls
        || a.quantum.len() != b.quantum.len()
        || a.classical.len() != b.classical.len()
        || a.classical.iter().zip(&b.classical).any(|(p, q)| !same_value(m, *p, *q))
    {
        return None;
    }
    match (&x.base, &y.base) {
        (Base::Gate(g, ta), Base::Gate(h, tb)) if g == h => {
            if g.is_hermitian() {
                Some(Relation::Cancel)
            } else if g.is_rotation() {
                let sa = Signed { angle: (*ta)?, negate: x.adjoint };
                let sb = Signed { angle: (*tb)?, negate: y.adjoint };
                Some(Relation::Merge(*g, sa, sb))
            } else if x.adjoint != y.adjoint && same_angle(m, ta, tb) {
                Some(Relation::Cancel)
            } else {
                None
            }
        }
        (Base::Circ(c), Base::Circ(d)) if c == d && x.adjoint != y.adjoint => Some(Relation::Cancel),
        _ => None,
    }
}

/// `b` consumes exactly the quantum results of `a`, in order.
pub fn linked(a: &Desc, b: &Desc) -> bool {
    !a.qresults.is_empty() && a.qresults == b.quantum
}
