//! Pairwise cancellation and rotation merging along def-use links.
//!
//! Two applications pair up when the second consumes exactly the quantum
//! results of the first, in the same order. No commutation is attempted.

use super::unitary::{describe, linked, relate, Base, Desc, Relation, Signed};
use crate::ir::signature::ctrl_type;
use crate::ir::view::{gate_value_type, Angle};
use crate::ir::{names, ArithOp, Attribute, Dialect, Gate, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, Type, ValueId};
use crate::transforms::util::{float_constant, is_zero_angle};

/// Which rewrites of the gate optimization bundle are enabled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GateOpt {
    pub hermitian: bool,
    pub adjoint: bool,
    pub rotations: bool,
    pub controlled_rotations: bool,
    pub loop_boundary: bool,
}

impl Default for GateOpt {
    fn default() -> Self {
        GateOpt { hermitian: true, adjoint: true, rotations: true, controlled_rotations: true, loop_boundary: true }
    }
}

impl GateOpt {
    pub fn none() -> GateOpt {
        GateOpt { hermitian: false, adjoint: false, rotations: false, controlled_rotations: false, loop_boundary: false }
    }

    pub fn allows(&self, rel: &Relation, d: &Desc) -> bool {
        match (rel, &d.chain.base) {
            (Relation::Merge(..), _) if d.chain.controls > 0 => self.controlled_rotations,
            (Relation::Merge(..), _) => self.rotations,
            (Relation::Cancel, Base::Gate(g, _)) if g.is_hermitian() => self.hermitian,
            (Relation::Cancel, _) => self.adjoint,
        }
    }
}

/// Runs pair rewrites until none applies. Returns whether anything changed.
pub fn peephole(m: &mut Module, opts: &GateOpt) -> bool {
    let mut changed = false;
    loop {
        let mut any = false;
        for op in m.walk_all() {
            if !m.is_erased(op) && rewrite_pair(m, op, opts) {
                any = true;
            }
        }
        if !any {
            return changed;
        }
        changed = true;
    }
}

/// The op feeding all quantum operands of `second`, if it pairs with it.
pub(crate) fn pair_source(m: &Module, second: OpId) -> Option<(OpId, Desc, Desc)> {
    let b = describe(m, second)?;
    let first = m.defining_op(*b.quantum.first()?)?;
    let a = describe(m, first)?;
    if !linked(&a, &b) || m.parent_block(first) != m.parent_block(second) {
        return None;
    }
    let unused = |vs: &[ValueId]| vs.iter().all(|v| m.num_uses(*v) == 0);
    if !unused(&a.cresults) || !unused(&b.cresults) || a.qresults.iter().any(|r| m.num_uses(*r) != 1) {
        return None;
    }
    Some((first, a, b))
}

fn rewrite_pair(m: &mut Module, second: OpId, opts: &GateOpt) -> bool {
    let Some((first, a, b)) = pair_source(m, second) else { return false };
    let Some(rel) = relate(m, &a, &b) else { return false };
    if !opts.allows(&rel, &a) {
        return false;
    }
    match rel {
        Relation::Cancel => cancel(m, first, &a, second, &b),
        Relation::Merge(g, sa, sb) => {
            let at = InsertPoint::Before(second);
            match sum(m, at, g, sa, sb) {
                None => cancel(m, first, &a, second, &b),
                Some(angle) => {
                    let tys: Vec<Type> = b.qresults.iter().map(|v| m.ty(*v).clone()).collect();
                    let out = emit_rotation(m, at, g, a.chain.controls, angle, &a.quantum, tys);
                    for (r, v) in b.qresults.iter().zip(out) {
                        m.replace_uses_unchecked(*r, v);
                    }
                    m.erase_unchecked(second);
                    m.erase_unchecked(first);
                }
            }
        }
    }
    true
}

fn cancel(m: &mut Module, first: OpId, a: &Desc, second: OpId, b: &Desc) {
    for (r, v) in b.qresults.iter().zip(&a.quantum) {
        m.replace_uses_unchecked(*r, *v);
    }
    m.erase_unchecked(second);
    m.erase_unchecked(first);
}

pub(crate) fn signed_value(m: &mut Module, at: InsertPoint, s: Signed) -> ValueId {
    match s.angle {
        Angle::Static(a) => float_constant(m, at, if s.negate { -a } else { a }),
        Angle::Dyn(v) if !s.negate => v,
        Angle::Dyn(v) => {
            let n = m.insert_new(
                at,
                OpSpec::new(OpName::std(OpKind::Arith(ArithOp::NegF))).operands([v]).results([Type::F64]),
            );
            m.op(n).results[0]
        }
    }
}

/// Combined angle, or `None` when the two rotations statically cancel.
pub(crate) fn sum(m: &mut Module, at: InsertPoint, g: Gate, a: Signed, b: Signed) -> Option<Angle> {
    if let (Some(x), Some(y)) = (a.as_static(), b.as_static()) {
        let s = x + y;
        return if is_zero_angle(g, s) { None } else { Some(Angle::Static(s)) };
    }
    let (x, y) = (signed_value(m, at, a), signed_value(m, at, b));
    let add = m.insert_new(
        at,
        OpSpec::new(OpName::std(OpKind::Arith(ArithOp::AddF))).operands([x, y]).results([Type::F64]),
    );
    Some(Angle::Dyn(m.op(add).results[0]))
}

/// Emits rotation `g(angle)` under `controls` leading controls on `wires`.
pub(crate) fn emit_rotation(
    m: &mut Module,
    at: InsertPoint,
    g: Gate,
    controls: u32,
    angle: Angle,
    wires: &[ValueId],
    tys: Vec<Type>,
) -> Vec<ValueId> {
    let gate = |spec: OpSpec| match angle {
        Angle::Static(a) => spec.attr(names::ANGLE, Attribute::Float(a)),
        Angle::Dyn(v) => spec.operands([v]),
    };
    let name = OpName::new(Dialect::Qs, OpKind::Gate(g));
    let op = if controls == 0 {
        m.insert_new(at, gate(OpSpec::new(name).operands(wires.iter().copied())).results(tys))
    } else {
        let vt = gate_value_type(g);
        let gv = m.insert_new(at, gate(OpSpec::new(name)).results([vt.clone()]));
        let gv = m.op(gv).results[0];
        let cv = m.insert_new(
            at,
            OpSpec::new(OpName::new(Dialect::Qs, OpKind::Ctrl))
                .operands([gv])
                .attr(names::COUNT, Attribute::Int(controls as i64))
                .results([ctrl_type(&vt, controls)]),
        );
        let cv = m.op(cv).results[0];
        m.insert_new(
            at,
            OpSpec::new(OpName::new(Dialect::Qs, OpKind::Apply))
                .operands(std::iter::once(cv).chain(wires.iter().copied()))
                .results(tys),
        )
    };
    m.op(op).results.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse, print_module};

    fn run(src: &str, opts: GateOpt) -> String {
        let mut m = parse(src).unwrap();
        peephole(&mut m, &opts);
        assert_eq!(crate::ir::verify(&m), vec![], "{}", print_module(&m));
        print_module(&m)
    }

    #[test]
    fn hermitian_pair_cancels() {
        let t = run("qs.circ @f(%q: !qs.qstate) -> !qs.qstate { %1 = qs.H %q %2 = qs.H %1 return %2 }", GateOpt::default());
        assert!(!t.contains("qs.H"), "{t}");
    }

    #[test]
    fn crossed_cx_is_kept() {
        let t = run(
            "qs.circ @f(%a: !qs.qstate, %b: !qs.qstate) -> (!qs.qstate, !qs.qstate) {
               %1, %2 = qs.CX %a, %b
               %3, %4 = qs.CX %2, %1
               return %4, %3 }",
            GateOpt::default(),
        );
        assert_eq!(t.matches("qs.CX").count(), 2, "{t}");
    }

    #[test]
    fn gate_and_adjoint_cancel() {
        let src = "qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %1 = qs.T %q
              %t = qs.T : !q.u1
              %a = qs.adj %t : !q.u1
              %2 = qs.apply %a(%1)
              return %2 }";
        let t = run(src, GateOpt::default());
        assert!(!t.contains("qs.apply"), "{t}");
        let t = run(src, GateOpt { adjoint: false, ..GateOpt::default() });
        assert!(t.contains("qs.apply"), "{t}");
    }

    #[test]
    fn adjoint_twice_is_kept() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %t = qs.T : !q.u1
              %a = qs.adj %t : !q.u1
              %1 = qs.apply %a(%q)
              %2 = qs.apply %a(%1)
              return %2 }",
            GateOpt::default(),
        );
        assert_eq!(t.matches("qs.apply").count(), 2, "{t}");
    }

    #[test]
    fn rotations_merge() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate, %v: f64) -> !qs.qstate {
              %1 = qs.Rz(0.1) %q
              %2 = qs.Rz(0.2) %1
              %3 = qs.Rx(%v) %2
              %4 = qs.Rx(0.5) %3
              return %4 }",
            GateOpt::default(),
        );
        assert_eq!(t.matches("qs.Rz").count(), 1, "{t}");
        assert_eq!(t.matches("qs.Rx").count(), 1, "{t}");
        assert!(t.contains("addf"), "{t}");
    }

    #[test]
    fn circuit_and_its_adjoint_cancel() {
        let t = run(
            "qs.circ @U(%q: !qs.qstate) -> !qs.qstate { %1 = qs.T %q return %1 }
             qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %1 = qs.call @U(%q)
              %u = qs.getval @U : !q.circ
              %a = qs.adj %u : !q.circ
              %2 = qs.apply %a(%1)
              return %2 }",
            GateOpt::default(),
        );
        assert!(!t.contains("qs.apply") && !t.contains("qs.call"), "{t}");
    }

    #[test]
    fn controlled_rotations_need_same_control() {
        let src = "qs.circ @f(%c: !qs.qstate, %q: !qs.qstate) -> (!qs.qstate, !qs.qstate) {
              %r = qs.R(0.25) : !q.u1
              %cr = qs.ctrl(1) %r : !q.cop<1, !q.u1>
              %1, %2 = qs.apply %cr(%c, %q)
              %3, %4 = qs.apply %cr(%1, %2)
              return %3, %4 }";
        let t = run(src, GateOpt::default());
        assert_eq!(t.matches("qs.apply").count(), 1, "{t}");
        assert!(t.contains("qs.R(0.5)"), "{t}");
        let t = run(src, GateOpt { controlled_rotations: false, ..GateOpt::default() });
        assert_eq!(t.matches("qs.apply").count(), 2, "{t}");
    }
}
