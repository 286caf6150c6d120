//! Cancellation across the back-edge of a loop.
//!
//! When the first operation on some loop-carried states and the last one
//! producing them pair up, one copy of the first is placed before the loop,
//! one copy of the last after it, and both leave the body. Loops whose trip
//! count may be zero get both copies under an `lb < ub` guard.

use std::collections::HashMap;

use super::peephole::{emit_rotation, sum, GateOpt};
use super::unitary::{describe, relate, Desc, Relation, Signed};
use crate::ir::view::{loop_bounds, Angle, Bound, LoopBounds};
use crate::ir::{
    names, Attribute, Dialect, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, Type, ValueId,
};
use crate::transforms::util::{int_constant, is_pure};

pub fn loop_boundary(m: &mut Module, opts: &GateOpt) -> bool {
    let mut loops: Vec<OpId> = m.walk_all().into_iter().filter(|o| m.kind(*o) == OpKind::For).collect();
    loops.reverse();
    let mut changed = false;
    for l in loops {
        while !m.is_erased(l) && hoist_one(m, l, opts) {
            changed = true;
        }
    }
    changed
}

/// `v` is defined outside `l`.
fn outside(m: &Module, v: ValueId, l: OpId) -> bool {
    let owner = match m.defining_op(v) {
        Some(d) => Some(d),
        None => m.value_block(v).and_then(|b| m.block_parent_op(b)),
    };
    owner.map_or(true, |o| o != l && !m.is_ancestor(l, o))
}

/// Value computable before `l`: defined outside or by pure ops over such.
fn invariant(m: &Module, v: ValueId, l: OpId) -> bool {
    if outside(m, v, l) {
        return true;
    }
    let Some(d) = m.defining_op(v) else { return false };
    is_pure(m, d) && m.op(d).regions.is_empty() && m.op(d).operands.iter().all(|x| invariant(m, *x, l))
}

/// Materializes an invariant value before `l`.
fn hoist(m: &mut Module, v: ValueId, l: OpId, map: &mut HashMap<ValueId, ValueId>) -> ValueId {
    if outside(m, v, l) {
        return v;
    }
    if let Some(h) = map.get(&v) {
        return *h;
    }
    let d = m.defining_op(v).unwrap();
    for x in m.op(d).operands.clone() {
        let h = hoist(m, x, l, map);
        map.insert(x, h);
    }
    m.clone_op(d, map, InsertPoint::Before(l));
    map[&v]
}

struct Match {
    first: OpId,
    last: OpId,
    a: Desc,
    b: Desc,
    slots: Vec<usize>,
    rel: Relation,
}

fn find(m: &Module, l: OpId, opts: &GateOpt) -> Option<Match> {
    let body = m.region_entry(l, 0);
    let args = m.block(body).args.clone();
    let term = m.terminator(body)?;
    let ys = m.op(term).operands.clone();
    for &arg in &args[1..] {
        if !m.ty(arg).is_quantum_state() || m.num_uses(arg) != 1 {
            continue;
        }
        let first = m.uses(arg)[0];
        if m.parent_block(first) != Some(body) {
            continue;
        }
        let Some(a) = describe(m, first) else { continue };
        let slots: Option<Vec<usize>> =
            a.quantum.iter().map(|q| args[1..].iter().position(|x| x == q)).collect();
        let Some(slots) = slots else { continue };
        let expect: Vec<ValueId> = slots.iter().map(|p| ys[*p]).collect();
        let Some(last) = m.defining_op(expect[0]) else { continue };
        if last == first || m.parent_block(last) != Some(body) {
            continue;
        }
        let Some(b) = describe(m, last) else { continue };
        if b.qresults != expect || expect.iter().any(|v| m.num_uses(*v) != 1) {
            continue;
        }
        if !a.cresults.is_empty() || !b.cresults.is_empty() {
            continue;
        }
        // `last` of one iteration runs right before `first` of the next
        let Some(rel) = relate(m, &b, &a) else { continue };
        if !opts.allows(&rel, &a) {
            continue;
        }
        let classical = |op: OpId| m.op(op).operands.iter().filter(|v| !m.ty(**v).is_quantum_data()).all(|v| invariant(m, *v, l));
        if !classical(first) || !classical(last) {
            continue;
        }
        return Some(Match { first, last, a, b, slots, rel });
    }
    None
}

fn hoist_one(m: &mut Module, l: OpId, opts: &GateOpt) -> bool {
    let lb = loop_bounds(m, l);
    let guarded = match lb.static_trip_count() {
        Some(0) => return false,
        Some(_) => false,
        None if lb.step.as_static().map_or(true, |s| s <= 0) => return false,
        None => true,
    };
    let Some(mt) = find(m, l, opts) else { return false };
    let n_bounds = lb.bound_operands;
    let inits: Vec<ValueId> = mt.slots.iter().map(|p| m.op(l).operands[n_bounds + p]).collect();
    let results: Vec<ValueId> = mt.slots.iter().map(|p| m.op(l).results[*p]).collect();
    let tys: Vec<Type> = inits.iter().map(|v| m.ty(*v).clone()).collect();
    let guard = guarded.then(|| guard_value(m, l, &lb));
    let mut hoisted = HashMap::new();

    // Invariant operands of both ops, placed before the loop.
    let mut operand_map: HashMap<ValueId, ValueId> = HashMap::new();
    for op in [mt.first, mt.last] {
        for v in m.op(op).operands.clone() {
            if !m.ty(v).is_quantum_data() {
                let h = hoist(m, v, l, &mut hoisted);
                operand_map.insert(v, h);
            }
        }
    }

    let merged = match &mt.rel {
        Relation::Cancel => None,
        Relation::Merge(g, sb, sa) => {
            let mut remap = |m: &mut Module, s: &Signed| match s.angle {
                Angle::Dyn(v) => Signed { angle: Angle::Dyn(hoist(m, v, l, &mut hoisted)), negate: s.negate },
                Angle::Static(_) => *s,
            };
            let (sb, sa) = (remap(m, sb), remap(m, sa));
            sum(m, InsertPoint::Before(mt.last), *g, sb, sa).map(|ang| (*g, sa, ang))
        }
    };

    // before the loop: the first op on the initial states
    let pre = wrap(m, InsertPoint::Before(l), guard, &inits, &tys, |m, at, ins| {
        let mut map = operand_map.clone();
        map.extend(mt.a.quantum.iter().copied().zip(ins.iter().copied()));
        let c = m.clone_op(mt.first, &mut map, at);
        remove_marks(m, c);
        m.op(c).results.clone()
    });
    for (p, v) in mt.slots.iter().zip(&pre) {
        m.set_operand(l, n_bounds + p, *v);
    }

    // after the loop: the last op, or the inverse of the first when merging
    let first_new = m.num_op_slots();
    let after = next_op(m, l);
    let post = wrap(m, after, guard, &results, &tys, |m, at, ins| match &merged {
        None => {
            let mut map = operand_map.clone();
            map.extend(mt.b.quantum.iter().copied().zip(ins.iter().copied()));
            let c = m.clone_op(mt.last, &mut map, at);
            remove_marks(m, c);
            m.op(c).results.clone()
        }
        Some((g, sa, _)) => {
            let inv = Signed { angle: sa.angle, negate: !sa.negate };
            let ang = resolve(m, at, inv);
            emit_rotation(m, at, *g, mt.a.chain.controls, ang, ins, tys.clone())
        }
    });
    for (r, v) in results.iter().zip(&post) {
        m.replace_uses_where(*r, *v, |_, u| u.index() < first_new);
    }

    // the body loses the first op and the last one becomes the merged rotation
    for (r, q) in mt.a.qresults.iter().zip(&mt.a.quantum) {
        m.replace_uses_unchecked(*r, *q);
    }
    m.erase_unchecked(mt.first);
    // `last` may read the results of `first` directly
    let b_in: Vec<ValueId> = mt
        .b
        .quantum
        .iter()
        .map(|v| mt.a.qresults.iter().position(|r| r == v).map_or(*v, |i| mt.a.quantum[i]))
        .collect();
    let body_out: Vec<ValueId> = match &merged {
        Some((g, _, ang)) => {
            let btys: Vec<Type> = mt.b.qresults.iter().map(|v| m.ty(*v).clone()).collect();
            emit_rotation(m, InsertPoint::Before(mt.last), *g, mt.b.chain.controls, *ang, &b_in, btys)
        }
        None => b_in,
    };
    for (r, v) in mt.b.qresults.iter().zip(&body_out) {
        m.replace_uses_unchecked(*r, *v);
    }
    m.erase_unchecked(mt.last);
    true
}

fn resolve(m: &mut Module, at: InsertPoint, s: Signed) -> Angle {
    match s.as_static() {
        Some(a) => Angle::Static(a),
        None => Angle::Dyn(super::peephole::signed_value(m, at, s)),
    }
}

fn remove_marks(m: &mut Module, op: OpId) {
    m.remove_attr(op, names::COMPUTE);
    m.remove_attr(op, names::UNCOMPUTE);
}

fn next_op(m: &Module, l: OpId) -> InsertPoint {
    let b = m.parent_block(l).unwrap();
    let p = m.op_position(l).unwrap();
    match m.block(b).ops.get(p + 1) {
        Some(o) => InsertPoint::Before(*o),
        None => InsertPoint::End(b),
    }
}

fn bound_value(m: &mut Module, l: OpId, b: Bound, ty: &Type) -> ValueId {
    match b {
        Bound::Value(v) => v,
        Bound::Static(c) => int_constant(m, InsertPoint::Before(l), c, ty.clone()),
    }
}

/// `lb < ub`, evaluated before the loop.
fn guard_value(m: &mut Module, l: OpId, lb: &LoopBounds) -> ValueId {
    let iv_ty = m.ty(m.block(m.region_entry(l, 0)).args[0]).clone();
    let lo = bound_value(m, l, lb.lb, &iv_ty);
    let hi = bound_value(m, l, lb.ub, &iv_ty);
    let c = m.insert_new(
        InsertPoint::Before(l),
        OpSpec::new(OpName::std(OpKind::CmpI))
            .operands([lo, hi])
            .attr(names::PREDICATE, Attribute::Str("slt".into()))
            .results([Type::i1()]),
    );
    m.op(c).results[0]
}

/// Emits `body` at `at`, or inside `scf.if guard` yielding `ins` otherwise.
fn wrap(
    m: &mut Module,
    at: InsertPoint,
    guard: Option<ValueId>,
    ins: &[ValueId],
    tys: &[Type],
    body: impl FnOnce(&mut Module, InsertPoint, &[ValueId]) -> Vec<ValueId>,
) -> Vec<ValueId> {
    let Some(g) = guard else { return body(m, at, ins) };
    let yield_name = OpName::new(Dialect::Scf, OpKind::Yield);
    let op = m.insert_new(
        at,
        OpSpec::new(OpName::new(Dialect::Scf, OpKind::If)).operands([g]).results(tys.iter().cloned()).regions(2),
    );
    let (r0, r1) = (m.op(op).regions[0], m.op(op).regions[1]);
    let then_b = m.add_block(r0, vec![]);
    let else_b = m.add_block(r1, vec![]);
    let y = m.insert_new(InsertPoint::End(then_b), OpSpec::new(yield_name));
    let outs = body(m, InsertPoint::Before(y), ins);
    m.set_operands(y, outs);
    m.insert_new(InsertPoint::End(else_b), OpSpec::new(yield_name).operands(ins.iter().copied()));
    m.op(op).results.clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse, print_module};

    fn run(src: &str) -> String {
        let mut m = parse(src).unwrap();
        loop_boundary(&mut m, &GateOpt::default());
        assert_eq!(crate::ir::verify(&m), vec![], "{}", print_module(&m));
        print_module(&m)
    }

    #[test]
    fn hoists_hermitian_boundary() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate, %p: !qs.qstate) -> (!qs.qstate, !qs.qstate) {
              %a, %b = affine.for %i = 0 to 4 iter_args(%x = %q, %y = %p) -> (!qs.qstate, !qs.qstate) {
                %1 = qs.X %x
                %2, %3 = qs.CX %1, %y
                %4 = qs.X %2
                affine.yield %4, %3
              }
              return %a, %b }",
        );
        let body = &t[t.find("affine.for").unwrap()..t.find("affine.yield").unwrap()];
        assert!(!body.contains("qs.X"), "{t}");
        assert_eq!(t.matches("qs.X").count(), 2, "{t}");
        assert!(!t.contains("scf.if"), "{t}");
    }

    #[test]
    fn dynamic_trip_count_is_guarded() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate, %n: index) -> !qs.qstate {
              %a = scf.for %i = 0 to %n iter_args(%x = %q) -> (!qs.qstate) {
                %1 = qs.H %x
                %2 = qs.T %1
                %3 = qs.H %2
                scf.yield %3
              }
              return %a }",
        );
        assert_eq!(t.matches("scf.if").count(), 2, "{t}");
        assert!(t.contains("cmpi(slt)"), "{t}");
    }

    #[test]
    fn single_op_body_is_kept() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %a = affine.for %i = 0 to 3 iter_args(%x = %q) -> (!qs.qstate) {
                %1 = qs.H %x
                affine.yield %1
              }
              return %a }",
        );
        assert_eq!(t.matches("qs.H").count(), 1, "{t}");
    }

    #[test]
    fn zero_trip_loop_is_kept() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %a = affine.for %i = 0 to 0 iter_args(%x = %q) -> (!qs.qstate) {
                %1 = qs.H %x
                %2 = qs.T %1
                %3 = qs.H %2
                affine.yield %3
              }
              return %a }",
        );
        assert_eq!(t.matches("qs.H").count(), 2, "{t}");
    }

    #[test]
    fn adjacent_boundary_pair_cancels() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate, %p: !qs.qstate) -> (!qs.qstate, !qs.qstate) {
              %a, %b = affine.for %i = 0 to 2 iter_args(%x = %q, %y = %p) -> (!qs.qstate, !qs.qstate) {
                %1, %2 = qs.CX %x, %y
                %3 = qs.T %2
                %4, %5 = qs.CX %1, %3
                affine.yield %4, %5
              }
              return %a, %b }",
        );
        assert_eq!(t.matches("qs.CX").count(), 2, "{t}");
    }

    #[test]
    fn boundary_rotations_merge() {
        let t = run(
            "qs.circ @f(%q: !qs.qstate) -> !qs.qstate {
              %a = affine.for %i = 0 to 5 iter_args(%x = %q) -> (!qs.qstate) {
                %1 = qs.Rz(0.25) %x
                %2 = qs.H %1
                %3 = qs.Rz(0.5) %2
                affine.yield %3
              }
              return %a }",
        );
        assert!(t.contains("qs.Rz(0.75)"), "{t}");
        assert!(t.contains("qs.Rz(-0.25)"), "{t}");
    }
}
