//! `--canonicalize`: local simplifications run to a fixpoint.
//!
//! Covers constant folding, dead pure code, trivial structured control flow,
//! register dataflow through `extract`/`combine`, and normal forms for
//! meta-operations (`apply` of known values, `adj`/`ctrl` nesting, zero
//! rotations).

use std::collections::{HashSet, VecDeque};

use super::util::{compare_index, float_constant, int_constant, is_pure, is_zero_angle, replace_op};
use crate::ir::view::{constant_value, gate_angle, loop_bounds, loop_inits, Angle, Bound, ConstVal};
use crate::ir::{
    names, Access, ArithOp, Attribute, CmpPred, Dialect, Gate, Index, InsertPoint, Module, OpId, OpKind, OpName,
    OpSpec, RegAccess, Type, ValueId,
};
use crate::pass::{PassContext, PassError};

pub const MAX_SWEEPS: usize = 64;

pub fn canonicalize(m: &mut Module, _cx: &mut PassContext) -> Result<(), PassError> {
    let mut sweeps = 0;
    loop {
        if !sweep(m) {
            return Ok(());
        }
        sweeps += 1;
        if sweeps >= MAX_SWEEPS {
            return Err(PassError::FixpointOverflow(MAX_SWEEPS));
        }
    }
}

/// One worklist drain over the whole module.
fn sweep(m: &mut Module) -> bool {
    let mut queue: VecDeque<OpId> = m.walk_all().into();
    let mut queued: HashSet<OpId> = queue.iter().copied().collect();
    let mut changed = false;
    while let Some(op) = queue.pop_front() {
        queued.remove(&op);
        if m.is_erased(op) || m.parent_block(op).is_none() {
            continue;
        }
        let first_new = m.num_op_slots();
        let mut touched: Vec<OpId> = m.op(op).results.iter().flat_map(|r| m.uses(*r).to_vec()).collect();
        touched.extend(m.op(op).operands.iter().filter_map(|v| m.defining_op(*v)));
        if !rewrite(m, op) {
            continue;
        }
        changed = true;
        for id in first_new..m.num_op_slots() {
            let id = OpId(id as u32);
            touched.push(id);
            touched.extend(m.op(id).results.iter().flat_map(|r| m.uses(*r).to_vec()));
        }
        if !m.is_erased(op) {
            touched.push(op);
        }
        for t in touched {
            if !m.is_erased(t) && queued.insert(t) {
                queue.push_back(t);
            }
        }
    }
    changed
}

fn rewrite(m: &mut Module, op: OpId) -> bool {
    if is_pure(m, op) && m.op(op).results.iter().all(|r| m.num_uses(*r) == 0) {
        m.erase_unchecked(op);
        return true;
    }
    if static_indices(m, op) {
        return true;
    }
    match m.kind(op) {
        OpKind::Arith(a) => fold_arith(m, op, a),
        OpKind::CmpI | OpKind::CmpF => fold_cmp(m, op),
        OpKind::Select => fold_select(m, op),
        OpKind::If => fold_if(m, op),
        OpKind::For => fold_for(m, op),
        OpKind::Extract => extract_of_combine(m, op),
        OpKind::Combine => combine_of_extract(m, op),
        OpKind::Apply => fold_apply(m, op),
        OpKind::Adj => fold_adj(m, op),
        OpKind::Ctrl => fold_ctrl(m, op),
        OpKind::Gate(g) => fold_zero_rotation(m, op, g),
        _ => false,
    }
}

// ---- classical folding ----------------------------------------------------

fn consts(m: &Module, op: OpId) -> Option<Vec<ConstVal>> {
    m.op(op).operands.iter().map(|v| constant_value(m, *v)).collect()
}

fn replace_with_const(m: &mut Module, op: OpId, c: ConstVal) {
    let ty = m.ty(m.op(op).results[0]).clone();
    let v = match c {
        ConstVal::Int(i) => int_constant(m, InsertPoint::Before(op), i, ty),
        ConstVal::Float(f) => float_constant(m, InsertPoint::Before(op), f),
    };
    replace_op(m, op, &[v]);
}

fn eval_int(a: ArithOp, x: i64, y: i64) -> Option<i64> {
    use ArithOp::*;
    let sh = |y: i64| if (0..64).contains(&y) { Some(y as u32) } else { None };
    Some(match a {
        AddI => x.wrapping_add(y),
        SubI => x.wrapping_sub(y),
        MulI => x.wrapping_mul(y),
        DivI if y != 0 => x.wrapping_div(y),
        RemI if y != 0 => x.wrapping_rem(y),
        ShlI => sh(y).map_or(0, |s| x.wrapping_shl(s)),
        ShrI => sh(y).map_or(if x < 0 { -1 } else { 0 }, |s| x >> s),
        AndI => x & y,
        OrI => x | y,
        XorI => x ^ y,
        _ => return None,
    })
}

fn fold_arith(m: &mut Module, op: OpId, a: ArithOp) -> bool {
    use ArithOp::*;
    let d = m.op(op);
    if let Some(c) = consts(m, op) {
        let folded = match (a, c.as_slice()) {
            (SIToFP, [ConstVal::Int(x)]) => Some(ConstVal::Float(*x as f64)),
            (FPToSI, [ConstVal::Float(x)]) => Some(ConstVal::Int(*x as i64)),
            (IndexCast, [ConstVal::Int(x)]) => Some(ConstVal::Int(*x)),
            (NegF, [ConstVal::Float(x)]) => Some(ConstVal::Float(-x)),
            (AddF, [ConstVal::Float(x), ConstVal::Float(y)]) => Some(ConstVal::Float(x + y)),
            (SubF, [ConstVal::Float(x), ConstVal::Float(y)]) => Some(ConstVal::Float(x - y)),
            (MulF, [ConstVal::Float(x), ConstVal::Float(y)]) => Some(ConstVal::Float(x * y)),
            (DivF, [ConstVal::Float(x), ConstVal::Float(y)]) => Some(ConstVal::Float(x / y)),
            (_, [ConstVal::Int(x), ConstVal::Int(y)]) => eval_int(a, *x, *y).map(ConstVal::Int),
            _ => None,
        };
        if let Some(c) = folded {
            replace_with_const(m, op, c);
            return true;
        }
        return false;
    }
    if d.operands.len() != 2 {
        return false;
    }
    let (x, y) = (d.operands[0], d.operands[1]);
    let ci = |v: ValueId| crate::ir::view::constant_int(m, v);
    let ident = match a {
        AddI | OrI | XorI if ci(y) == Some(0) => Some(x),
        AddI | OrI | XorI if ci(x) == Some(0) => Some(y),
        SubI | ShlI | ShrI if ci(y) == Some(0) => Some(x),
        MulI | DivI if ci(y) == Some(1) => Some(x),
        MulI if ci(x) == Some(1) => Some(y),
        _ => None,
    };
    if let Some(v) = ident {
        replace_op(m, op, &[v]);
        return true;
    }
    if a == MulI && (ci(x) == Some(0) || ci(y) == Some(0)) {
        replace_with_const(m, op, ConstVal::Int(0));
        return true;
    }
    if a == SubI && x == y {
        replace_with_const(m, op, ConstVal::Int(0));
        return true;
    }
    false
}

fn fold_cmp(m: &mut Module, op: OpId) -> bool {
    let d = m.op(op);
    let Some(p) = d.attrs.get(names::PREDICATE).and_then(Attribute::as_str).and_then(CmpPred::from_name) else {
        return false;
    };
    let r = match consts(m, op).as_deref() {
        Some([ConstVal::Int(x), ConstVal::Int(y)]) => p.eval(x, y),
        Some([ConstVal::Float(x), ConstVal::Float(y)]) => p.eval(x, y),
        _ if d.kind() == OpKind::CmpI && d.operands[0] == d.operands[1] => {
            matches!(p, CmpPred::Eq | CmpPred::Sle | CmpPred::Sge)
        }
        _ => return false,
    };
    replace_with_const(m, op, ConstVal::Int(r as i64));
    true
}

fn fold_select(m: &mut Module, op: OpId) -> bool {
    let d = m.op(op);
    let (c, a, b) = (d.operands[0], d.operands[1], d.operands[2]);
    let v = if a == b {
        a
    } else {
        match crate::ir::view::constant_int(m, c) {
            Some(0) => b,
            Some(_) => a,
            None => return false,
        }
    };
    replace_op(m, op, &[v]);
    true
}

/// Dynamic register indices that are constants become static.
fn static_indices(m: &mut Module, op: OpId) -> bool {
    let d = m.op(op);
    if d.accesses.is_empty() {
        return false;
    }
    let mut acc = d.accesses.clone();
    let mut changed = false;
    for a in acc.iter_mut() {
        for c in a.range.components_mut() {
            if let Index::Dyn(v) = c {
                if let Some(k) = crate::ir::view::constant_int(m, *v) {
                    *c = Index::Static(k);
                    changed = true;
                }
            }
        }
    }
    if changed {
        m.set_accesses(op, acc);
    }
    changed
}

// ---- structured control flow ---------------------------------------------

/// Moves the body of a single-block region before `at`, returning the
/// terminator operands.
fn splice_region(m: &mut Module, owner: OpId, region: usize, at: OpId) -> Vec<ValueId> {
    let b = m.region_entry(owner, region);
    let mut yields = Vec::new();
    for o in m.block_ops(b) {
        if m.name(o).is_terminator() {
            yields = m.op(o).operands.clone();
            continue;
        }
        m.move_op(o, InsertPoint::Before(at));
    }
    yields
}

fn fold_if(m: &mut Module, op: OpId) -> bool {
    let d = m.op(op);
    if let Some(c) = crate::ir::view::constant_int(m, d.operands[0]) {
        let vals = splice_region(m, op, if c != 0 { 0 } else { 1 }, op);
        replace_op(m, op, &vals);
        return true;
    }
    let empty = |m: &Module, i: usize| m.block(m.region_entry(op, i)).ops.len() <= 1;
    if d.results.is_empty() && empty(m, 0) && empty(m, 1) {
        m.erase_unchecked(op);
        return true;
    }
    false
}

fn fold_for(m: &mut Module, op: OpId) -> bool {
    let lb = loop_bounds(m, op);
    // constant bound operands become attributes
    let bound_consts: Vec<Option<i64>> = [lb.lb, lb.ub, lb.step]
        .iter()
        .map(|b| match b {
            Bound::Value(v) => crate::ir::view::constant_int(m, *v),
            Bound::Static(_) => None,
        })
        .collect();
    if bound_consts.iter().any(Option::is_some) {
        let inits = loop_inits(m, op);
        let mut operands = Vec::new();
        for ((b, c), key) in [lb.lb, lb.ub, lb.step].iter().zip(&bound_consts).zip([names::LB, names::UB, names::STEP]) {
            match (b, c) {
                (_, Some(k)) => m.set_attr(op, key, Attribute::Int(*k)),
                (Bound::Value(v), None) => operands.push(*v),
                _ => {}
            }
        }
        operands.extend(inits);
        m.set_operands(op, operands);
        return true;
    }
    if lb.static_trip_count() == Some(0) {
        let inits = loop_inits(m, op);
        replace_op(m, op, &inits);
        return true;
    }
    if lb.static_trip_count() == Some(1) {
        let body = m.region_entry(op, 0);
        let args = m.block(body).args.clone();
        let iv = int_constant(m, InsertPoint::Before(op), lb.lb.as_static().unwrap(), m.ty(args[0]).clone());
        m.replace_uses_unchecked(args[0], iv);
        for (a, init) in args[1..].iter().zip(loop_inits(m, op)) {
            m.replace_uses_unchecked(*a, init);
        }
        let vals = splice_region(m, op, 0, op);
        replace_op(m, op, &vals);
        return true;
    }
    let body = m.region_entry(op, 0);
    if m.op(op).results.is_empty() && m.block(body).ops.len() <= 1 {
        m.erase_unchecked(op);
        return true;
    }
    false
}

// ---- register dataflow ----------------------------------------------------

fn single_indices(m: &Module, op: OpId) -> Vec<Index> {
    m.op(op).accesses.iter().map(|a| a.range.start.clone()).collect()
}

fn accesses(idx: &[Index]) -> Vec<Access> {
    idx.iter().map(|i| Access { operand: 0, range: RegAccess::single(i.clone()) }).collect()
}

/// `extract(combine(r, [i..], s..), [j..])`: states inserted at a matching
/// index flow directly; other indices are extracted from `r` instead.
fn extract_of_combine(m: &mut Module, e: OpId) -> bool {
    let reg = m.op(e).operands[0];
    let Some(c) = m.defining_op(reg) else { return false };
    if m.kind(c) != OpKind::Combine || m.num_uses(reg) != 1 {
        return false;
    }
    let (ei, ci) = (single_indices(m, e), single_indices(m, c));
    let mut matched: Vec<Option<usize>> = Vec::new();
    for x in &ei {
        let mut hit = None;
        for (k, y) in ci.iter().enumerate() {
            match compare_index(m, x, y) {
                Some(true) => hit = Some(k),
                Some(false) => {}
                None => return false,
            }
        }
        matched.push(hit);
    }
    let base = m.op(c).operands[0];
    let cstates: Vec<ValueId> = m.op(c).operands[1..].to_vec();
    let unmatched: Vec<Index> = ei.iter().zip(&matched).filter(|(_, h)| h.is_none()).map(|(x, _)| x.clone()).collect();
    let (mut fresh, rest) = if unmatched.is_empty() {
        (Vec::new(), base)
    } else {
        let reg_ty = m.ty(base).clone();
        let mut tys = vec![Type::QState; unmatched.len()];
        tys.push(reg_ty);
        let ex = m.insert_new(
            InsertPoint::Before(e),
            OpSpec::new(m.name(e)).operands([base]).accesses(accesses(&unmatched)).results(tys),
        );
        let mut r = m.op(ex).results.clone();
        let rest = r.pop().unwrap();
        (r, rest)
    };
    let keep: Vec<usize> = (0..ci.len()).filter(|k| !matched.contains(&Some(*k))).collect();
    let out = if keep.is_empty() {
        rest
    } else {
        let idx: Vec<Index> = keep.iter().map(|k| ci[*k].clone()).collect();
        let ty = m.ty(m.op(c).results[0]).clone();
        let nc = m.insert_new(
            InsertPoint::Before(e),
            OpSpec::new(m.name(c))
                .operands(std::iter::once(rest).chain(keep.iter().map(|k| cstates[*k])))
                .accesses(accesses(&idx))
                .results([ty]),
        );
        m.op(nc).results[0]
    };
    fresh.reverse();
    let mut vals = Vec::new();
    for h in &matched {
        vals.push(match h {
            Some(k) => cstates[*k],
            None => fresh.pop().unwrap(),
        });
    }
    vals.push(out);
    replace_op(m, e, &vals);
    m.erase_unchecked(c);
    true
}

/// `combine(extract(r, [i..]), [i..], same states)` is `r`.
fn combine_of_extract(m: &mut Module, c: OpId) -> bool {
    let rest = m.op(c).operands[0];
    let Some(e) = m.defining_op(rest) else { return false };
    if m.kind(e) != OpKind::Extract {
        return false;
    }
    let er = m.op(e).results.clone();
    let k = er.len() - 1;
    let states = &m.op(c).operands[1..];
    if states.len() != k || states.iter().zip(&er).any(|(s, r)| s != r) {
        return false;
    }
    let (ei, ci) = (single_indices(m, e), single_indices(m, c));
    if ei.iter().zip(&ci).any(|(x, y)| compare_index(m, x, y) != Some(true)) {
        return false;
    }
    let src = m.op(e).operands[0];
    replace_op(m, c, &[src]);
    m.erase_unchecked(e);
    true
}

// ---- meta-operations ------------------------------------------------------

fn copy_marks(m: &Module, from: OpId, mut spec: OpSpec) -> OpSpec {
    for k in [names::COMPUTE, names::UNCOMPUTE] {
        if let Some(a) = m.op(from).attrs.get(k) {
            spec = spec.attr(k, a.clone());
        }
    }
    spec
}

/// Accesses of `apply` shifted to the argument positions of a direct op.
fn shifted_accesses(m: &Module, op: OpId) -> Vec<Access> {
    m.op(op)
        .accesses
        .iter()
        .map(|a| Access { operand: a.operand - 1, range: a.range.clone() })
        .collect()
}

fn fold_apply(m: &mut Module, op: OpId) -> bool {
    let d = m.op(op);
    let Some(def) = m.defining_op(d.operands[0]) else { return false };
    let dd = m.op(def);
    let args = d.operands[1..].to_vec();
    let rtys: Vec<Type> = d.results.iter().map(|r| m.ty(*r).clone()).collect();
    match dd.kind() {
        OpKind::GetVal => {
            let callee = dd.callee().unwrap_or_default().to_string();
            let Some(f) = m.lookup(&callee) else { return false };
            if d.name.dialect == Dialect::Qs && m.func_result_types(f) != rtys {
                return false;
            }
            let spec = OpSpec::new(OpName::new(d.name.dialect, OpKind::QCall))
                .operands(args)
                .accesses(shifted_accesses(m, op))
                .attr(names::CALLEE, Attribute::Symbol(callee))
                .results(rtys);
            let spec = copy_marks(m, op, spec);
            let n = m.insert_new(InsertPoint::Before(op), spec);
            let vals = m.op(n).results.clone();
            replace_op(m, op, &vals);
            true
        }
        OpKind::Gate(g) => {
            let mut spec = OpSpec::new(OpName::new(d.name.dialect, OpKind::Gate(g)))
                .operands(args)
                .accesses(shifted_accesses(m, op))
                .results(rtys);
            match gate_angle(m, def) {
                Some(Angle::Static(a)) => spec = spec.attr(names::ANGLE, Attribute::Float(a)),
                Some(Angle::Dyn(v)) => spec = spec.operands([v]),
                None => {}
            }
            let spec = copy_marks(m, op, spec);
            let n = m.insert_new(InsertPoint::Before(op), spec);
            let vals = m.op(n).results.clone();
            replace_op(m, op, &vals);
            true
        }
        _ => {
            if is_identity_value(m, d.operands[0]) {
                let vals: Vec<ValueId> =
                    args.iter().copied().filter(|v| m.ty(*v).is_quantum_data()).collect();
                if d.name.dialect == Dialect::Qs {
                    replace_op(m, op, &vals);
                } else {
                    m.erase_unchecked(op);
                }
                return true;
            }
            false
        }
    }
}

/// Operation value that acts as the identity (a zero rotation under any
/// number of controls and adjoints).
fn is_identity_value(m: &Module, v: ValueId) -> bool {
    let Some(d) = m.defining_op(v) else { return false };
    match m.kind(d) {
        OpKind::Adj | OpKind::Ctrl => is_identity_value(m, m.op(d).operands[0]),
        OpKind::Gate(g) if g.is_rotation() => {
            matches!(gate_angle(m, d), Some(Angle::Static(a)) if is_zero_angle(g, a))
        }
        _ => false,
    }
}

fn fold_zero_rotation(m: &mut Module, op: OpId, g: Gate) -> bool {
    if !g.is_rotation() || crate::ir::view::is_gate_value(m, op) {
        return false;
    }
    let a = match gate_angle(m, op) {
        Some(Angle::Static(a)) => a,
        Some(Angle::Dyn(v)) => match crate::ir::view::constant_float(m, v) {
            Some(a) => a,
            None => return false,
        },
        None => return false,
    };
    if !is_zero_angle(g, a) {
        return false;
    }
    if m.op(op).results.is_empty() {
        m.erase_unchecked(op);
    } else {
        let t = crate::ir::view::gate_targets(m, op).to_vec();
        replace_op(m, op, &t);
    }
    true
}

fn fold_adj(m: &mut Module, op: OpId) -> bool {
    let inner = m.op(op).operands[0];
    let Some(def) = m.defining_op(inner) else { return false };
    match m.kind(def) {
        OpKind::Adj => {
            let x = m.op(def).operands[0];
            replace_op(m, op, &[x]);
            true
        }
        OpKind::Gate(g) if g.is_hermitian() => {
            replace_op(m, op, &[inner]);
            true
        }
        OpKind::Gate(g) if g.is_rotation() => {
            let name = m.name(def);
            let ty = m.ty(inner).clone();
            let spec = match gate_angle(m, def) {
                Some(Angle::Static(a)) => OpSpec::new(name).attr(names::ANGLE, Attribute::Float(-a)),
                Some(Angle::Dyn(v)) => {
                    let neg = m.insert_new(
                        InsertPoint::Before(op),
                        OpSpec::new(OpName::std(OpKind::Arith(ArithOp::NegF))).operands([v]).results([Type::F64]),
                    );
                    OpSpec::new(name).operands([m.op(neg).results[0]])
                }
                None => return false,
            };
            let n = m.insert_new(InsertPoint::Before(op), spec.results([ty]));
            let v = m.op(n).results[0];
            replace_op(m, op, &[v]);
            true
        }
        _ => false,
    }
}

/// `ctrl(adj x)` becomes `adj(ctrl x)`.
fn fold_ctrl(m: &mut Module, op: OpId) -> bool {
    let inner = m.op(op).operands[0];
    let Some(def) = m.defining_op(inner) else { return false };
    if m.kind(def) != OpKind::Adj {
        return false;
    }
    let x = m.op(def).operands[0];
    let ty = m.ty(m.op(op).results[0]).clone();
    let attrs = m.op(op).attrs.clone();
    let name = m.name(op);
    let c = m.insert_new(InsertPoint::Before(op), OpSpec::new(name).operands([x]).attrs(attrs).results([ty.clone()]));
    let cv = m.op(c).results[0];
    let a = m.insert_new(
        InsertPoint::Before(op),
        OpSpec::new(OpName::new(name.dialect, OpKind::Adj)).operands([cv]).results([ty]),
    );
    let av = m.op(a).results[0];
    replace_op(m, op, &[av]);
    true
}
