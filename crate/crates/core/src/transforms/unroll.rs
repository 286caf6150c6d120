//! `--unroll-affine`: unrolls `affine.for` loops with static bounds.

use std::collections::HashMap;

use super::util::{int_constant, replace_op};
use crate::ir::view::{loop_bounds, loop_inits};
use crate::ir::{names, Attribute, Dialect, InsertPoint, Module, OpId, OpKind, ValueId};
use crate::pass::{PassContext, PassError};

/// Loops with more iterations than this are left rolled by full unrolling.
pub const MAX_FULL_UNROLL: u64 = 1 << 16;

/// Fully unrolls every static `affine.for` (innermost first).
pub fn unroll_affine(m: &mut Module, cx: &mut PassContext) -> Result<(), PassError> {
    unroll_with(m, cx, None, false)
}

/// `factor = None` unrolls fully. `all_loops` also unrolls `scf.for`.
pub fn unroll_with(m: &mut Module, cx: &mut PassContext, factor: Option<u64>, all_loops: bool) -> Result<(), PassError> {
    let mut loops: Vec<OpId> = m
        .walk_all()
        .into_iter()
        .filter(|o| m.kind(*o) == OpKind::For && (all_loops || m.name(*o).dialect == Dialect::Affine))
        .collect();
    // post-order: inner loops first
    loops.reverse();
    for l in loops {
        if m.is_erased(l) {
            continue;
        }
        let lb = loop_bounds(m, l);
        let Some(trip) = lb.static_trip_count() else {
            cx.note(format!("DynamicBounds: loop {l:?} has run-time bounds and was not unrolled"));
            continue;
        };
        match factor {
            None if trip <= MAX_FULL_UNROLL => full(m, l, trip),
            None => cx.note(format!("loop {l:?} has {trip} iterations, above the unroll limit")),
            Some(k) if k > 1 && trip >= k => partial(m, l, trip, k),
            Some(_) => {}
        }
    }
    Ok(())
}

/// Emits copies of the loop body before `at` for the given induction values.
fn copies(m: &mut Module, l: OpId, ivs: impl Iterator<Item = i64>, mut carried: Vec<ValueId>, at: OpId) -> Vec<ValueId> {
    let body = m.region_entry(l, 0);
    let args = m.block(body).args.clone();
    let iv_ty = m.ty(args[0]).clone();
    for iv in ivs {
        let c = int_constant(m, InsertPoint::Before(at), iv, iv_ty.clone());
        let mut map: HashMap<ValueId, ValueId> = HashMap::new();
        map.insert(args[0], c);
        for (a, v) in args[1..].iter().zip(&carried) {
            map.insert(*a, *v);
        }
        for o in m.block_ops(body) {
            if m.name(o).is_terminator() {
                carried = m.op(o).operands.iter().map(|v| *map.get(v).unwrap_or(v)).collect();
                continue;
            }
            m.clone_op(o, &mut map, InsertPoint::Before(at));
        }
    }
    carried
}

fn full(m: &mut Module, l: OpId, trip: u64) {
    let lb = loop_bounds(m, l);
    let (lo, st) = (lb.lb.as_static().unwrap(), lb.step.as_static().unwrap());
    let inits = loop_inits(m, l);
    let out = copies(m, l, (0..trip as i64).map(|k| lo + k * st), inits, l);
    replace_op(m, l, &out);
}

/// Unroll by `k`: the loop runs `trip / k` times over `k` body copies and the
/// remaining iterations follow it unrolled.
fn partial(m: &mut Module, l: OpId, trip: u64, k: u64) {
    let lb = loop_bounds(m, l);
    let (lo, st) = (lb.lb.as_static().unwrap(), lb.step.as_static().unwrap());
    let main_trips = trip / k;
    let body = m.region_entry(l, 0);
    let args = m.block(body).args.clone();
    let term = m.terminator(body).unwrap();
    let orig: Vec<OpId> = m.block_ops(body).into_iter().filter(|o| *o != term).collect();
    let mut carried: Vec<ValueId> = m.op(term).operands.clone();
    let iv_ty = m.ty(args[0]).clone();
    for j in 1..k {
        // iv + j*step
        let off = int_constant(m, InsertPoint::Before(term), j as i64 * st, iv_ty.clone());
        let add = m.insert_new(
            InsertPoint::Before(term),
            crate::ir::OpSpec::new(crate::ir::OpName::std(OpKind::Arith(crate::ir::ArithOp::AddI)))
                .operands([args[0], off])
                .results([iv_ty.clone()]),
        );
        let mut map: HashMap<ValueId, ValueId> = HashMap::new();
        map.insert(args[0], m.op(add).results[0]);
        for (a, v) in args[1..].iter().zip(&carried) {
            map.insert(*a, *v);
        }
        for &o in &orig {
            m.clone_op(o, &mut map, InsertPoint::Before(term));
        }
        carried = carried.iter().map(|v| *map.get(v).unwrap_or(v)).collect();
    }
    m.set_operands(term, carried);
    let new_ub = lo + (main_trips * k) as i64 * st;
    // all bounds are static here, so the operands are just the inits
    m.set_attr(l, names::STEP, Attribute::Int(st * k as i64));
    m.set_attr(l, names::UB, Attribute::Int(new_ub));
    let results = m.op(l).results.clone();
    if main_trips * k < trip {
        let rest_ivs = (main_trips * k..trip).map(|i| lo + i as i64 * st);
        let next = m.op_position(l).map(|p| m.block(m.parent_block(l).unwrap()).ops[p + 1]).unwrap();
        let first = m.num_op_slots();
        let out = copies(m, l, rest_ivs, results.clone(), next);
        for (r, o) in results.iter().zip(out) {
            if *r != o {
                m.replace_uses_where(*r, o, |_, u| u.index() < first);
            }
        }
    }
}
