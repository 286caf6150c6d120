//! `--lower-adj`: adjoint circuits become generated `@C__adj` circuits.
//!
//! Classical computations keep their order; quantum operations run backwards,
//! each replaced by its inverse. Hermitian gates stay bare, other gates and
//! applications get wrapped in `adj`, calls become applications of the
//! callee's adjoint (lowered in turn), loops run their iterations in reverse.
//! A user-provided `@C__adj` is used as is.

use std::collections::HashMap;

use super::lower_ctrl::{controlled_circuit, rewrite_apply};
use super::unitary::{chain, Base};
use crate::ir::verify::circuit_is_unitary;
use crate::ir::view::{gate_angle, gate_targets, gate_value_type, loop_bounds, Angle, Bound};
use crate::ir::{
    names, Access, ArithOp, Attribute, Attrs, BlockId, Dialect, InsertPoint, Module, OpId, OpKind, OpName, OpSpec,
    Type, ValueId,
};
use crate::pass::{PassContext, PassError};
use crate::transforms::util::int_constant;

pub const ADJ_SUFFIX: &str = "__adj";

type Map = HashMap<ValueId, ValueId>;

pub fn lower_adj(m: &mut Module, _cx: &mut PassContext) -> Result<(), PassError> {
    loop {
        let mut changed = false;
        for op in m.walk_all() {
            if m.is_erased(op) || m.kind(op) != OpKind::Apply {
                continue;
            }
            let Some(ch) = chain(m, m.op(op).operands[0]) else { continue };
            let Base::Circ(c) = &ch.base else { continue };
            if !ch.adjoint {
                continue;
            }
            if m.name(op).dialect != Dialect::Qs {
                return Err(PassError::UnsupportedConstruct(format!(
                    "adjoint @{c} in the memory-semantics dialect (convert to value semantics first)"
                )));
            }
            let name = controlled_circuit(m, c, ch.controls)?;
            let name = adjoint_circuit(m, &name)?;
            rewrite_apply(m, op, &name, false)?;
            changed = true;
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Name of the adjoint of `c`, generating it when missing.
pub fn adjoint_circuit(m: &mut Module, c: &str) -> Result<String, PassError> {
    if let Some(base) = c.strip_suffix(ADJ_SUFFIX) {
        if m.lookup(base).is_some() {
            return Ok(base.to_string());
        }
    }
    let name = format!("{c}{ADJ_SUFFIX}");
    if m.lookup(&name).is_none() {
        let def = m.lookup(c).ok_or_else(|| PassError::UnsupportedConstruct(format!("unknown circuit @{c}")))?;
        generate(m, def, &name)?;
    }
    Ok(name)
}

fn unsupported(what: impl Into<String>) -> PassError {
    PassError::UnsupportedConstruct(what.into())
}

fn get(map: &Map, v: ValueId) -> Result<ValueId, PassError> {
    map.get(&v).copied().ok_or_else(|| unsupported("value not available in the adjoint"))
}

fn take(st: &mut Map, v: ValueId) -> Result<ValueId, PassError> {
    st.remove(&v).ok_or_else(|| unsupported("quantum state not available in the adjoint"))
}

fn generate(m: &mut Module, def: OpId, name: &str) -> Result<(), PassError> {
    let sym = m.op(def).sym_name().unwrap_or_default().to_string();
    if m.kind(def) != OpKind::Circ || m.name(def).dialect != Dialect::Qs {
        return Err(unsupported(format!("@{sym} is not a value-semantics circuit")));
    }
    circuit_is_unitary(m, &sym).map_err(PassError::NonUnitaryCircuit)?;
    if m.region_blocks(m.op(def).regions[0]).len() != 1 {
        return Err(unsupported(format!("@{sym} has several blocks")));
    }
    let mut attrs = m.op(def).attrs.clone();
    for a in [names::ENTRY, names::ADJOINT_OF, names::CONTROLLED_OF] {
        attrs.remove(a);
    }
    attrs.insert(names::SYM_NAME.into(), Attribute::Str(name.to_string()));
    let new = m.insert_new(InsertPoint::After(def), OpSpec::new(m.name(def)).attrs(attrs).regions(1));
    let src = m.region_entry(def, 0);
    let tys = m.func_arg_types(def);
    let dst = m.add_block(m.op(new).regions[0], tys);
    let (old_args, new_args) = (m.block(src).args.clone(), m.block(dst).args.clone());
    let mut fwd = Map::new();
    for (o, n) in old_args.iter().zip(&new_args) {
        let nm = m.value(*o).name.clone();
        m.set_value_name(*n, nm);
        fwd.insert(*o, *n);
    }
    let ret = m.terminator(src).unwrap();
    let outs = m.op(ret).operands.clone();
    let q_args: Vec<(ValueId, ValueId)> =
        old_args.iter().zip(&new_args).filter(|(o, _)| m.ty(**o).is_quantum_data()).map(|(o, n)| (*o, *n)).collect();
    let q_outs: Vec<ValueId> = outs.iter().copied().filter(|v| m.ty(*v).is_quantum_data()).collect();
    if q_outs.len() != q_args.len() {
        return Err(unsupported(format!("@{sym} does not return one state per quantum argument")));
    }
    let mut st: Map = q_outs.iter().zip(&q_args).map(|(o, (_, n))| (*o, *n)).collect();
    let new_ret = m.insert_new(InsertPoint::End(dst), OpSpec::new(m.name(ret)));
    reverse_block(m, src, InsertPoint::Before(new_ret), &mut fwd, &mut st)?;
    let mut ret_ops = Vec::new();
    let mut qi = 0;
    for v in outs {
        if m.ty(v).is_quantum_data() {
            ret_ops.push(take(&mut st, q_args[qi].0)?);
            qi += 1;
        } else {
            ret_ops.push(get(&fwd, v)?);
        }
    }
    m.set_operands(new_ret, ret_ops);
    Ok(())
}

fn is_quantum(m: &Module, op: OpId) -> bool {
    let d = m.op(op);
    d.operands.iter().chain(&d.results).any(|v| m.ty(*v).is_quantum_data())
        || (!d.regions.is_empty() && m.nested_ops(op).iter().any(|o| is_quantum(m, *o)))
}

/// Emits the adjoint of block `src` at `at`. `st` maps each forward state to
/// the adjoint value holding it; on return it maps the block's inputs.
fn reverse_block(m: &mut Module, src: BlockId, at: InsertPoint, fwd: &mut Map, st: &mut Map) -> Result<(), PassError> {
    let term = m.terminator(src);
    let ops: Vec<OpId> = m.block_ops(src).into_iter().filter(|o| Some(*o) != term).collect();
    for &o in &ops {
        if !is_quantum(m, o) {
            m.clone_op(o, fwd, at);
        }
    }
    for &o in ops.iter().rev() {
        if is_quantum(m, o) {
            invert(m, o, at, fwd, st)?;
        }
    }
    Ok(())
}

fn swapped_marks(m: &Module, op: OpId) -> Attrs {
    let mut a = Attrs::new();
    let d = &m.op(op).attrs;
    if d.contains_key(names::COMPUTE) {
        a.insert(names::UNCOMPUTE.into(), Attribute::Unit);
    }
    if d.contains_key(names::UNCOMPUTE) {
        a.insert(names::COMPUTE.into(), Attribute::Unit);
    }
    a
}

fn mapped_accesses(m: &Module, op: OpId, fwd: &Map, shift: usize) -> Result<Vec<Access>, PassError> {
    let mut out = Vec::new();
    for a in &m.op(op).accesses {
        let mut range = a.range.clone();
        for c in range.components_mut() {
            if let crate::ir::Index::Dyn(v) = c {
                *v = get(fwd, *v)?;
            }
        }
        out.push(Access { operand: a.operand + shift, range });
    }
    Ok(out)
}

fn qs(kind: OpKind) -> OpName {
    OpName::new(Dialect::Qs, kind)
}

fn adj_of(m: &mut Module, at: InsertPoint, v: ValueId) -> ValueId {
    let ty = m.ty(v).clone();
    let a = m.insert_new(at, OpSpec::new(qs(OpKind::Adj)).operands([v]).results([ty]));
    m.op(a).results[0]
}

/// `apply adj(v)` on `args`, where quantum args come from the forward
/// results (in order) and classical ones from `fwd`.
fn inverse_apply(
    m: &mut Module,
    op: OpId,
    at: InsertPoint,
    v: ValueId,
    args: &[ValueId],
    fwd: &Map,
    st: &mut Map,
    shift: usize,
) -> Result<(), PassError> {
    let d = m.op(op);
    if d.results.iter().any(|r| !m.ty(*r).is_quantum_data()) {
        return Err(unsupported("quantum operation with classical results in an adjoint"));
    }
    let results = d.results.clone();
    let mut q = results.iter();
    let mut operands = vec![adj_of(m, at, v)];
    let mut qargs = Vec::new();
    for a in args {
        if m.ty(*a).is_quantum_data() {
            let r = q.next().ok_or_else(|| unsupported("apply results do not mirror its arguments"))?;
            operands.push(take(st, *r)?);
            qargs.push(*a);
        } else {
            operands.push(get(fwd, *a)?);
        }
    }
    let tys: Vec<Type> = results.iter().map(|r| m.ty(*r).clone()).collect();
    let acc = mapped_accesses(m, op, fwd, shift)?;
    let attrs = swapped_marks(m, op);
    let n = m.insert_new(at, OpSpec::new(qs(OpKind::Apply)).operands(operands).accesses(acc).attrs(attrs).results(tys));
    for (a, r) in qargs.into_iter().zip(m.op(n).results.clone()) {
        st.insert(a, r);
    }
    Ok(())
}

fn invert(m: &mut Module, op: OpId, at: InsertPoint, fwd: &mut Map, st: &mut Map) -> Result<(), PassError> {
    let d = m.op(op).clone();
    match d.kind() {
        OpKind::Gate(g) => {
            let targets = gate_targets(m, op).to_vec();
            if g.is_hermitian() {
                let ins: Vec<ValueId> = d.results.iter().map(|r| take(st, *r)).collect::<Result<_, _>>()?;
                let tys: Vec<Type> = targets.iter().map(|t| m.ty(*t).clone()).collect();
                let n = m.insert_new(
                    at,
                    OpSpec::new(qs(OpKind::Gate(g))).operands(ins).attrs(swapped_marks(m, op)).results(tys),
                );
                for (t, r) in targets.iter().zip(m.op(n).results.clone()) {
                    st.insert(*t, r);
                }
                return Ok(());
            }
            let mut spec = OpSpec::new(qs(OpKind::Gate(g))).results([gate_value_type(g)]);
            match gate_angle(m, op) {
                Some(Angle::Static(a)) => spec = spec.attr(names::ANGLE, Attribute::Float(a)),
                Some(Angle::Dyn(v)) => spec = spec.operands([get(fwd, v)?]),
                None => {}
            }
            let gv = m.insert_new(at, spec);
            let gv = m.op(gv).results[0];
            inverse_apply(m, op, at, gv, &targets, fwd, st, 2)
        }
        OpKind::Apply => {
            let v = get(fwd, d.operands[0])?;
            inverse_apply(m, op, at, v, &d.operands[1..], fwd, st, 0)
        }
        OpKind::QCall => {
            let callee = d.callee().unwrap_or_default().to_string();
            let g = m.insert_new(
                at,
                OpSpec::new(qs(OpKind::GetVal)).attr(names::CALLEE, Attribute::Symbol(callee)).results([Type::Circ]),
            );
            let gv = m.op(g).results[0];
            inverse_apply(m, op, at, gv, &d.operands, fwd, st, 1)
        }
        OpKind::Extract => {
            // (q.., rest) = extract r[i..]  =>  r = combine rest[i..], q..
            let (rest, qs_) = d.results.split_last().unwrap();
            let mut operands = vec![take(st, *rest)?];
            for q in qs_ {
                operands.push(take(st, *q)?);
            }
            let ty = m.ty(d.operands[0]).clone();
            let acc = mapped_accesses(m, op, fwd, 0)?;
            let n = m.insert_new(at, OpSpec::new(qs(OpKind::Combine)).operands(operands).accesses(acc).results([ty]));
            st.insert(d.operands[0], m.op(n).results[0]);
            Ok(())
        }
        OpKind::Combine => {
            let r = take(st, d.results[0])?;
            let mut tys: Vec<Type> = d.operands[1..].iter().map(|v| m.ty(*v).clone()).collect();
            tys.push(m.ty(d.operands[0]).clone());
            let acc = mapped_accesses(m, op, fwd, 0)?;
            let n = m.insert_new(at, OpSpec::new(qs(OpKind::Extract)).operands([r]).accesses(acc).results(tys));
            let res = m.op(n).results.clone();
            st.insert(d.operands[0], *res.last().unwrap());
            for (q, r) in d.operands[1..].iter().zip(res) {
                st.insert(*q, r);
            }
            Ok(())
        }
        OpKind::Alloc | OpKind::AllocReg => {
            let kind = if d.kind() == OpKind::Alloc { OpKind::Free } else { OpKind::FreeReg };
            let v = take(st, d.results[0])?;
            m.insert_new(at, OpSpec::new(qs(kind)).operands([v]));
            Ok(())
        }
        OpKind::Free => {
            let n = m.insert_new(at, OpSpec::new(qs(OpKind::Alloc)).results([Type::QState]));
            st.insert(d.operands[0], m.op(n).results[0]);
            Ok(())
        }
        OpKind::FreeReg => {
            let ty = m.ty(d.operands[0]).clone();
            let size = ty.register_size().ok_or_else(|| unsupported("freeing a register of unknown size"))?;
            let n = m.insert_new(
                at,
                OpSpec::new(qs(OpKind::AllocReg)).attr(names::SIZE, Attribute::Int(size as i64)).results([ty]),
            );
            st.insert(d.operands[0], m.op(n).results[0]);
            Ok(())
        }
        OpKind::Meas => Err(PassError::NonUnitaryCircuit("measurement in an adjoint".into())),
        OpKind::For => invert_for(m, op, at, fwd, st),
        OpKind::If => invert_if(m, op, at, fwd, st),
        _ => Err(unsupported(format!("`{}` in an adjoint", m.name(op)))),
    }
}

fn arith(m: &mut Module, at: InsertPoint, a: ArithOp, x: ValueId, y: ValueId) -> ValueId {
    let ty = m.ty(x).clone();
    let n = m.insert_new(at, OpSpec::new(OpName::std(OpKind::Arith(a))).operands([x, y]).results([ty]));
    m.op(n).results[0]
}

fn invert_for(m: &mut Module, op: OpId, at: InsertPoint, fwd: &mut Map, st: &mut Map) -> Result<(), PassError> {
    let lb = loop_bounds(m, op);
    let d = m.op(op).clone();
    let body = m.region_entry(op, 0);
    let bargs = m.block(body).args.clone();
    let iv_ty = m.ty(bargs[0]).clone();
    if bargs[1..].iter().any(|a| !m.ty(*a).is_quantum_data()) {
        return Err(unsupported("classical loop-carried values in an adjoint"));
    }
    let bound = |m: &mut Module, b: Bound| -> Result<ValueId, PassError> {
        match b {
            Bound::Static(c) => Ok(int_constant(m, at, c, iv_ty.clone())),
            Bound::Value(v) => get(fwd, v),
        }
    };
    let (lo, hi, step) = (bound(m, lb.lb)?, bound(m, lb.ub)?, bound(m, lb.step)?);
    // forward iv of reversed iteration j is lo + last - j
    let one = int_constant(m, at, 1, iv_ty.clone());
    let span = arith(m, at, ArithOp::SubI, hi, lo);
    let span = arith(m, at, ArithOp::SubI, span, one);
    let k = arith(m, at, ArithOp::DivI, span, step);
    let last = arith(m, at, ArithOp::MulI, k, step);
    let last = arith(m, at, ArithOp::AddI, lo, last);
    let mirror = arith(m, at, ArithOp::AddI, lo, last);

    let mut operands: Vec<ValueId> = Vec::new();
    for v in &d.operands[..lb.bound_operands] {
        operands.push(get(fwd, *v)?);
    }
    for r in &d.results {
        operands.push(take(st, *r)?);
    }
    let tys: Vec<Type> = d.results.iter().map(|r| m.ty(*r).clone()).collect();
    let mut attrs = d.attrs.clone();
    attrs.remove(names::COMPUTE);
    attrs.remove(names::UNCOMPUTE);
    attrs.extend(swapped_marks(m, op));
    let n = m.insert_new(at, OpSpec::new(m.name(op)).operands(operands).attrs(attrs).results(tys).regions(1));
    let arg_tys: Vec<Type> = bargs.iter().map(|a| m.ty(*a).clone()).collect();
    let nb = m.add_block(m.op(n).regions[0], arg_tys);
    let nargs = m.block(nb).args.clone();
    let y = m.insert_new(InsertPoint::End(nb), OpSpec::new(OpName::new(m.name(op).dialect, OpKind::Yield)));
    let iv = arith(m, InsertPoint::Before(y), ArithOp::SubI, mirror, nargs[0]);
    fwd.insert(bargs[0], iv);
    let fy = m.terminator(body).unwrap();
    let mut inner: Map = m.op(fy).operands.iter().copied().zip(nargs[1..].iter().copied()).collect();
    reverse_block(m, body, InsertPoint::Before(y), fwd, &mut inner)?;
    let outs: Vec<ValueId> = bargs[1..].iter().map(|a| take(&mut inner, *a)).collect::<Result<_, _>>()?;
    m.set_operands(y, outs);
    let inits = &d.operands[lb.bound_operands..];
    for (i, r) in inits.iter().zip(m.op(n).results.clone()) {
        st.insert(*i, r);
    }
    Ok(())
}

fn invert_if(m: &mut Module, op: OpId, at: InsertPoint, fwd: &mut Map, st: &mut Map) -> Result<(), PassError> {
    let d = m.op(op).clone();
    if d.results.iter().any(|r| !m.ty(*r).is_quantum_data()) {
        return Err(unsupported("classical results of a quantum `if` in an adjoint"));
    }
    // states captured from outside the `if`, in first-use order
    let mut captured: Vec<ValueId> = Vec::new();
    for o in m.nested_ops(op) {
        for v in &m.op(o).operands {
            let inside = m.defining_op(*v).map_or_else(
                || m.value_block(*v).and_then(|b| m.block_parent_op(b)).map_or(false, |p| p == op || m.is_ancestor(op, p)),
                |def| m.is_ancestor(op, def),
            );
            if m.ty(*v).is_quantum_data() && !inside && !captured.contains(v) {
                captured.push(*v);
            }
        }
    }
    let ins: Vec<ValueId> = d.results.iter().map(|r| take(st, *r)).collect::<Result<_, _>>()?;
    let tys: Vec<Type> = captured.iter().map(|v| m.ty(*v).clone()).collect();
    let cond = get(fwd, d.operands[0])?;
    let n = m.insert_new(at, OpSpec::new(m.name(op)).operands([cond]).attrs(d.attrs.clone()).results(tys).regions(2));
    for r in 0..2 {
        let src = m.region_entry(op, r);
        let nb = m.add_block(m.op(n).regions[r], vec![]);
        let y = m.insert_new(InsertPoint::End(nb), OpSpec::new(OpName::new(m.name(op).dialect, OpKind::Yield)));
        let fy = m.terminator(src).unwrap();
        let mut inner: Map = m.op(fy).operands.iter().copied().zip(ins.iter().copied()).collect();
        reverse_block(m, src, InsertPoint::Before(y), fwd, &mut inner)?;
        let outs: Vec<ValueId> = captured.iter().map(|v| take(&mut inner, *v)).collect::<Result<_, _>>()?;
        m.set_operands(y, outs);
    }
    for (v, r) in captured.iter().zip(m.op(n).results.clone()) {
        st.insert(*v, r);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse, print_module};

    fn lower(src: &str) -> Module {
        let mut m = parse(src).unwrap();
        lower_adj(&mut m, &mut PassContext::default()).unwrap();
        assert_eq!(crate::ir::verify(&m), vec![], "{}", print_module(&m));
        m
    }

    const QFT2: &str = "
        qs.circ @Q(%r: !qs.rstate<2>) -> !qs.rstate<2> {
          %a, %r1 = qs.extract %r[0]
          %a1 = qs.H %a
          %r2 = qs.combine %r1[0], %a1
          %b, %c, %r3 = qs.extract %r2[1][0]
          %t = qs.R(1.5) : !q.u1
          %ct = qs.ctrl(1) %t : !q.cop<1, !q.u1>
          %b1, %c1 = qs.apply %ct(%b, %c)
          %r4 = qs.combine %r3[1][0], %b1, %c1
          return %r4
        }";

    #[test]
    fn reverses_and_keeps_hermitian_bare() {
        let m = lower(&format!(
            "{QFT2}
            qs.circ @main(%r: !qs.rstate<2>) -> !qs.rstate<2> {{
              %q = qs.getval @Q : !q.circ
              %a = qs.adj %q : !q.circ
              %r1 = qs.apply %a(%r)
              return %r1
            }}"
        ));
        let adj = m.lookup("Q__adj").expect("generated");
        let ops = m.nested_ops(adj);
        let h = ops.iter().position(|o| m.kind(*o) == OpKind::Gate(crate::ir::Gate::H)).unwrap();
        let ap = ops.iter().position(|o| m.kind(*o) == OpKind::Apply).unwrap();
        assert!(ap < h, "{}", print_module(&m));
        assert!(ops.iter().any(|o| m.kind(*o) == OpKind::Adj));
        assert!(print_module(&m).contains("qs.call @Q__adj"));
    }

    #[test]
    fn double_adjoint_calls_original() {
        let mut m = parse(&format!(
            "{QFT2}
            qs.circ @main(%r: !qs.rstate<2>) -> !qs.rstate<2> {{
              %q = qs.getval @Q : !q.circ
              %a = qs.adj %q : !q.circ
              %r1 = qs.apply %a(%r)
              return %r1
            }}"
        ))
        .unwrap();
        let mut cx = PassContext::default();
        lower_adj(&mut m, &mut cx).unwrap();
        assert_eq!(adjoint_circuit(&mut m, "Q__adj").unwrap(), "Q");
    }

    #[test]
    fn loops_run_backwards() {
        let m = lower(
            "qs.circ @L(%r: !qs.rstate<3>, %n: index) -> !qs.rstate<3> {
               %f = scf.for %i = 0 to %n iter_args(%x = %r) -> (!qs.rstate<3>) {
                 %q, %rest = qs.extract %x[%i]
                 %q1 = qs.T %q
                 %y = qs.combine %rest[%i], %q1
                 scf.yield %y
               }
               return %f
             }
             qs.circ @main(%r: !qs.rstate<3>, %n: index) -> !qs.rstate<3> {
               %v = qs.getval @L : !q.circ
               %a = qs.adj %v : !q.circ
               %r1 = qs.apply %a(%r, %n)
               return %r1
             }",
        );
        let adj = m.lookup("L__adj").unwrap();
        assert!(m.nested_ops(adj).iter().any(|o| m.kind(*o) == OpKind::For));
    }
}
