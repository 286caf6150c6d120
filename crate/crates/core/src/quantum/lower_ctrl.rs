//! `--lower-ctrl`: controlled circuits become generated `@C__ctl` circuits.
//!
//! `@C__ctl` takes the control state as a new leading argument and threads it
//! through every quantum operation of `@C`, except those marked `compute` or
//! `uncompute`, which stay uncontrolled. `k` controls give `@C__ctl` nested
//! `k` times.

use super::unitary::{chain, Base};
use crate::ir::signature::ctrl_type;
use crate::ir::verify::circuit_is_unitary;
use crate::ir::view::{gate_angle, gate_targets, gate_value_type, is_gate_application, is_marked, Angle};
use crate::ir::{
    names, Access, Attribute, BlockId, Dialect, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, Type, ValueId,
};
use crate::pass::{PassContext, PassError};
use crate::transforms::util::replace_op;

pub const CTL_SUFFIX: &str = "__ctl";

pub fn lower_ctrl(m: &mut Module, _cx: &mut PassContext) -> Result<(), PassError> {
    loop {
        let mut changed = false;
        for op in m.walk_all() {
            if m.is_erased(op) || m.kind(op) != OpKind::Apply {
                continue;
            }
            let Some(ch) = chain(m, m.op(op).operands[0]) else { continue };
            let Base::Circ(c) = &ch.base else { continue };
            if ch.controls == 0 {
                continue;
            }
            if m.name(op).dialect != Dialect::Qs {
                return Err(PassError::UnsupportedConstruct(format!(
                    "controlled @{c} in the memory-semantics dialect (convert to value semantics first)"
                )));
            }
            let name = controlled_circuit(m, c, ch.controls)?;
            rewrite_apply(m, op, &name, ch.adjoint)?;
            changed = true;
        }
        if !changed {
            return Ok(());
        }
    }
}

/// Replaces `apply %v(args)` by a call of `callee`, or by an application of
/// its adjoint when `adjoint` is set.
pub(crate) fn rewrite_apply(m: &mut Module, op: OpId, callee: &str, adjoint: bool) -> Result<(), PassError> {
    let d = m.op(op);
    let args = d.operands[1..].to_vec();
    let rtys: Vec<Type> = d.results.iter().map(|r| m.ty(*r).clone()).collect();
    let attrs = d.attrs.clone();
    let f = m.lookup(callee).ok_or_else(|| PassError::UnsupportedConstruct(format!("unknown circuit @{callee}")))?;
    if m.func_result_types(f) != rtys {
        return Err(PassError::UnsupportedConstruct(format!("results of @{callee} do not match its application")));
    }
    let at = InsertPoint::Before(op);
    let spec = if adjoint {
        let g = m.insert_new(
            at,
            OpSpec::new(OpName::new(Dialect::Qs, OpKind::GetVal))
                .attr(names::CALLEE, Attribute::Symbol(callee.to_string()))
                .results([Type::Circ]),
        );
        let gv = m.op(g).results[0];
        let a = m.insert_new(at, OpSpec::new(OpName::new(Dialect::Qs, OpKind::Adj)).operands([gv]).results([Type::Circ]));
        let av = m.op(a).results[0];
        OpSpec::new(OpName::new(Dialect::Qs, OpKind::Apply)).operands(std::iter::once(av).chain(args))
    } else {
        let acc: Vec<Access> =
            m.op(op).accesses.iter().map(|a| Access { operand: a.operand - 1, range: a.range.clone() }).collect();
        OpSpec::new(OpName::new(Dialect::Qs, OpKind::QCall))
            .operands(args)
            .accesses(acc)
            .attr(names::CALLEE, Attribute::Symbol(callee.to_string()))
    };
    let n = m.insert_new(at, spec.attrs(attrs).results(rtys));
    let vals = m.op(n).results.clone();
    replace_op(m, op, &vals);
    Ok(())
}

/// Name of `c` under `k` controls, generating missing circuits.
pub fn controlled_circuit(m: &mut Module, c: &str, k: u32) -> Result<String, PassError> {
    let mut name = c.to_string();
    for _ in 0..k {
        let next = format!("{name}{CTL_SUFFIX}");
        if m.lookup(&next).is_none() {
            let def =
                m.lookup(&name).ok_or_else(|| PassError::UnsupportedConstruct(format!("unknown circuit @{name}")))?;
            generate(m, def, &next)?;
        }
        name = next;
    }
    Ok(name)
}

/// Argument name not used by the other arguments of `b`.
pub(crate) fn fresh_arg_name(m: &Module, b: BlockId, base: &str) -> String {
    let taken: Vec<String> = m.block(b).args.iter().filter_map(|a| m.value(*a).name.clone()).collect();
    let mut name = base.to_string();
    let mut i = 0;
    while taken.contains(&name) {
        i += 1;
        name = format!("{base}{i}");
    }
    name
}

/// Clone of a circuit definition under a new name, without entry markers.
pub(crate) fn clone_circuit(m: &mut Module, def: OpId, name: &str) -> Result<OpId, PassError> {
    let sym = m.op(def).sym_name().unwrap_or_default().to_string();
    if m.kind(def) != OpKind::Circ || m.name(def).dialect != Dialect::Qs {
        return Err(PassError::UnsupportedConstruct(format!("@{sym} is not a value-semantics circuit")));
    }
    circuit_is_unitary(m, &sym).map_err(PassError::NonUnitaryCircuit)?;
    if m.region_blocks(m.op(def).regions[0]).len() != 1 {
        return Err(PassError::UnsupportedConstruct(format!("@{sym} has several blocks")));
    }
    let new = m.clone_op(def, &mut Default::default(), InsertPoint::After(def));
    m.set_attr(new, names::SYM_NAME, Attribute::Str(name.to_string()));
    for a in [names::ENTRY, names::ADJOINT_OF, names::CONTROLLED_OF] {
        m.remove_attr(new, a);
    }
    Ok(new)
}

fn generate(m: &mut Module, def: OpId, name: &str) -> Result<(), PassError> {
    let new = clone_circuit(m, def, name)?;
    let entry = m.region_entry(new, 0);
    let arg_name = fresh_arg_name(m, entry, "ctl");
    let c = m.insert_block_arg(entry, 0, Type::QState);
    m.set_value_name(c, Some(arg_name));
    let end = thread(m, entry, c)?;
    let ret = m.terminator(entry).unwrap();
    let mut outs = m.op(ret).operands.clone();
    let pos = outs.iter().take_while(|v| !m.ty(**v).is_quantum_data()).count();
    outs.insert(pos, end);
    m.set_operands(ret, outs);
    let mut rtys = m.func_result_types(new);
    rtys.insert(pos, Type::QState);
    m.set_func_result_types(new, rtys);
    Ok(())
}

fn controlled(m: &Module, op: OpId) -> bool {
    if is_marked(m, op) {
        return false;
    }
    match m.kind(op) {
        OpKind::Apply | OpKind::QCall | OpKind::Meas => true,
        OpKind::Gate(_) => is_gate_application(m, op),
        OpKind::For | OpKind::If => m.nested_ops(op).iter().any(|o| controlled(m, *o)),
        _ => false,
    }
}

fn push_operand(m: &mut Module, op: OpId, v: ValueId) {
    let mut ops = m.op(op).operands.clone();
    ops.push(v);
    m.set_operands(op, ops);
}

/// Threads control state `c` through the ops of `b`; returns the final state.
fn thread(m: &mut Module, b: BlockId, c: ValueId) -> Result<ValueId, PassError> {
    let mut cur = c;
    for op in m.block_ops(b) {
        if !controlled(m, op) {
            continue;
        }
        let at = InsertPoint::Before(op);
        match m.kind(op) {
            OpKind::Meas => {
                return Err(PassError::NonUnitaryCircuit("measurement under control".into()));
            }
            OpKind::Gate(g) => {
                let vt = gate_value_type(g);
                let mut gspec = OpSpec::new(OpName::new(Dialect::Qs, OpKind::Gate(g))).results([vt.clone()]);
                match gate_angle(m, op) {
                    Some(Angle::Static(a)) => gspec = gspec.attr(names::ANGLE, Attribute::Float(a)),
                    Some(Angle::Dyn(v)) => gspec = gspec.operands([v]),
                    None => {}
                }
                let gv = m.insert_new(at, gspec);
                let gv = m.op(gv).results[0];
                let targets = gate_targets(m, op).to_vec();
                let cur_next = apply_controlled(m, op, gv, cur, &targets, 2)?;
                cur = cur_next;
            }
            OpKind::Apply => {
                let opv = m.op(op).operands[0];
                let args = m.op(op).operands[1..].to_vec();
                cur = apply_controlled(m, op, opv, cur, &args, 1)?;
            }
            OpKind::QCall => {
                let callee = m.op(op).callee().unwrap_or_default().to_string();
                let name = controlled_circuit(m, &callee, 1)?;
                let d = m.op(op);
                let pos = d.results.iter().take_while(|r| !m.ty(**r).is_quantum_data()).count();
                let mut rtys: Vec<Type> = d.results.iter().map(|r| m.ty(*r).clone()).collect();
                rtys.insert(pos, Type::QState);
                let acc: Vec<Access> =
                    d.accesses.iter().map(|a| Access { operand: a.operand + 1, range: a.range.clone() }).collect();
                let spec = OpSpec::new(OpName::new(Dialect::Qs, OpKind::QCall))
                    .operands(std::iter::once(cur).chain(d.operands.iter().copied()))
                    .accesses(acc)
                    .attrs(d.attrs.clone())
                    .attr(names::CALLEE, Attribute::Symbol(name))
                    .results(rtys);
                let n = m.insert_new(at, spec);
                let mut outs = m.op(n).results.clone();
                cur = outs.remove(pos);
                replace_op(m, op, &outs);
            }
            OpKind::For => {
                let body = m.region_entry(op, 0);
                let arg = m.add_block_arg(body, Type::QState);
                let end = thread(m, body, arg)?;
                let y = m.terminator(body).unwrap();
                push_operand(m, y, end);
                push_operand(m, op, cur);
                cur = m.append_result(op, Type::QState);
            }
            OpKind::If => {
                for r in 0..2 {
                    let blk = m.region_entry(op, r);
                    let end = thread(m, blk, cur)?;
                    let y = m.terminator(blk).unwrap();
                    push_operand(m, y, end);
                }
                cur = m.append_result(op, Type::QState);
            }
            _ => {}
        }
    }
    Ok(cur)
}

/// `apply (ctrl(1) v)(c, args)` in place of `op`; `shift` moves accesses
/// from `op`'s operand positions to the new ones.
fn apply_controlled(
    m: &mut Module,
    op: OpId,
    v: ValueId,
    c: ValueId,
    args: &[ValueId],
    shift: usize,
) -> Result<ValueId, PassError> {
    let at = InsertPoint::Before(op);
    let ty = ctrl_type(m.ty(v), 1);
    let cv = m.insert_new(
        at,
        OpSpec::new(OpName::new(Dialect::Qs, OpKind::Ctrl))
            .operands([v])
            .attr(names::COUNT, Attribute::Int(1))
            .results([ty]),
    );
    let cv = m.op(cv).results[0];
    let d = m.op(op);
    let mut rtys = vec![Type::QState];
    rtys.extend(d.results.iter().map(|r| m.ty(*r).clone()));
    let acc: Vec<Access> = d.accesses.iter().map(|a| Access { operand: a.operand + shift, range: a.range.clone() }).collect();
    let mut attrs = d.attrs.clone();
    attrs.remove(names::ANGLE);
    let n = m.insert_new(
        at,
        OpSpec::new(OpName::new(Dialect::Qs, OpKind::Apply))
            .operands([cv, c].into_iter().chain(args.iter().copied()))
            .accesses(acc)
            .attrs(attrs)
            .results(rtys),
    );
    let mut outs = m.op(n).results.clone();
    let next = outs.remove(0);
    replace_op(m, op, &outs);
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{parse, print_module};

    fn lower(src: &str) -> Module {
        let mut m = parse(src).unwrap();
        lower_ctrl(&mut m, &mut PassContext::default()).unwrap();
        assert_eq!(crate::ir::verify(&m), vec![], "{}", print_module(&m));
        m
    }

    const ADDER: &str = "
        qs.circ @U(%q: !qs.qstate, %t: f64) -> !qs.qstate {
          %1 = qs.H %q {compute}
          %2 = qs.Rz(%t) %1
          %3 = qs.H %2 {uncompute}
          return %3
        }";

    #[test]
    fn marked_sections_stay_uncontrolled() {
        let m = lower(&format!(
            "{ADDER}
            qs.circ @main(%c: !qs.qstate, %q: !qs.qstate, %t: f64) -> (!qs.qstate, !qs.qstate) {{
              %u = qs.getval @U : !q.circ
              %cu = qs.ctrl(1) %u : !q.cop<1, !q.circ>
              %1, %2 = qs.apply %cu(%c, %q, %t)
              return %1, %2
            }}"
        ));
        let text = print_module(&m);
        assert!(text.contains("qs.call @U__ctl"), "{text}");
        let ctl = m.lookup("U__ctl").unwrap();
        assert_eq!(m.func_arg_types(ctl)[0], Type::QState);
        let applies = m.nested_ops(ctl).into_iter().filter(|o| m.kind(*o) == OpKind::Apply).count();
        assert_eq!(applies, 1, "{text}");
        let bare_h = m.nested_ops(ctl).into_iter().filter(|o| m.kind(*o) == OpKind::Gate(crate::ir::Gate::H)).count();
        assert_eq!(bare_h, 2, "{text}");
    }

    #[test]
    fn nested_controls_add_arguments() {
        let m = lower(&format!(
            "{ADDER}
            qs.circ @main(%a: !qs.qstate, %b: !qs.qstate, %q: !qs.qstate, %t: f64) -> (!qs.qstate, !qs.qstate, !qs.qstate) {{
              %u = qs.getval @U : !q.circ
              %cu = qs.ctrl(1) %u : !q.cop<1, !q.circ>
              %ccu = qs.ctrl(1) %cu : !q.cop<2, !q.circ>
              %1, %2, %3 = qs.apply %ccu(%a, %b, %q, %t)
              return %1, %2, %3
            }}"
        ));
        let cc = m.lookup("U__ctl__ctl").unwrap();
        assert_eq!(m.func_arg_types(cc).len(), 4);
    }

    #[test]
    fn loops_thread_the_control() {
        let m = lower(
            "qs.circ @V(%r: !qs.rstate<2>) -> !qs.rstate<2> {
               %f = scf.for %i = 0 to 2 iter_args(%x = %r) -> (!qs.rstate<2>) {
                 %q, %rest = qs.extract %x[%i]
                 %q1 = qs.X %q
                 %y = qs.combine %rest[%i], %q1
                 scf.yield %y
               }
               return %f
             }
             qs.circ @main(%c: !qs.qstate, %r: !qs.rstate<2>) -> (!qs.qstate, !qs.rstate<2>) {
               %v = qs.getval @V : !q.circ
               %cv = qs.ctrl(1) %v : !q.cop<1, !q.circ>
               %1, %2 = qs.apply %cv(%c, %r)
               return %1, %2
             }",
        );
        let text = print_module(&m);
        assert!(text.contains("-> (!qs.rstate<2>, !qs.qstate)"), "{text}");
    }

    #[test]
    fn measurement_is_rejected() {
        let mut m = crate::text::parse_unverified(
            "qs.circ @M(%q: !qs.qstate) -> !qs.qstate { %b, %q1 = qs.meas %q return %q1 }
             qs.circ @main(%c: !qs.qstate, %q: !qs.qstate) -> (!qs.qstate, !qs.qstate) {
               %v = qs.getval @M : !q.circ
               %cv = qs.ctrl(1) %v : !q.cop<1, !q.circ>
               %1, %2 = qs.apply %cv(%c, %q)
               return %1, %2
             }",
        )
        .unwrap()
        .module;
        let r = lower_ctrl(&mut m, &mut PassContext::default());
        assert!(matches!(r, Err(PassError::NonUnitaryCircuit(_))), "{r:?}");
    }
}
