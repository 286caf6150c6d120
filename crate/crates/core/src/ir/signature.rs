//! Per-op operand/result signature rules and the checked `build_op` entry.

use super::attr::{names, Attribute, Attrs};
use super::error::IrError;
use super::module::{Access, InsertPoint, Module, OpId, OpSpec, Successor, ValueId};
use super::ops::{CmpPred, Dialect, OpKind, OpName};
use super::types::Type;
use super::view::loop_bound_operand_count;

/// Shape of an op instance as seen by the signature checker.
pub struct Shape<'a> {
    pub name: OpName,
    pub operands: &'a [Type],
    pub results: &'a [Type],
    pub attrs: &'a Attrs,
    pub accesses: &'a [Access],
    pub successors: usize,
    pub regions: usize,
}

fn arity(name: OpName, msg: impl Into<String>) -> IrError {
    IrError::ArityMismatch { op: name.to_string(), msg: msg.into() }
}

fn mismatch(name: OpName, msg: impl std::fmt::Display) -> IrError {
    IrError::TypeMismatch(format!("`{name}`: {msg}"))
}

fn count(name: OpName, what: &str, got: usize, lo: usize, hi: usize) -> Result<(), IrError> {
    if got < lo || got > hi {
        let want = if lo == hi {
            lo.to_string()
        } else if hi == usize::MAX {
            format!("at least {lo}")
        } else {
            format!("{lo}..={hi}")
        };
        return Err(arity(name, format!("expected {want} {what}, got {got}")));
    }
    Ok(())
}

fn attr_str<'a>(attrs: &'a Attrs, key: &str) -> Option<&'a str> {
    attrs.get(key).and_then(Attribute::as_str)
}

/// Checks one op instance against its signature rules.
pub fn check_shape(s: &Shape) -> Result<(), IrError> {
    let n = s.name;
    let ops = s.operands;
    let res = s.results;
    let q = n.dialect == Dialect::Q;

    for a in s.accesses {
        let Some(t) = ops.get(a.operand) else {
            return Err(arity(n, format!("register access on missing operand {}", a.operand)));
        };
        if !t.is_register() {
            return Err(mismatch(n, format!("register access on non-register operand of type `{t}`")));
        }
    }
    let expect_regions = match n.kind {
        OpKind::Func | OpKind::Circ | OpKind::For => 1,
        OpKind::If => 2,
        _ => 0,
    };
    count(n, "regions", s.regions, expect_regions, expect_regions)?;
    let expect_succ = match n.kind {
        OpKind::Br => 1,
        OpKind::CondBr => 2,
        _ => 0,
    };
    count(n, "successors", s.successors, expect_succ, expect_succ)?;

    match n.kind {
        OpKind::Func | OpKind::Circ => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 0, 0)?;
            if attr_str(s.attrs, names::SYM_NAME).is_none() {
                return Err(IrError::InvalidAttribute(format!("`{n}` requires a symbol name")));
            }
        }
        OpKind::Return | OpKind::Yield | OpKind::Print => count(n, "results", res.len(), 0, 0)?,
        OpKind::Call | OpKind::QCall => {
            if attr_str(s.attrs, names::CALLEE).is_none() {
                return Err(IrError::InvalidAttribute(format!("`{n}` requires a callee")));
            }
        }
        OpKind::Br => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 0, 0)?;
        }
        OpKind::CondBr => {
            count(n, "operands", ops.len(), 1, 1)?;
            count(n, "results", res.len(), 0, 0)?;
            if ops[0] != Type::i1() {
                return Err(mismatch(n, "condition must be i1"));
            }
        }
        OpKind::Constant => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 1, 1)?;
            match (s.attrs.get(names::VALUE), &res[0]) {
                (Some(Attribute::Int(_)), t) if t.is_integer_like() => {}
                (Some(Attribute::Float(_)), Type::F64) => {}
                (Some(_), t) => return Err(mismatch(n, format!("value does not fit result type `{t}`"))),
                (None, _) => return Err(IrError::InvalidAttribute("constant requires a value".into())),
            }
        }
        OpKind::Arith(a) => {
            let nin = if a.is_unary() { 1 } else { 2 };
            count(n, "operands", ops.len(), nin, nin)?;
            count(n, "results", res.len(), 1, 1)?;
            if a.is_cast() {
                use super::ops::ArithOp::*;
                let ok = match a {
                    SIToFP => ops[0].is_integer_like() && res[0] == Type::F64,
                    FPToSI => ops[0] == Type::F64 && res[0].is_integer_like(),
                    _ => ops[0].is_integer_like() && res[0].is_integer_like(),
                };
                if !ok {
                    return Err(mismatch(n, format!("invalid cast `{}` -> `{}`", ops[0], res[0])));
                }
            } else {
                if ops.iter().any(|t| *t != res[0]) {
                    return Err(mismatch(n, "operands and result must share one type"));
                }
                let ok = if a.is_float() { res[0] == Type::F64 } else { res[0].is_integer_like() };
                if !ok {
                    return Err(mismatch(n, format!("unsupported operand type `{}`", res[0])));
                }
            }
        }
        OpKind::CmpI | OpKind::CmpF => {
            count(n, "operands", ops.len(), 2, 2)?;
            count(n, "results", res.len(), 1, 1)?;
            if ops[0] != ops[1] || res[0] != Type::i1() {
                return Err(mismatch(n, "compares two values of one type into i1"));
            }
            let float = n.kind == OpKind::CmpF;
            if float != (ops[0] == Type::F64) || (!float && !ops[0].is_integer_like()) {
                return Err(mismatch(n, format!("unsupported operand type `{}`", ops[0])));
            }
            if attr_str(s.attrs, names::PREDICATE).and_then(CmpPred::from_name).is_none() {
                return Err(IrError::InvalidAttribute("missing or unknown comparison predicate".into()));
            }
        }
        OpKind::Select => {
            count(n, "operands", ops.len(), 3, 3)?;
            count(n, "results", res.len(), 1, 1)?;
            if ops[0] != Type::i1() || ops[1] != ops[2] || ops[1] != res[0] {
                return Err(mismatch(n, "expects (i1, T, T) -> T"));
            }
        }
        OpKind::MemAlloc => {
            count(n, "results", res.len(), 1, 1)?;
            let dynamic = !s.attrs.contains_key(names::SIZE);
            count(n, "operands", ops.len(), usize::from(dynamic), usize::from(dynamic))?;
            if !matches!(res[0], Type::MemRef(..)) || (dynamic && !ops[0].is_integer_like()) {
                return Err(mismatch(n, "allocates a memref from an integer size"));
            }
        }
        OpKind::Load => {
            count(n, "operands", ops.len(), 2, 2)?;
            count(n, "results", res.len(), 1, 1)?;
            match &ops[0] {
                Type::MemRef(_, e) if **e == res[0] && ops[1].is_integer_like() => {}
                _ => return Err(mismatch(n, "expects (memref<T>, index) -> T")),
            }
        }
        OpKind::Store => {
            count(n, "operands", ops.len(), 3, 3)?;
            count(n, "results", res.len(), 0, 0)?;
            match &ops[1] {
                Type::MemRef(_, e) if **e == ops[0] && ops[2].is_integer_like() => {}
                _ => return Err(mismatch(n, "expects (T, memref<T>, index)")),
            }
        }
        OpKind::For => {
            let nb = loop_bound_operand_count(s.attrs);
            count(n, "operands", ops.len(), nb, usize::MAX)?;
            if ops[..nb].iter().any(|t| !t.is_integer_like()) {
                return Err(mismatch(n, "loop bounds must be integers"));
            }
            if ops[nb..] != *res {
                return Err(arity(n, "results must match the loop-carried values"));
            }
        }
        OpKind::If => {
            count(n, "operands", ops.len(), 1, 1)?;
            if ops[0] != Type::i1() {
                return Err(mismatch(n, "condition must be i1"));
            }
        }
        OpKind::Alloc => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 1, 1)?;
            let want = if q { Type::Qubit } else { Type::QState };
            if res[0] != want {
                return Err(mismatch(n, format!("result must be `{want}`")));
            }
        }
        OpKind::AllocReg => {
            count(n, "results", res.len(), 1, 1)?;
            let stat = s.attrs.get(names::SIZE).and_then(Attribute::as_int);
            let nops = usize::from(stat.is_none());
            count(n, "operands", ops.len(), nops, nops)?;
            if nops == 1 && !ops[0].is_integer_like() {
                return Err(mismatch(n, "register size must be an integer"));
            }
            let size = match (&res[0], q) {
                (Type::Qureg(sz), true) | (Type::RState(sz), false) => *sz,
                _ => return Err(mismatch(n, "result must be a register")),
            };
            if let (Some(a), Some(b)) = (stat, size) {
                if a < 1 || a as u64 != b {
                    return Err(mismatch(n, "register size attribute disagrees with result type"));
                }
            }
        }
        OpKind::Free | OpKind::FreeReg => {
            count(n, "operands", ops.len(), 1, 1)?;
            count(n, "results", res.len(), 0, 0)?;
            let ok = match (n.kind, q) {
                (OpKind::Free, true) => ops[0] == Type::Qubit,
                (OpKind::Free, false) => ops[0] == Type::QState,
                (_, true) => matches!(ops[0], Type::Qureg(_)),
                (_, false) => matches!(ops[0], Type::RState(_)),
            };
            if !ok || !s.accesses.is_empty() {
                return Err(mismatch(n, format!("cannot free `{}`", ops[0])));
            }
        }
        OpKind::Meas => {
            count(n, "operands", ops.len(), 1, 1)?;
            let single = matches!(ops[0], Type::Qubit | Type::QState)
                || (s.accesses.len() == 1 && s.accesses[0].range.is_single());
            let bit = if single { Type::i1() } else { Type::BitVec(ops[0].register_size()) };
            if q {
                count(n, "results", res.len(), 1, 1)?;
                if !ops[0].is_quantum_ref() || !same_shape(&res[0], &bit) {
                    return Err(mismatch(n, "measures a qubit or register reference"));
                }
            } else {
                count(n, "results", res.len(), 2, 2)?;
                if !ops[0].is_quantum_state() || !s.accesses.is_empty() {
                    return Err(mismatch(n, "measures a state value"));
                }
                if !same_shape(&res[0], &bit) || res[1] != ops[0] {
                    return Err(mismatch(n, "results are (outcome, post-measurement state)"));
                }
            }
        }
        OpKind::Extract => {
            count(n, "operands", ops.len(), 1, 1)?;
            let k = s.accesses.len();
            count(n, "results", res.len(), k + 1, k + 1)?;
            if !matches!(ops[0], Type::RState(_)) || res[k] != ops[0] {
                return Err(mismatch(n, "extracts from a register state"));
            }
            if res[..k].iter().any(|t| *t != Type::QState) {
                return Err(mismatch(n, "extracted values are qubit states"));
            }
            if s.accesses.iter().any(|a| a.operand != 0 || !a.range.is_single()) {
                return Err(mismatch(n, "extract takes single indices on the register"));
            }
        }
        OpKind::Combine => {
            count(n, "operands", ops.len(), 1, usize::MAX)?;
            count(n, "results", res.len(), 1, 1)?;
            let k = ops.len() - 1;
            count(n, "indices", s.accesses.len(), k, k)?;
            if !matches!(ops[0], Type::RState(_)) || res[0] != ops[0] {
                return Err(mismatch(n, "combines into a register state"));
            }
            if ops[1..].iter().any(|t| *t != Type::QState) {
                return Err(mismatch(n, "combined values are qubit states"));
            }
            if s.accesses.iter().any(|a| a.operand != 0 || !a.range.is_single()) {
                return Err(mismatch(n, "combine takes single indices on the register"));
            }
        }
        OpKind::Gate(g) => {
            let static_angle = s.attrs.get(names::ANGLE).and_then(Attribute::as_float).is_some();
            let dyn_angle = g.is_rotation() && !static_angle;
            if !g.is_rotation() && s.attrs.contains_key(names::ANGLE) {
                return Err(IrError::InvalidAttribute(format!("`{n}` takes no angle")));
            }
            let extra = usize::from(dyn_angle);
            if dyn_angle && ops.last() != Some(&Type::F64) {
                return Err(arity(n, "rotation requires an angle"));
            }
            let targets = &ops[..ops.len().saturating_sub(extra)];
            if targets.is_empty() && res.len() == 1 && res[0].is_op_value() {
                // gate value form
                let want = super::view::gate_value_type(g);
                if res[0] != want {
                    return Err(mismatch(n, format!("gate value has type `{want}`")));
                }
                return Ok(());
            }
            count(n, "quantum operands", targets.len(), g.arity(), g.arity())?;
            for (i, t) in targets.iter().enumerate() {
                let acc: Vec<_> = s.accesses.iter().filter(|a| a.operand == i).collect();
                let ok = if q {
                    match t {
                        Type::Qubit => acc.is_empty(),
                        Type::Qureg(_) => acc.len() == 1 && (acc[0].range.is_single() || g.broadcastable())
                            || acc.is_empty() && g.broadcastable() && g.arity() == 1,
                        _ => false,
                    }
                } else {
                    match t {
                        Type::QState => acc.is_empty(),
                        Type::RState(_) => acc.is_empty() && g.broadcastable() && g.arity() == 1,
                        _ => false,
                    }
                };
                if !ok {
                    return Err(mismatch(n, format!("invalid target of type `{t}`")));
                }
            }
            if q {
                count(n, "results", res.len(), 0, 0)?;
            } else {
                count(n, "results", res.len(), g.arity(), g.arity())?;
                if res != targets {
                    return Err(mismatch(n, "results must mirror the target states"));
                }
            }
        }
        OpKind::Adj => {
            count(n, "operands", ops.len(), 1, 1)?;
            count(n, "results", res.len(), 1, 1)?;
            if !ops[0].is_op_value() || res[0] != ops[0] {
                return Err(mismatch(n, "adjoint maps an operation value to the same type"));
            }
        }
        OpKind::Ctrl => {
            count(n, "operands", ops.len(), 1, 1)?;
            count(n, "results", res.len(), 1, 1)?;
            let c = s.attrs.get(names::COUNT).and_then(Attribute::as_int).unwrap_or(0);
            if c < 1 {
                return Err(IrError::InvalidAttribute("ctrl count must be >= 1".into()));
            }
            if !ops[0].is_op_value() || res[0] != ctrl_type(&ops[0], c as u32) {
                return Err(mismatch(n, "result must be the controlled operation type"));
            }
        }
        OpKind::GetVal => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 1, 1)?;
            if attr_str(s.attrs, names::CALLEE).is_none() || !res[0].is_op_value() {
                return Err(mismatch(n, "yields an operation value for a symbol"));
            }
        }
        OpKind::Apply => {
            count(n, "operands", ops.len(), 1, usize::MAX)?;
            if !ops[0].is_op_value() {
                return Err(mismatch(n, "first operand must be an operation value"));
            }
            let qops: Vec<&Type> = ops[1..].iter().filter(|t| t.is_quantum_data()).collect();
            let ctl = ops[0].num_controls() as usize;
            if qops.len() < ctl {
                return Err(arity(n, format!("controlled operation needs {ctl} control operands")));
            }
            if ops[1..=ctl].iter().any(|t| !t.is_quantum_data()) {
                return Err(mismatch(n, "control operands must come first"));
            }
            if !q {
                let qres: Vec<&Type> = res.iter().filter(|t| t.is_quantum_data()).collect();
                if qres != qops {
                    return Err(arity(n, "results must mirror the quantum operands"));
                }
            } else if res.iter().any(Type::is_quantum_data) {
                return Err(mismatch(n, "memory-semantics apply has no quantum results"));
            }
        }
        OpKind::RcInc => {
            count(n, "operands", ops.len(), 0, 1)?;
            count(n, "results", res.len(), 0, 0)?;
            if attr_str(s.attrs, names::GATE).is_none() {
                return Err(IrError::InvalidAttribute("rc.inc requires a gate class".into()));
            }
            if ops.len() == 1 && !ops[0].is_integer_like() {
                return Err(mismatch(n, "increment amount must be an integer"));
            }
        }
        OpKind::RcUnknown => {
            count(n, "operands", ops.len(), 0, 0)?;
            count(n, "results", res.len(), 1, 1)?;
        }
    }
    Ok(())
}

/// `BitVec` sizes may be unknown on either side.
fn same_shape(a: &Type, b: &Type) -> bool {
    match (a, b) {
        (Type::BitVec(x), Type::BitVec(y)) => x.is_none() || y.is_none() || x == y,
        _ => a == b,
    }
}

/// Result type of `ctrl(count)` on an operation type; chained counts sum.
pub fn ctrl_type(base: &Type, count: u32) -> Type {
    match base {
        Type::COp(n, inner) => Type::COp(n + count, inner.clone()),
        other => Type::COp(count, Box::new(other.clone())),
    }
}

/// Creates an op at `at` after checking its signature.
#[allow(clippy::too_many_arguments)]
pub fn build_op(
    m: &mut Module,
    at: InsertPoint,
    name: &str,
    operands: Vec<ValueId>,
    result_types: Vec<Type>,
    attrs: Attrs,
    num_regions: usize,
) -> Result<OpId, IrError> {
    let name = OpName::parse(name)?;
    build(m, at, OpSpec { name, operands, accesses: Vec::new(), result_types, attrs, successors: Vec::new(), num_regions })
}

/// Checked creation from a full spec.
pub fn build(m: &mut Module, at: InsertPoint, spec: OpSpec) -> Result<OpId, IrError> {
    check_spec(m, &spec)?;
    Ok(m.insert_new(at, spec))
}

pub fn check_spec(m: &Module, spec: &OpSpec) -> Result<(), IrError> {
    let n = m.num_values();
    let mut used: Vec<ValueId> = spec.operands.clone();
    used.extend(spec.accesses.iter().flat_map(|a| a.range.dyn_values().collect::<Vec<_>>()));
    used.extend(spec.successors.iter().flat_map(|s: &Successor| s.args.clone()));
    if let Some(v) = used.iter().find(|v| v.index() >= n) {
        return Err(IrError::UnknownValue(*v));
    }
    let tys: Vec<Type> = spec.operands.iter().map(|v| m.ty(*v).clone()).collect();
    check_shape(&Shape {
        name: spec.name,
        operands: &tys,
        results: &spec.result_types,
        attrs: &spec.attrs,
        accesses: &spec.accesses,
        successors: spec.successors.len(),
        regions: spec.num_regions,
    })
}
