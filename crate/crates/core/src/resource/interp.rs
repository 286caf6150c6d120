//! Tree-walking interpreter.
//!
//! Runs the classical core directly. Quantum operations of either dialect are
//! forwarded to a [`QuantumBackend`]; resource counters (`rc.inc`) are kept by
//! the interpreter itself. A measurement outcome may be `Unknown`; an `scf.if`
//! on an unknown condition executes both branches and keeps the larger count
//! for every counter.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use thiserror::Error;

use crate::ir::view::{gate_angle, is_gate_value, is_marked, loop_bounds, Angle, Bound};
use crate::ir::{
    names, ArithOp, Attribute, BlockId, CmpPred, Dialect, Gate, Index, Module, OpId, OpKind, RegAccess, RegionId,
    ValueId,
};

pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000_000;

/// Environment variable overriding the instruction budget.
pub const STEP_LIMIT_ENV: &str = "QIRO_STEP_LIMIT";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Trap {
    #[error("entry symbol @{0} not found")]
    MissingEntry(String),
    #[error("out-of-bounds access: index {index} into buffer of length {len}")]
    OutOfBounds { index: i64, len: usize },
    #[error("division by zero")]
    DivisionByZero,
    #[error("instruction budget of {0} steps exceeded")]
    StepLimitExceeded(u64),
    #[error("branch on a measurement-dependent value in unstructured control flow")]
    UnknownBranch,
    #[error("loop bound depends on a measurement outcome")]
    UnknownBound,
    #[error("argument mismatch: {0}")]
    ArgMismatch(String),
    #[error("unsupported at run time: {0}")]
    Unsupported(String),
    #[error("measurement inside an adjoint circuit")]
    MeasureInAdjoint,
}

/// Operation value at run time.
#[derive(Clone, Debug, PartialEq)]
pub struct OpVal {
    pub base: OpBase,
    pub adjoint: bool,
    pub controls: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum OpBase {
    Gate(Gate, Option<f64>),
    Circ(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Val {
    Int(i64),
    Float(f64),
    /// Measurement-dependent value.
    Unknown,
    Mem(usize),
    Qubit(u64),
    Reg(Rc<Vec<u64>>),
    Op(Rc<OpVal>),
    Undef,
}

impl Val {
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Val::Int(v) => Some(*v),
            _ => None,
        }
    }
}

impl std::fmt::Display for Val {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Val::Int(v) => write!(f, "{v}"),
            Val::Float(v) => write!(f, "{v}"),
            Val::Unknown => write!(f, "?"),
            Val::Mem(i) => write!(f, "<memref {i}>"),
            Val::Qubit(q) => write!(f, "<qubit {q}>"),
            Val::Reg(r) => write!(f, "<register of {}>", r.len()),
            Val::Op(_) => write!(f, "<operation>"),
            Val::Undef => write!(f, "<undef>"),
        }
    }
}

/// One executed gate with its full control set.
#[derive(Clone, Debug, PartialEq)]
pub struct GateApp {
    pub gate: Gate,
    pub angle: Option<f64>,
    pub adjoint: bool,
    pub controls: Vec<u64>,
    pub targets: Vec<u64>,
}

impl GateApp {
    pub fn inverse(mut self) -> GateApp {
        if self.gate.is_rotation() {
            self.angle = self.angle.map(|a| -a);
        } else if !self.gate.is_hermitian() {
            self.adjoint = !self.adjoint;
        }
        self
    }
}

pub trait QuantumBackend {
    fn alloc(&mut self) -> Result<u64, Trap>;
    fn free(&mut self, q: u64) -> Result<(), Trap>;
    fn gate(&mut self, g: GateApp) -> Result<(), Trap>;
    fn measure(&mut self, q: u64) -> Result<Val, Trap>;
}

/// Backend for purely classical programs.
#[derive(Default, Debug)]
pub struct NoQuantum;

impl QuantumBackend for NoQuantum {
    fn alloc(&mut self) -> Result<u64, Trap> {
        Err(Trap::Unsupported("quantum allocation in a classical program".into()))
    }
    fn free(&mut self, _: u64) -> Result<(), Trap> {
        Err(Trap::Unsupported("quantum deallocation in a classical program".into()))
    }
    fn gate(&mut self, g: GateApp) -> Result<(), Trap> {
        Err(Trap::Unsupported(format!("quantum gate {} in a classical program", g.gate.name())))
    }
    fn measure(&mut self, _: u64) -> Result<Val, Trap> {
        Err(Trap::Unsupported("measurement in a classical program".into()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub returns: Vec<Val>,
    pub counters: BTreeMap<String, u64>,
    pub printed: Vec<String>,
    pub steps: u64,
    /// Counters that hit the 64-bit ceiling.
    pub saturated: Vec<String>,
}

enum Flow {
    Next,
    Branch(BlockId, Vec<Val>),
    Return(Vec<Val>),
    Yield(Vec<Val>),
}

pub struct Interpreter<'m, B> {
    m: &'m Module,
    pub backend: B,
    symbols: HashMap<String, OpId>,
    env: Vec<Val>,
    mem: Vec<Vec<Val>>,
    counters: BTreeMap<String, u64>,
    saturated: Vec<String>,
    printed: Vec<String>,
    steps: u64,
    limit: u64,
    active: HashMap<OpId, u32>,
    body_values: HashMap<OpId, Vec<ValueId>>,
    /// Gate buffers of enclosing adjoint applications.
    recording: Vec<(Vec<GateApp>, Vec<u64>)>,
}

/// Step limit from the environment, else the default.
pub fn step_limit_from_env() -> u64 {
    std::env::var(STEP_LIMIT_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_STEP_LIMIT)
}

/// Runs `entry` of a classical (or resource-converted) module.
pub fn run(m: &Module, entry: &str, args: Vec<Val>) -> Result<Outcome, Trap> {
    Interpreter::new(m, NoQuantum).run(entry, args)
}

type R<T> = Result<T, Trap>;

impl<'m, B: QuantumBackend> Interpreter<'m, B> {
    pub fn new(m: &'m Module, backend: B) -> Self {
        Interpreter {
            m,
            backend,
            symbols: m.symbols(),
            env: vec![Val::Undef; m.num_values()],
            mem: Vec::new(),
            counters: BTreeMap::new(),
            saturated: Vec::new(),
            printed: Vec::new(),
            steps: 0,
            limit: step_limit_from_env(),
            active: HashMap::new(),
            body_values: HashMap::new(),
            recording: Vec::new(),
        }
    }

    pub fn with_step_limit(mut self, limit: u64) -> Self {
        self.limit = limit;
        self
    }

    pub fn run(self, entry: &str, args: Vec<Val>) -> R<Outcome> {
        self.run_with_backend(entry, args).map(|(o, _)| o)
    }

    /// Like [`Interpreter::run`], also handing back the backend.
    pub fn run_with_backend(mut self, entry: &str, args: Vec<Val>) -> R<(Outcome, B)> {
        let returns = self.call(entry, args, &Rc::new(Vec::new()))?;
        let out = Outcome {
            returns,
            counters: self.counters,
            printed: self.printed,
            steps: self.steps,
            saturated: self.saturated,
        };
        Ok((out, self.backend))
    }

    fn get(&self, v: ValueId) -> &Val {
        &self.env[v.index()]
    }

    fn set(&mut self, v: ValueId, x: Val) {
        self.env[v.index()] = x;
    }

    fn int(&self, v: ValueId) -> R<Option<i64>> {
        match self.get(v) {
            Val::Int(i) => Ok(Some(*i)),
            Val::Unknown => Ok(None),
            other => Err(Trap::Unsupported(format!("expected an integer, found {other}"))),
        }
    }

    fn float(&self, v: ValueId) -> R<Option<f64>> {
        match self.get(v) {
            Val::Float(f) => Ok(Some(*f)),
            Val::Unknown => Ok(None),
            other => Err(Trap::Unsupported(format!("expected a float, found {other}"))),
        }
    }

    fn tick(&mut self) -> R<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(Trap::StepLimitExceeded(self.limit));
        }
        Ok(())
    }

    fn values_of(&mut self, f: OpId) -> Vec<ValueId> {
        if let Some(v) = self.body_values.get(&f) {
            return v.clone();
        }
        let m = self.m;
        let mut out = Vec::new();
        for &r in &m.op(f).regions {
            for &b in m.region_blocks(r) {
                out.extend(m.block(b).args.iter().copied());
            }
        }
        for op in m.nested_ops(f) {
            out.extend(m.op(op).results.iter().copied());
            for &r in &m.op(op).regions {
                for &b in m.region_blocks(r) {
                    out.extend(m.block(b).args.iter().copied());
                }
            }
        }
        self.body_values.insert(f, out.clone());
        out
    }

    /// Calls a symbol. `controls` are added to every quantum operation not
    /// marked as compute/uncompute.
    fn call(&mut self, sym: &str, args: Vec<Val>, controls: &Rc<Vec<u64>>) -> R<Vec<Val>> {
        let Some(&f) = self.symbols.get(sym) else {
            return Err(Trap::MissingEntry(sym.to_string()));
        };
        let m = self.m;
        let entry = m.region_entry(f, 0);
        let params = m.block(entry).args.clone();
        if params.len() != args.len() {
            return Err(Trap::ArgMismatch(format!("@{sym} takes {} arguments, got {}", params.len(), args.len())));
        }
        let depth = self.active.entry(f).or_insert(0);
        *depth += 1;
        let saved = if *depth > 1 {
            let vals = self.values_of(f);
            Some(vals.iter().map(|v| (*v, self.env[v.index()].clone())).collect::<Vec<_>>())
        } else {
            None
        };
        let r = m.op(f).regions[0];
        let res = self.region(r, args, controls);
        if let Some(saved) = saved {
            for (v, x) in saved {
                self.env[v.index()] = x;
            }
        }
        *self.active.get_mut(&f).unwrap() -= 1;
        match res? {
            Flow::Return(v) | Flow::Yield(v) => Ok(v),
            _ => Ok(Vec::new()),
        }
    }

    fn region(&mut self, r: RegionId, args: Vec<Val>, controls: &Rc<Vec<u64>>) -> R<Flow> {
        let m = self.m;
        let mut block = m.region_blocks(r)[0];
        let mut args = args;
        loop {
            for (a, v) in m.block(block).args.iter().zip(args) {
                self.env[a.index()] = v;
            }
            let mut next = None;
            for &op in &m.block(block).ops {
                match self.op(op, controls)? {
                    Flow::Next => {}
                    Flow::Branch(b, a) => {
                        next = Some((b, a));
                        break;
                    }
                    f => return Ok(f),
                }
            }
            match next {
                Some((b, a)) => {
                    block = b;
                    args = a;
                }
                None => return Ok(Flow::Yield(Vec::new())),
            }
        }
    }

    fn op(&mut self, op: OpId, controls: &Rc<Vec<u64>>) -> R<Flow> {
        self.tick()?;
        let m = self.m;
        let d = m.op(op);
        let ints = |s: &Self| -> R<Vec<Option<i64>>> { d.operands.iter().map(|v| s.int(*v)).collect() };
        match d.kind() {
            OpKind::Constant => {
                let v = match d.attrs.get(names::VALUE) {
                    Some(Attribute::Int(i)) => Val::Int(*i),
                    Some(Attribute::Float(f)) => Val::Float(*f),
                    _ => return Err(Trap::Unsupported("constant without a value".into())),
                };
                self.set(d.results[0], v);
            }
            OpKind::Arith(a) => {
                let v = self.arith(a, op)?;
                self.set(d.results[0], v);
            }
            OpKind::CmpI => {
                let x = ints(self)?;
                let p = pred(op, m)?;
                let v = match (x[0], x[1]) {
                    (Some(a), Some(b)) => Val::Int(p.eval(a, b) as i64),
                    _ => Val::Unknown,
                };
                self.set(d.results[0], v);
            }
            OpKind::CmpF => {
                let p = pred(op, m)?;
                let v = match (self.float(d.operands[0])?, self.float(d.operands[1])?) {
                    (Some(a), Some(b)) => Val::Int(p.eval(a, b) as i64),
                    _ => Val::Unknown,
                };
                self.set(d.results[0], v);
            }
            OpKind::Select => {
                let v = match self.get(d.operands[0]) {
                    Val::Int(0) => self.get(d.operands[2]).clone(),
                    Val::Int(_) => self.get(d.operands[1]).clone(),
                    _ => {
                        let (a, b) = (self.get(d.operands[1]), self.get(d.operands[2]));
                        if a == b {
                            a.clone()
                        } else {
                            Val::Unknown
                        }
                    }
                };
                self.set(d.results[0], v);
            }
            OpKind::MemAlloc => {
                let n = match d.attrs.get(names::SIZE).and_then(Attribute::as_int) {
                    Some(n) => n,
                    None => self.int(d.operands[0])?.ok_or(Trap::UnknownBound)?,
                };
                if n < 0 {
                    return Err(Trap::OutOfBounds { index: n, len: 0 });
                }
                self.mem.push(vec![Val::Int(0); n as usize]);
                self.set(d.results[0], Val::Mem(self.mem.len() - 1));
            }
            OpKind::Load => {
                let (buf, i) = self.cell(d.operands[0], d.operands[1])?;
                let v = self.mem[buf][i].clone();
                self.set(d.results[0], v);
            }
            OpKind::Store => {
                let (buf, i) = self.cell(d.operands[1], d.operands[2])?;
                self.mem[buf][i] = self.get(d.operands[0]).clone();
            }
            OpKind::Print => {
                let s: Vec<String> = d.operands.iter().map(|v| self.get(*v).to_string()).collect();
                self.printed.push(s.join(" "));
            }
            OpKind::Return => return Ok(Flow::Return(self.collect(&d.operands))),
            OpKind::Yield => return Ok(Flow::Yield(self.collect(&d.operands))),
            OpKind::Br => {
                let s = &d.successors[0];
                return Ok(Flow::Branch(s.block, self.collect(&s.args)));
            }
            OpKind::CondBr => {
                let c = self.int(d.operands[0])?.ok_or(Trap::UnknownBranch)?;
                let s = &d.successors[if c != 0 { 0 } else { 1 }];
                return Ok(Flow::Branch(s.block, self.collect(&s.args)));
            }
            OpKind::Call | OpKind::QCall => {
                let callee = d.callee().unwrap_or_default().to_string();
                let args = self.collect(&d.operands);
                let ctl = self.effective(op, controls);
                let res = self.call(&callee, args, &ctl)?;
                self.bind(op, res)?;
            }
            OpKind::For => self.for_loop(op, controls)?,
            OpKind::If => self.if_op(op, controls)?,
            OpKind::RcInc => {
                let amount = match d.operands.first() {
                    Some(v) => self.int(*v)?.ok_or(Trap::UnknownBound)?,
                    None => d.attrs.get(names::VALUE).and_then(Attribute::as_int).unwrap_or(1),
                };
                let class = d.attrs.get(names::GATE).and_then(Attribute::as_str).unwrap_or("?").to_string();
                if amount > 0 {
                    let c = self.counters.entry(class.clone()).or_insert(0);
                    match c.checked_add(amount as u64) {
                        Some(n) => *c = n,
                        None => {
                            *c = u64::MAX;
                            if !self.saturated.contains(&class) {
                                self.saturated.push(class);
                            }
                        }
                    }
                }
            }
            OpKind::RcUnknown => self.set(d.results[0], Val::Unknown),
            OpKind::Func | OpKind::Circ => {}
            _ => self.quantum(op, controls)?,
        }
        Ok(Flow::Next)
    }

    fn collect(&self, vs: &[ValueId]) -> Vec<Val> {
        vs.iter().map(|v| self.get(*v).clone()).collect()
    }

    fn bind(&mut self, op: OpId, vals: Vec<Val>) -> R<()> {
        let results = &self.m.op(op).results;
        if results.len() != vals.len() {
            return Err(Trap::ArgMismatch(format!(
                "`{}` expected {} results, callee produced {}",
                self.m.name(op),
                results.len(),
                vals.len()
            )));
        }
        for (r, v) in results.iter().zip(vals) {
            self.env[r.index()] = v;
        }
        Ok(())
    }

    fn effective(&self, op: OpId, controls: &Rc<Vec<u64>>) -> Rc<Vec<u64>> {
        if !controls.is_empty() && is_marked(self.m, op) {
            Rc::new(Vec::new())
        } else {
            controls.clone()
        }
    }

    fn cell(&self, mem: ValueId, idx: ValueId) -> R<(usize, usize)> {
        let Val::Mem(b) = self.get(mem) else {
            return Err(Trap::Unsupported("memory access on a non-memref value".into()));
        };
        let i = self.int(idx)?.ok_or(Trap::UnknownBound)?;
        let len = self.mem[*b].len();
        if i < 0 || i as usize >= len {
            return Err(Trap::OutOfBounds { index: i, len });
        }
        Ok((*b, i as usize))
    }

    fn arith(&self, a: ArithOp, op: OpId) -> R<Val> {
        use ArithOp::*;
        let d = self.m.op(op);
        if a.is_float() {
            let x: Vec<Option<f64>> = d.operands.iter().map(|v| self.float(*v)).collect::<R<_>>()?;
            if x.iter().any(Option::is_none) {
                return Ok(Val::Unknown);
            }
            let x: Vec<f64> = x.into_iter().flatten().collect();
            return Ok(Val::Float(match a {
                AddF => x[0] + x[1],
                SubF => x[0] - x[1],
                MulF => x[0] * x[1],
                DivF => x[0] / x[1],
                _ => -x[0],
            }));
        }
        match a {
            SIToFP => return Ok(self.int(d.operands[0])?.map_or(Val::Unknown, |i| Val::Float(i as f64))),
            FPToSI => return Ok(self.float(d.operands[0])?.map_or(Val::Unknown, |f| Val::Int(f as i64))),
            IndexCast => return Ok(self.get(d.operands[0]).clone()),
            _ => {}
        }
        let (Some(x), Some(y)) = (self.int(d.operands[0])?, self.int(d.operands[1])?) else {
            return Ok(Val::Unknown);
        };
        let shift = |y: i64| if (0..64).contains(&y) { Some(y as u32) } else { None };
        Ok(Val::Int(match a {
            AddI => x.wrapping_add(y),
            SubI => x.wrapping_sub(y),
            MulI => x.wrapping_mul(y),
            DivI | RemI => {
                if y == 0 {
                    return Err(Trap::DivisionByZero);
                }
                if a == DivI {
                    x.wrapping_div(y)
                } else {
                    x.wrapping_rem(y)
                }
            }
            ShlI => shift(y).map_or(0, |s| x.wrapping_shl(s)),
            ShrI => shift(y).map_or(if x < 0 { -1 } else { 0 }, |s| x >> s),
            AndI => x & y,
            OrI => x | y,
            XorI => x ^ y,
            _ => unreachable!(),
        }))
    }

    fn bound(&self, b: Bound) -> R<i64> {
        match b {
            Bound::Static(v) => Ok(v),
            Bound::Value(v) => self.int(v)?.ok_or(Trap::UnknownBound),
        }
    }

    fn for_loop(&mut self, op: OpId, controls: &Rc<Vec<u64>>) -> R<()> {
        let m = self.m;
        let d = m.op(op);
        let lb = loop_bounds(m, op);
        let (lo, hi, step) = (self.bound(lb.lb)?, self.bound(lb.ub)?, self.bound(lb.step)?);
        if step <= 0 {
            return Err(Trap::Unsupported(format!("loop step {step} must be positive")));
        }
        let mut iters = self.collect(&d.operands[lb.bound_operands..]);
        let r = d.regions[0];
        let mut i = lo;
        while i < hi {
            let mut args = Vec::with_capacity(iters.len() + 1);
            args.push(Val::Int(i));
            args.extend(iters);
            iters = match self.region(r, args, controls)? {
                Flow::Yield(v) => v,
                Flow::Return(_) => return Err(Trap::Unsupported("return inside a loop body".into())),
                _ => unreachable!(),
            };
            i = match i.checked_add(step) {
                Some(n) => n,
                None => break,
            };
        }
        self.bind(op, iters)
    }

    fn if_op(&mut self, op: OpId, controls: &Rc<Vec<u64>>) -> R<()> {
        let d = self.m.op(op);
        let (then, els) = (d.regions[0], d.regions[1]);
        let res = match self.get(d.operands[0]) {
            Val::Int(c) => {
                let r = if *c != 0 { then } else { els };
                match self.region(r, Vec::new(), controls)? {
                    Flow::Yield(v) | Flow::Return(v) => v,
                    _ => unreachable!(),
                }
            }
            Val::Unknown => self.both_branches(then, els, controls)?,
            other => return Err(Trap::Unsupported(format!("branch condition {other}"))),
        };
        self.bind(op, res)
    }

    /// Conservative execution of a measurement-dependent `scf.if`.
    fn both_branches(&mut self, then: RegionId, els: RegionId, controls: &Rc<Vec<u64>>) -> R<Vec<Val>> {
        let (c0, mem0, p0) = (self.counters.clone(), self.mem.clone(), self.printed.len());
        let a = match self.region(then, Vec::new(), controls)? {
            Flow::Yield(v) | Flow::Return(v) => v,
            _ => unreachable!(),
        };
        let (c1, mem1) = (std::mem::replace(&mut self.counters, c0), std::mem::replace(&mut self.mem, mem0));
        self.printed.truncate(p0);
        let b = match self.region(els, Vec::new(), controls)? {
            Flow::Yield(v) | Flow::Return(v) => v,
            _ => unreachable!(),
        };
        for (k, v) in c1 {
            let e = self.counters.entry(k).or_insert(0);
            *e = (*e).max(v);
        }
        for (buf, other) in self.mem.iter_mut().zip(mem1) {
            for (x, y) in buf.iter_mut().zip(other) {
                if *x != y {
                    *x = Val::Unknown;
                }
            }
        }
        Ok(a.into_iter().zip(b).map(|(x, y)| if x == y { x } else { Val::Unknown }).collect())
    }

    // ---- quantum ----------------------------------------------------------

    fn qubits_of(&self, op: OpId, operand: usize) -> R<Vec<u64>> {
        let d = self.m.op(op);
        let v = d.operands[operand];
        match self.get(v) {
            Val::Qubit(q) => Ok(vec![*q]),
            Val::Reg(r) => {
                let accs: Vec<&RegAccess> = d.accesses_of(operand).collect();
                if accs.is_empty() {
                    return Ok(r.to_vec());
                }
                let mut out = Vec::new();
                for a in accs {
                    for i in self.access_indices(a, r.len())? {
                        out.push(r[i]);
                    }
                }
                Ok(out)
            }
            other => Err(Trap::Unsupported(format!("expected a quantum operand, found {other}"))),
        }
    }

    fn index(&self, i: &Index) -> R<i64> {
        match i {
            Index::Static(v) => Ok(*v),
            Index::Dyn(v) => self.int(*v)?.ok_or(Trap::UnknownBound),
        }
    }

    fn access_indices(&self, a: &RegAccess, len: usize) -> R<Vec<usize>> {
        let start = self.index(&a.start)?;
        let check = |i: i64| {
            if i < 0 || i as usize >= len {
                Err(Trap::OutOfBounds { index: i, len })
            } else {
                Ok(i as usize)
            }
        };
        let Some(stop) = &a.stop else { return Ok(vec![check(start)?]) };
        let stop = self.index(stop)?;
        let step = match &a.step {
            Some(s) => self.index(s)?,
            None => 1,
        };
        if step <= 0 {
            return Err(Trap::Unsupported("non-positive register range step".into()));
        }
        let mut out = Vec::new();
        let mut i = start;
        while i < stop {
            out.push(check(i)?);
            i += step;
        }
        Ok(out)
    }

    fn emit(&mut self, g: GateApp) -> R<()> {
        match self.recording.last_mut() {
            Some((buf, _)) => {
                buf.push(g);
                Ok(())
            }
            None => self.backend.gate(g),
        }
    }

    fn free_qubit(&mut self, q: u64) -> R<()> {
        match self.recording.last_mut() {
            Some((_, frees)) => {
                frees.push(q);
                Ok(())
            }
            None => self.backend.free(q),
        }
    }

    fn quantum(&mut self, op: OpId, controls: &Rc<Vec<u64>>) -> R<()> {
        let m = self.m;
        let d = m.op(op);
        let qs = d.name.dialect == Dialect::Qs;
        match d.kind() {
            OpKind::Alloc => {
                let q = self.backend.alloc()?;
                self.set(d.results[0], Val::Qubit(q));
            }
            OpKind::AllocReg => {
                let n = match d.attrs.get(names::SIZE).and_then(Attribute::as_int) {
                    Some(n) => n,
                    None => self.int(d.operands[0])?.ok_or(Trap::UnknownBound)?,
                };
                let mut ids = Vec::with_capacity(n.max(0) as usize);
                for _ in 0..n.max(0) {
                    ids.push(self.backend.alloc()?);
                }
                self.set(d.results[0], Val::Reg(Rc::new(ids)));
            }
            OpKind::Free | OpKind::FreeReg => {
                for q in self.qubits_of(op, 0)? {
                    self.free_qubit(q)?;
                }
            }
            OpKind::Meas => {
                if !self.recording.is_empty() {
                    return Err(Trap::MeasureInAdjoint);
                }
                let qubits = self.qubits_of(op, 0)?;
                let mut bits = Vec::new();
                for q in &qubits {
                    bits.push(self.backend.measure(*q)?);
                }
                let outcome = if bits.len() == 1 {
                    bits.pop().unwrap()
                } else if bits.len() < 64 && bits.iter().all(|b| matches!(b, Val::Int(_))) {
                    Val::Int(bits.iter().enumerate().map(|(i, b)| (b.as_int().unwrap() & 1) << i).sum())
                } else {
                    Val::Unknown
                };
                self.set(d.results[0], outcome);
                if qs {
                    let s = self.get(d.operands[0]).clone();
                    self.set(d.results[1], s);
                }
            }
            OpKind::Extract => {
                let Val::Reg(r) = self.get(d.operands[0]).clone() else {
                    return Err(Trap::Unsupported("extract from a non-register".into()));
                };
                for (k, a) in d.accesses.iter().enumerate() {
                    let i = self.access_indices(&a.range, r.len())?[0];
                    self.set(d.results[k], Val::Qubit(r[i]));
                }
                self.set(d.results[d.accesses.len()], Val::Reg(r));
            }
            OpKind::Combine => {
                let Val::Reg(r) = self.get(d.operands[0]).clone() else {
                    return Err(Trap::Unsupported("combine into a non-register".into()));
                };
                for (k, a) in d.accesses.iter().enumerate() {
                    let i = self.access_indices(&a.range, r.len())?[0];
                    if self.get(d.operands[k + 1]) != &Val::Qubit(r[i]) {
                        return Err(Trap::Unsupported(format!("combine puts a foreign qubit at index {i}")));
                    }
                }
                self.set(d.results[0], Val::Reg(r));
            }
            OpKind::Gate(g) => {
                let angle = match gate_angle(m, op) {
                    Some(Angle::Static(a)) => Some(a),
                    Some(Angle::Dyn(v)) => Some(self.float(v)?.ok_or(Trap::UnknownBound)?),
                    None => None,
                };
                if is_gate_value(m, op) {
                    let v = OpVal { base: OpBase::Gate(g, angle), adjoint: false, controls: 0 };
                    self.set(d.results[0], Val::Op(Rc::new(v)));
                    return Ok(());
                }
                let ctl = self.effective(op, controls);
                let ntargets = crate::ir::view::gate_targets(m, op).len();
                let mut targets = Vec::new();
                for i in 0..ntargets {
                    targets.push(self.qubits_of(op, i)?);
                }
                if g.arity() == 1 {
                    for q in targets.concat() {
                        self.emit(GateApp { gate: g, angle, adjoint: false, controls: ctl.to_vec(), targets: vec![q] })?;
                    }
                } else {
                    if targets.iter().any(|t| t.len() != 1) {
                        return Err(Trap::Unsupported(format!("{} needs single-qubit targets", g.name())));
                    }
                    let t = targets.concat();
                    self.emit(GateApp { gate: g, angle, adjoint: false, controls: ctl.to_vec(), targets: t })?;
                }
                if qs {
                    for (i, r) in d.results.iter().enumerate() {
                        let v = self.get(d.operands[i]).clone();
                        self.env[r.index()] = v;
                    }
                }
            }
            OpKind::GetVal => {
                let v = OpVal { base: OpBase::Circ(d.callee().unwrap_or_default().into()), adjoint: false, controls: 0 };
                self.set(d.results[0], Val::Op(Rc::new(v)));
            }
            OpKind::Adj | OpKind::Ctrl => {
                let Val::Op(o) = self.get(d.operands[0]) else {
                    return Err(Trap::Unsupported("meta-operation on a non-operation value".into()));
                };
                let mut o = (**o).clone();
                if d.kind() == OpKind::Adj {
                    o.adjoint = !o.adjoint;
                } else {
                    o.controls += d.attrs.get(names::COUNT).and_then(Attribute::as_int).unwrap_or(1) as u32;
                }
                self.set(d.results[0], Val::Op(Rc::new(o)));
            }
            OpKind::Apply => self.apply(op, controls)?,
            other => return Err(Trap::Unsupported(format!("operation {other:?}"))),
        }
        Ok(())
    }

    fn apply(&mut self, op: OpId, controls: &Rc<Vec<u64>>) -> R<()> {
        let m = self.m;
        let d = m.op(op);
        let Val::Op(o) = self.get(d.operands[0]).clone() else {
            return Err(Trap::Unsupported("apply of a non-operation value".into()));
        };
        let mut ctl = self.effective(op, controls).to_vec();
        let mut qargs = Vec::new();
        let mut rest = Vec::new();
        let mut seen_ctl = 0u32;
        for i in 1..d.operands.len() {
            let v = d.operands[i];
            let quantum = m.ty(v).is_quantum_data();
            if quantum && seen_ctl < o.controls {
                ctl.extend(self.qubits_of(op, i)?);
                seen_ctl += 1;
            } else {
                if quantum {
                    qargs.push(self.qubits_of(op, i)?);
                }
                rest.push(i);
            }
        }
        if o.adjoint {
            self.recording.push((Vec::new(), Vec::new()));
        }
        let run = match &o.base {
            OpBase::Gate(g, angle) => {
                let t = qargs.concat();
                self.emit(GateApp { gate: *g, angle: *angle, adjoint: false, controls: ctl, targets: t }).map(|_| ())
            }
            OpBase::Circ(sym) => {
                let args: Vec<Val> = rest.iter().map(|i| self.get(d.operands[*i]).clone()).collect();
                self.call(sym, args, &Rc::new(ctl)).map(|_| ())
            }
        };
        if o.adjoint {
            let (buf, frees) = self.recording.pop().unwrap();
            run?;
            for g in buf.into_iter().rev() {
                self.emit(g.inverse())?;
            }
            for q in frees {
                self.free_qubit(q)?;
            }
        } else {
            run?;
        }
        if d.name.dialect == Dialect::Qs {
            let qops: Vec<ValueId> = d.operands[1..].iter().copied().filter(|v| m.ty(*v).is_quantum_data()).collect();
            for (r, v) in d.results.iter().zip(qops) {
                let x = self.get(v).clone();
                self.env[r.index()] = x;
            }
        }
        Ok(())
    }
}

fn pred(op: OpId, m: &Module) -> R<CmpPred> {
    m.op(op)
        .attrs
        .get(names::PREDICATE)
        .and_then(Attribute::as_str)
        .and_then(CmpPred::from_name)
        .ok_or_else(|| Trap::Unsupported("comparison without predicate".into()))
}
