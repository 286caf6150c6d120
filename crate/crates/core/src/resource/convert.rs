//! `--count-resources`: replaces quantum operations with counter increments.
//!
//! The result is a purely classical module: circuits become functions without
//! quantum arguments or results, gates become `rc.inc` ops, measurements
//! become `rc.unknown` and every other quantum op disappears.

use std::collections::HashMap;

use super::cost::CostModel;
use crate::ir::view::{allocreg_size, gate_targets, is_gate_value, loop_inits, Bound};
use crate::ir::{
    names, ArithOp, Attribute, BlockId, Gate, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, RegionId, Type,
    ValueId,
};
use crate::ir::module::ValueDef;
use crate::pass::PassError;

type CResult<T> = Result<T, PassError>;

fn unsupported<T>(msg: impl Into<String>) -> CResult<T> {
    Err(PassError::UnsupportedConstruct(msg.into()))
}

fn keep(t: &Type) -> bool {
    !t.is_quantum_data() && !t.is_op_value()
}

/// Number of qubits a gate operand stands for.
#[derive(Clone, Copy)]
enum Amount {
    Static(u64),
    Dyn(ValueId),
}

enum OpValue {
    Gate(Gate),
    Circ(String),
}

pub fn count_resources(old: &Module, cost: &CostModel) -> CResult<Module> {
    let mut c = Converter { old, new: Module::new(), cost, vmap: HashMap::new(), bmap: HashMap::new() };
    for &f in old.top_ops() {
        c.symbol(f)?;
    }
    Ok(c.new)
}

struct Converter<'a> {
    old: &'a Module,
    new: Module,
    cost: &'a CostModel,
    vmap: HashMap<ValueId, ValueId>,
    bmap: HashMap<BlockId, BlockId>,
}

impl<'a> Converter<'a> {
    fn map(&self, v: ValueId) -> CResult<ValueId> {
        match self.vmap.get(&v) {
            Some(n) => Ok(*n),
            None => unsupported(format!("value {v:?} has no classical counterpart")),
        }
    }

    fn emit(&mut self, b: BlockId, spec: OpSpec) -> OpId {
        self.new.insert_new(InsertPoint::End(b), spec)
    }

    fn bind(&mut self, old_vals: &[ValueId], new_op: OpId) {
        let new_vals = self.new.op(new_op).results.clone();
        let kept = old_vals.iter().filter(|v| keep(self.old.ty(**v)));
        for (o, n) in kept.zip(new_vals) {
            self.vmap.insert(*o, n);
        }
    }

    fn symbol(&mut self, f: OpId) -> CResult<()> {
        let old = self.old;
        let d = old.op(f);
        let mut attrs = d.attrs.clone();
        let results: Vec<Type> = old.func_result_types(f).into_iter().filter(keep).collect();
        attrs.insert(names::RESULTS.into(), Attribute::List(results.into_iter().map(Attribute::Type).collect()));
        let top = self.new.top();
        let nf = self.new.insert_new(InsertPoint::End(top), OpSpec::new(OpName::std(OpKind::Func)).attrs(attrs));
        self.region(d.regions[0], nf)
    }

    fn region(&mut self, r: RegionId, owner: OpId) -> CResult<()> {
        let old = self.old;
        let nr = self.new.add_region(owner);
        let blocks = old.region_blocks(r).to_vec();
        for &b in &blocks {
            let nb = self.new.add_block(nr, vec![]);
            self.new.block_mut(nb).label = old.block(b).label.clone();
            self.bmap.insert(b, nb);
            for &a in &old.block(b).args {
                if keep(old.ty(a)) {
                    let na = self.new.add_block_arg(nb, old.ty(a).clone());
                    self.new.set_value_name(na, old.value(a).name.clone());
                    self.vmap.insert(a, na);
                }
            }
        }
        for &b in &blocks {
            let nb = self.bmap[&b];
            for &o in &old.block(b).ops {
                self.op(o, nb)?;
            }
        }
        Ok(())
    }

    fn op(&mut self, o: OpId, b: BlockId) -> CResult<()> {
        let old = self.old;
        let d = old.op(o);
        match d.kind() {
            OpKind::Gate(g) => {
                if is_gate_value(old, o) {
                    return Ok(());
                }
                let targets = gate_targets(old, o);
                let amount =
                    if g.arity() == 1 { self.qubit_count(o, 0..targets.len(), b)? } else { Amount::Static(1) };
                self.increment(b, g, 0, false, amount);
            }
            OpKind::Apply => self.apply(o, b)?,
            OpKind::QCall => {
                let operands = self.kept_operands(o)?;
                let results: Vec<Type> = d.results.iter().map(|r| old.ty(*r).clone()).filter(keep).collect();
                let mut attrs = d.attrs.clone();
                attrs.remove(names::COMPUTE);
                attrs.remove(names::UNCOMPUTE);
                let n = self.emit(b, OpSpec::new(OpName::std(OpKind::Call)).operands(operands).attrs(attrs).results(results));
                self.bind(&d.results, n);
            }
            OpKind::Meas => {
                let ty = old.ty(d.results[0]).clone();
                let n = self.emit(b, OpSpec::new(OpName::new(crate::ir::Dialect::Rc, OpKind::RcUnknown)).results([ty]));
                let nv = self.new.op(n).results[0];
                self.vmap.insert(d.results[0], nv);
            }
            OpKind::Alloc
            | OpKind::AllocReg
            | OpKind::Free
            | OpKind::FreeReg
            | OpKind::Extract
            | OpKind::Combine
            | OpKind::Adj
            | OpKind::Ctrl
            | OpKind::GetVal => {}
            OpKind::Func | OpKind::Circ => return unsupported("nested symbol definition"),
            _ => self.classical(o, b)?,
        }
        Ok(())
    }

    fn kept_operands(&self, o: OpId) -> CResult<Vec<ValueId>> {
        let old = self.old;
        old.op(o).operands.iter().filter(|v| keep(old.ty(**v))).map(|v| self.map(*v)).collect()
    }

    fn classical(&mut self, o: OpId, b: BlockId) -> CResult<()> {
        let old = self.old;
        let d = old.op(o);
        let mut attrs = d.attrs.clone();
        attrs.remove(names::COMPUTE);
        attrs.remove(names::UNCOMPUTE);
        let results: Vec<Type> = d.results.iter().map(|r| old.ty(*r).clone()).filter(keep).collect();
        let mut spec = OpSpec::new(d.name).operands(self.kept_operands(o)?).attrs(attrs).results(results);
        for s in &d.successors {
            let args = s.args.iter().filter(|v| keep(old.ty(**v))).map(|v| self.map(*v)).collect::<CResult<Vec<_>>>()?;
            spec = spec.successor(self.bmap[&s.block], args);
        }
        let n = self.emit(b, spec);
        self.bind(&d.results, n);
        for &r in &d.regions {
            self.region(r, n)?;
        }
        Ok(())
    }

    fn apply(&mut self, o: OpId, b: BlockId) -> CResult<()> {
        let old = self.old;
        let d = old.op(o);
        let (base, controls, adjoint) = self.op_value(d.operands[0])?;
        match base {
            OpValue::Gate(g) => {
                let quantum: Vec<usize> =
                    (1..d.operands.len()).filter(|i| old.ty(d.operands[*i]).is_quantum_data()).collect();
                let targets = quantum.get(controls as usize..).unwrap_or(&[]).to_vec();
                let amount = if g.arity() == 1 { self.qubit_count(o, targets, b)? } else { Amount::Static(1) };
                self.increment(b, g, controls, adjoint, amount);
            }
            OpValue::Circ(sym) => {
                if controls > 0 || adjoint {
                    return Err(PassError::UnloweredMetaOp(format!("apply of a modified @{sym}")));
                }
                let operands: Vec<ValueId> = d.operands[1..]
                    .iter()
                    .filter(|v| keep(old.ty(**v)))
                    .map(|v| self.map(*v))
                    .collect::<CResult<_>>()?;
                let n = self.emit(
                    b,
                    OpSpec::new(OpName::std(OpKind::Call))
                        .operands(operands)
                        .attr(names::CALLEE, Attribute::Symbol(sym)),
                );
                self.bind(&[], n);
            }
        }
        Ok(())
    }

    /// Resolves an op value to its base, control count and adjoint flag.
    fn op_value(&self, v: ValueId) -> CResult<(OpValue, u32, bool)> {
        let old = self.old;
        let Some(def) = old.defining_op(v) else {
            return unsupported("operation value passed as an argument");
        };
        let d = old.op(def);
        match d.kind() {
            OpKind::Gate(g) => Ok((OpValue::Gate(g), 0, false)),
            OpKind::GetVal => Ok((OpValue::Circ(d.callee().unwrap_or_default().to_string()), 0, false)),
            OpKind::Adj => {
                let (b, c, a) = self.op_value(d.operands[0])?;
                Ok((b, c, !a))
            }
            OpKind::Ctrl => {
                let (b, c, a) = self.op_value(d.operands[0])?;
                let k = d.attrs.get(names::COUNT).and_then(Attribute::as_int).unwrap_or(1) as u32;
                Ok((b, c + k, a))
            }
            _ => unsupported(format!("operation value produced by `{}`", d.name)),
        }
    }

    /// Total qubits addressed by the given operand slots of `o`.
    fn qubit_count(&mut self, o: OpId, slots: impl IntoIterator<Item = usize>, b: BlockId) -> CResult<Amount> {
        let old = self.old;
        let d = old.op(o);
        let mut stat = 0u64;
        let mut dynamic = Vec::new();
        for i in slots {
            let v = d.operands[i];
            let accs: Vec<_> = d.accesses_of(i).collect();
            if !accs.is_empty() {
                for a in accs {
                    match a.static_len() {
                        Some(n) => stat += n,
                        None => return unsupported("register range with dynamic bounds"),
                    }
                }
                continue;
            }
            if !old.ty(v).is_register() {
                stat += 1;
                continue;
            }
            match self.register_size(v, 0)? {
                Amount::Static(n) => stat += n,
                Amount::Dyn(x) => dynamic.push(x),
            }
        }
        if dynamic.is_empty() {
            return Ok(Amount::Static(stat));
        }
        let ty = self.new.ty(dynamic[0]).clone();
        let mut acc = dynamic[0];
        let rest: Vec<ValueId> = dynamic[1..].to_vec();
        for x in rest {
            acc = self.binop(b, ArithOp::AddI, acc, x, &ty);
        }
        if stat > 0 {
            let c = self.constant(b, stat as i64, &ty);
            acc = self.binop(b, ArithOp::AddI, acc, c, &ty);
        }
        Ok(Amount::Dyn(acc))
    }

    /// Size of the register behind a reference or state value.
    fn register_size(&self, v: ValueId, depth: usize) -> CResult<Amount> {
        let old = self.old;
        if let Some(n) = old.ty(v).register_size() {
            return Ok(Amount::Static(n));
        }
        if depth > 64 {
            return unsupported("register size chain too deep");
        }
        let unknown = || unsupported("broadcast on a register whose size is not known here");
        match old.value(v).def {
            ValueDef::Result(op, idx) => {
                let d = old.op(op);
                let idx = idx as usize;
                match d.kind() {
                    OpKind::AllocReg => match allocreg_size(old, op) {
                        Bound::Static(n) => Ok(Amount::Static(n.max(0) as u64)),
                        Bound::Value(x) => Ok(Amount::Dyn(self.map(x)?)),
                    },
                    OpKind::Extract | OpKind::Combine | OpKind::Meas => self.register_size(d.operands[0], depth + 1),
                    OpKind::Gate(_) => self.register_size(d.operands[idx], depth + 1),
                    OpKind::Apply | OpKind::QCall => {
                        let skip = usize::from(d.kind() == OpKind::Apply);
                        let classical = d.results.iter().take_while(|r| keep(old.ty(**r))).count();
                        let q: Vec<ValueId> =
                            d.operands[skip..].iter().copied().filter(|x| old.ty(*x).is_quantum_data()).collect();
                        match idx.checked_sub(classical).filter(|k| *k < q.len()) {
                            Some(k) => self.register_size(q[k], depth + 1),
                            None => unknown(),
                        }
                    }
                    OpKind::For => self.register_size(loop_inits(old, op)[idx], depth + 1),
                    _ => unknown(),
                }
            }
            ValueDef::BlockArg(blk, idx) => {
                let Some(owner) = old.block_parent_op(blk) else { return unknown() };
                if old.kind(owner) == OpKind::For && idx > 0 && old.region_entry(owner, 0) == blk {
                    self.register_size(loop_inits(old, owner)[idx as usize - 1], depth + 1)
                } else {
                    unknown()
                }
            }
        }
    }

    fn constant(&mut self, b: BlockId, v: i64, ty: &Type) -> ValueId {
        let op = self.emit(
            b,
            OpSpec::new(OpName::std(OpKind::Constant)).attr(names::VALUE, Attribute::Int(v)).results([ty.clone()]),
        );
        self.new.op(op).results[0]
    }

    fn binop(&mut self, b: BlockId, a: ArithOp, x: ValueId, y: ValueId, ty: &Type) -> ValueId {
        let op = self.emit(b, OpSpec::new(OpName::std(OpKind::Arith(a))).operands([x, y]).results([ty.clone()]));
        self.new.op(op).results[0]
    }

    fn increment(&mut self, b: BlockId, g: Gate, controls: u32, adjoint: bool, amount: Amount) {
        let rc = OpName::new(crate::ir::Dialect::Rc, OpKind::RcInc);
        for (class, k) in self.cost.cost(g, controls, adjoint) {
            if k == 0 {
                continue;
            }
            let spec = OpSpec::new(rc).attr(names::GATE, Attribute::Str(class));
            match amount {
                Amount::Static(0) => {}
                Amount::Static(n) => {
                    let total = k.saturating_mul(n).min(i64::MAX as u64) as i64;
                    self.emit(b, spec.attr(names::VALUE, Attribute::Int(total)));
                }
                Amount::Dyn(x) => {
                    let x = if k == 1 {
                        x
                    } else {
                        let ty = self.new.ty(x).clone();
                        let c = self.constant(b, k.min(i64::MAX as u64) as i64, &ty);
                        self.binop(b, ArithOp::MulI, c, x, &ty)
                    };
                    self.emit(b, spec.operands([x]));
                }
            }
        }
    }
}
