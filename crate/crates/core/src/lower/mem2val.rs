//! Memory-semantics to value-semantics lowering (`--convert-mem-to-val`).
//!
//! Builds a fresh module. Every quantum reference of the input dialect is
//! tracked in a state map pointing at its most recent state value; gates
//! consume the mapped states and the map is updated with their results.

use std::collections::{HashMap, HashSet};

use crate::ir::view::loop_bound_operand_count;
use crate::ir::{
    names, Access, Attribute, BlockId, Dialect, Index, InsertPoint, Module, OpId, OpKind, OpName, OpSpec, RegAccess,
    Successor, Type, ValueId,
};
use crate::pass::PassError;

type LResult<T> = Result<T, PassError>;

fn unsupported<T>(msg: impl Into<String>) -> LResult<T> {
    Err(PassError::UnsupportedConstruct(msg.into()))
}

/// Lowers a whole module. The input must be in the memory-semantics dialect.
pub fn lower_module(old: &Module) -> LResult<Module> {
    for op in old.walk_all() {
        let n = old.name(op);
        if matches!(n.dialect, Dialect::Qs | Dialect::Rc) {
            return unsupported(format!("`{n}` is already past the input dialect"));
        }
    }
    let mut sigs = HashMap::new();
    for &f in old.top_ops() {
        let args = old.func_arg_types(f);
        let mut res = old.func_result_types(f);
        res.extend(args.iter().filter(|t| t.is_quantum_ref()).map(Type::to_state));
        sigs.insert(old.op(f).sym_name().unwrap_or_default().to_string(), res);
    }
    let mut l = Lowerer { old, new: Module::new(), sigs, vmap: HashMap::new() };
    for &f in old.top_ops() {
        l.symbol(f)?;
    }
    Ok(l.new)
}

struct Lowerer<'a> {
    old: &'a Module,
    new: Module,
    /// New result types of every symbol.
    sigs: HashMap<String, Vec<Type>>,
    /// Classical value map (old -> new).
    vmap: HashMap<ValueId, ValueId>,
}

#[derive(Clone, Default)]
struct Env {
    /// Quantum reference -> latest state.
    states: HashMap<ValueId, ValueId>,
    /// References allocated in the current scope.
    local: Vec<ValueId>,
}

/// What a region's terminator must append.
#[derive(Clone)]
enum Term {
    Return { qargs: Vec<ValueId> },
    Yield { refs: Vec<ValueId> },
}

/// Extraction group for one register within one op.
struct Group {
    reg: ValueId,
    accesses: Vec<RegAccess>,
    rest: ValueId,
    /// Positions in the new operand list holding the extracted states.
    slots: Vec<usize>,
}

impl<'a> Lowerer<'a> {
    fn emit(&mut self, b: BlockId, spec: OpSpec) -> OpId {
        self.new.insert_new(InsertPoint::End(b), spec)
    }

    fn map(&self, v: ValueId) -> LResult<ValueId> {
        match self.vmap.get(&v) {
            Some(n) => Ok(*n),
            None => unsupported(format!("value {v:?} is not available after lowering")),
        }
    }

    fn state(&self, env: &Env, r: ValueId) -> LResult<ValueId> {
        match env.states.get(&r) {
            Some(s) => Ok(*s),
            None => unsupported("use of a qubit reference that was freed or is not in scope"),
        }
    }

    fn sym_name(&self, op: OpId) -> String {
        self.old.op(op).sym_name().unwrap_or_default().to_string()
    }

    fn symbol(&mut self, f: OpId) -> LResult<()> {
        let old = self.old;
        let d = old.op(f);
        let name = match d.kind() {
            OpKind::Func => OpName::std(OpKind::Func),
            _ => OpName::new(Dialect::Qs, OpKind::Circ),
        };
        let sym = self.sym_name(f);
        let mut attrs = d.attrs.clone();
        attrs.insert(
            names::RESULTS.into(),
            Attribute::List(self.sigs[&sym].iter().cloned().map(Attribute::Type).collect()),
        );
        let top = self.new.top();
        let nf = self.new.insert_new(InsertPoint::End(top), OpSpec::new(name).attrs(attrs).regions(1));
        let r = self.new.op(nf).regions[0];
        let old_entry = old.region_entry(f, 0);
        let old_args = old.block(old_entry).args.clone();
        let entry = self.new.add_block(r, old_args.iter().map(|a| old.ty(*a).to_state()).collect());
        let new_args = self.new.block(entry).args.clone();
        let mut env = Env::default();
        let mut qargs = Vec::new();
        for (&oa, &na) in old_args.iter().zip(&new_args) {
            self.new.set_value_name(na, old.value(oa).name.clone());
            if old.ty(oa).is_quantum_ref() {
                env.states.insert(oa, na);
                qargs.push(oa);
            } else {
                self.vmap.insert(oa, na);
            }
        }
        let term = Term::Return { qargs };
        let old_r = old.op(f).regions[0];
        let blocks = old.region_blocks(old_r).to_vec();
        if blocks.len() == 1 {
            return self.block(blocks[0], entry, &mut env, &term);
        }
        self.multi_block(&blocks, r, entry, env, &term)
    }

    /// Unstructured bodies: every non-entry block receives the states of all
    /// references live at the end of the entry block as extra arguments.
    fn multi_block(
        &mut self,
        blocks: &[BlockId],
        r: crate::ir::RegionId,
        entry: BlockId,
        mut env: Env,
        term: &Term,
    ) -> LResult<()> {
        let old = self.old;
        let body: Vec<OpId> = old.block(blocks[0]).ops.clone();
        let (last, init) = body.split_last().map(|(l, i)| (Some(*l), i.to_vec())).unwrap_or((None, Vec::new()));
        for &o in &init {
            self.op(o, entry, &mut env, term)?;
        }
        let mut live: Vec<ValueId> = env.states.keys().copied().collect();
        live.sort();
        let mut bmap: HashMap<BlockId, BlockId> = HashMap::new();
        for &ob in &blocks[1..] {
            let mut tys: Vec<Type> = old.block(ob).args.iter().map(|a| old.ty(*a).clone()).collect();
            if tys.iter().any(Type::is_quantum_ref) {
                return unsupported("quantum references as block arguments");
            }
            for &q in &live {
                tys.push(self.new.ty(env.states[&q]).clone());
            }
            let nb = self.new.add_block(r, tys);
            self.new.block_mut(nb).label = old.block(ob).label.clone();
            bmap.insert(ob, nb);
        }
        let outer_local = env.local.clone();
        if let Some(l) = last {
            self.branch_or_op(l, entry, &mut env, term, &bmap, &live)?;
        }
        for &ob in &blocks[1..] {
            let nb = bmap[&ob];
            let nargs = self.new.block(nb).args.clone();
            let k = old.block(ob).args.len();
            for (i, &oa) in old.block(ob).args.iter().enumerate() {
                self.vmap.insert(oa, nargs[i]);
            }
            let mut benv = Env { states: HashMap::new(), local: outer_local.clone() };
            for (j, &q) in live.iter().enumerate() {
                benv.states.insert(q, nargs[k + j]);
            }
            for o in old.block(ob).ops.clone() {
                self.branch_or_op(o, nb, &mut benv, term, &bmap, &live)?;
            }
        }
        Ok(())
    }

    fn branch_or_op(
        &mut self,
        o: OpId,
        b: BlockId,
        env: &mut Env,
        term: &Term,
        bmap: &HashMap<BlockId, BlockId>,
        live: &[ValueId],
    ) -> LResult<()> {
        let old = self.old;
        let d = old.op(o);
        if !matches!(d.kind(), OpKind::Br | OpKind::CondBr) {
            return self.op(o, b, env, term);
        }
        let mut keys: Vec<ValueId> = env.states.keys().copied().collect();
        keys.sort();
        if keys != live {
            return unsupported("the set of live qubits must be identical at every branch");
        }
        let mut succs = Vec::new();
        for s in &d.successors {
            let mut args = Vec::new();
            for a in &s.args {
                args.push(self.map(*a)?);
            }
            for q in live {
                args.push(env.states[q]);
            }
            succs.push(Successor { block: bmap[&s.block], args });
        }
        let mut operands = Vec::new();
        for v in &d.operands {
            operands.push(self.map(*v)?);
        }
        let spec = OpSpec { successors: succs, ..OpSpec::new(d.name).operands(operands).attrs(d.attrs.clone()) };
        self.emit(b, spec);
        Ok(())
    }

    fn block(&mut self, ob: BlockId, nb: BlockId, env: &mut Env, term: &Term) -> LResult<()> {
        for o in self.old.block(ob).ops.clone() {
            self.op(o, nb, env, term)?;
        }
        Ok(())
    }

    fn check_no_leaks(&self, env: &Env) -> LResult<()> {
        if env.local.iter().any(|r| env.states.contains_key(r)) {
            return unsupported("locally allocated qubits must be freed before leaving their scope");
        }
        Ok(())
    }

    fn op(&mut self, o: OpId, b: BlockId, env: &mut Env, term: &Term) -> LResult<()> {
        let old = self.old;
        let d = old.op(o);
        let qs = |k: OpKind| OpName::new(Dialect::Qs, k);
        match d.kind() {
            OpKind::Return => {
                let Term::Return { qargs } = term else {
                    return unsupported("return inside a structured region");
                };
                let mut operands = Vec::new();
                for v in &d.operands {
                    operands.push(self.map(*v)?);
                }
                for q in qargs {
                    operands.push(self.state(env, *q)?);
                }
                self.check_no_leaks(env)?;
                self.emit(b, OpSpec::new(d.name).operands(operands));
            }
            OpKind::Yield => {
                let Term::Yield { refs } = term else {
                    return unsupported("yield outside a structured region");
                };
                let mut operands = Vec::new();
                for v in &d.operands {
                    operands.push(self.map(*v)?);
                }
                for q in refs {
                    operands.push(self.state(env, *q)?);
                }
                self.check_no_leaks(env)?;
                self.emit(b, OpSpec::new(d.name).operands(operands));
            }
            OpKind::For => self.lower_for(o, b, env)?,
            OpKind::If => self.lower_if(o, b, env)?,
            OpKind::Br | OpKind::CondBr => return unsupported("branches inside structured regions"),
            OpKind::Alloc | OpKind::AllocReg => {
                let mut operands = Vec::new();
                for v in &d.operands {
                    operands.push(self.map(*v)?);
                }
                let r = d.results[0];
                let ty = old.ty(r).to_state();
                let n = self.emit(b, OpSpec::new(qs(d.kind())).operands(operands).attrs(d.attrs.clone()).results([ty]));
                env.states.insert(r, self.new.op(n).results[0]);
                env.local.push(r);
            }
            OpKind::Free | OpKind::FreeReg => {
                let r = d.operands[0];
                let s = self.state(env, r)?;
                self.emit(b, OpSpec::new(qs(d.kind())).operands([s]).attrs(d.attrs.clone()));
                env.states.remove(&r);
            }
            OpKind::Meas => {
                let (operands, groups, slots) = self.prepare(o, b, env, false)?;
                let s = operands[0];
                let st = self.new.ty(s).clone();
                let bit = old.ty(d.results[0]).clone();
                let n = self.emit(b, OpSpec::new(qs(OpKind::Meas)).operands([s]).attrs(d.attrs.clone()).results([bit, st]));
                let res = self.new.op(n).results.clone();
                self.vmap.insert(d.results[0], res[0]);
                self.finish(b, env, vec![res[1]], &slots, groups, d.attrs.contains_key(names::COMPUTE));
            }
            OpKind::Gate(g) => {
                if crate::ir::view::gate_targets(old, o).is_empty() {
                    self.clone_as(o, b, qs(d.kind()))?;
                    return Ok(());
                }
                if self.is_range_broadcast(o) {
                    return self.broadcast_range(o, b, env, g);
                }
                let (operands, groups, slots) = self.prepare(o, b, env, true)?;
                let tys: Vec<Type> = slots.iter().map(|(p, _)| self.new.ty(operands[*p]).clone()).collect();
                let n = self.emit(b, OpSpec::new(qs(d.kind())).operands(operands).attrs(d.attrs.clone()).results(tys));
                let res = self.new.op(n).results.clone();
                self.finish(b, env, res, &slots, groups, false);
            }
            OpKind::Apply => {
                let (operands, groups, slots) = self.prepare(o, b, env, true)?;
                let tys: Vec<Type> = slots.iter().map(|(p, _)| self.new.ty(operands[*p]).clone()).collect();
                let n = self.emit(b, OpSpec::new(qs(OpKind::Apply)).operands(operands).attrs(d.attrs.clone()).results(tys));
                let res = self.new.op(n).results.clone();
                self.finish(b, env, res, &slots, groups, false);
            }
            OpKind::Call | OpKind::QCall => {
                let (operands, groups, slots) = self.prepare(o, b, env, true)?;
                let callee = d.callee().unwrap_or_default();
                let Some(res_tys) = self.sigs.get(callee).cloned() else {
                    return unsupported(format!("call to unknown symbol @{callee}"));
                };
                let name = if d.kind() == OpKind::QCall { qs(OpKind::QCall) } else { d.name };
                let n = self.emit(b, OpSpec::new(name).operands(operands).attrs(d.attrs.clone()).results(res_tys));
                let res = self.new.op(n).results.clone();
                let k = d.results.len();
                for (i, &r) in d.results.iter().enumerate() {
                    self.vmap.insert(r, res[i]);
                }
                self.finish(b, env, res[k..].to_vec(), &slots, groups, false);
            }
            OpKind::Adj | OpKind::Ctrl | OpKind::GetVal => {
                self.clone_as(o, b, qs(d.kind()))?;
            }
            OpKind::Extract | OpKind::Combine | OpKind::RcInc | OpKind::RcUnknown => {
                return unsupported(format!("`{}` in the input dialect", d.name));
            }
            OpKind::Func | OpKind::Circ => return unsupported("nested symbol definitions"),
            _ => {
                self.clone_as(o, b, d.name)?;
            }
        }
        Ok(())
    }

    /// Copies a region-free op with classical operands under a new name.
    fn clone_as(&mut self, o: OpId, b: BlockId, name: OpName) -> LResult<OpId> {
        let old = self.old;
        let d = old.op(o);
        if d.operands.iter().any(|v| old.ty(*v).is_quantum_ref()) {
            return unsupported(format!("`{}` on quantum references", d.name));
        }
        let mut operands = Vec::new();
        for v in &d.operands {
            operands.push(self.map(*v)?);
        }
        let tys: Vec<Type> = d.results.iter().map(|r| old.ty(*r).clone()).collect();
        let n = self.emit(b, OpSpec::new(name).operands(operands).attrs(d.attrs.clone()).results(tys));
        for (&r, &nr) in d.results.iter().zip(&self.new.op(n).results.clone()) {
            self.vmap.insert(r, nr);
        }
        Ok(n)
    }

    fn map_access(&self, a: &RegAccess) -> LResult<RegAccess> {
        let mut a = a.clone();
        for c in a.components_mut() {
            if let Index::Dyn(v) = c {
                *v = self.map(*v)?;
            }
        }
        Ok(a)
    }

    fn is_range_broadcast(&self, o: OpId) -> bool {
        self.old.op(o).accesses.iter().any(|a| !a.range.is_single())
    }

    /// `q.H %r[a, b, s]` with static bounds: one gate per selected qubit.
    fn broadcast_range(&mut self, o: OpId, b: BlockId, env: &mut Env, g: crate::ir::Gate) -> LResult<()> {
        let old = self.old;
        let d = old.op(o);
        let a = &d.accesses[0].range;
        let reg = d.operands[0];
        let (Some(start), Some(stop)) = (a.start.as_static(), a.stop.and_then(|s| s.as_static())) else {
            return unsupported("register ranges with dynamic bounds");
        };
        let step = match a.step {
            Some(s) => match s.as_static() {
                Some(v) if v > 0 => v,
                _ => return unsupported("register ranges with dynamic or non-positive step"),
            },
            None => 1,
        };
        let idx: Vec<i64> = (start..stop).step_by(step as usize).collect();
        if idx.is_empty() {
            return Ok(());
        }
        let accesses: Vec<RegAccess> = idx.iter().map(|i| RegAccess::single(Index::Static(*i))).collect();
        let rs = self.state(env, reg)?;
        let (qs, rest) = self.extract(b, rs, &accesses);
        let mut outs = Vec::new();
        let angle: Vec<ValueId> = match crate::ir::view::gate_angle(old, o) {
            Some(crate::ir::view::Angle::Dyn(v)) => vec![self.map(v)?],
            _ => vec![],
        };
        for q in qs {
            let mut ops = vec![q];
            ops.extend(angle.iter().copied());
            let n = self.emit(
                b,
                OpSpec::new(OpName::new(Dialect::Qs, OpKind::Gate(g))).operands(ops).attrs(d.attrs.clone()).results([Type::QState]),
            );
            outs.push(self.new.op(n).results[0]);
        }
        let c = self.combine(b, rest, &accesses, outs);
        env.states.insert(reg, c);
        Ok(())
    }

    fn extract(&mut self, b: BlockId, reg_state: ValueId, accesses: &[RegAccess]) -> (Vec<ValueId>, ValueId) {
        let rt = self.new.ty(reg_state).clone();
        let mut tys = vec![Type::QState; accesses.len()];
        tys.push(rt);
        let acc: Vec<Access> = accesses.iter().map(|a| Access { operand: 0, range: a.clone() }).collect();
        let n = self.emit(b, OpSpec::new(OpName::new(Dialect::Qs, OpKind::Extract)).operands([reg_state]).accesses(acc).results(tys));
        let res = self.new.op(n).results.clone();
        let k = accesses.len();
        (res[..k].to_vec(), res[k])
    }

    fn combine(&mut self, b: BlockId, rest: ValueId, accesses: &[RegAccess], states: Vec<ValueId>) -> ValueId {
        let rt = self.new.ty(rest).clone();
        let acc: Vec<Access> = accesses.iter().map(|a| Access { operand: 0, range: a.clone() }).collect();
        let mut ops = vec![rest];
        ops.extend(states);
        let n = self.emit(b, OpSpec::new(OpName::new(Dialect::Qs, OpKind::Combine)).operands(ops).accesses(acc).results([rt]));
        self.new.op(n).results[0]
    }

    /// Builds the new operand list of a quantum op, extracting accessed
    /// register qubits. Returns the operands, the extraction groups and, for
    /// every quantum operand position, the reference it came from (or the
    /// group it belongs to).
    #[allow(clippy::type_complexity)]
    fn prepare(
        &mut self,
        o: OpId,
        b: BlockId,
        env: &mut Env,
        first_is_classical: bool,
    ) -> LResult<(Vec<ValueId>, Vec<Group>, Vec<(usize, Slot)>)> {
        let old = self.old;
        let d = old.op(o);
        let mut operands = Vec::new();
        let mut slots = Vec::new();
        let mut groups: Vec<Group> = Vec::new();
        let _ = first_is_classical;
        for (i, &v) in d.operands.iter().enumerate() {
            let t = old.ty(v);
            if !t.is_quantum_ref() {
                operands.push(self.map(v)?);
                continue;
            }
            let accs: Vec<&RegAccess> = d.accesses_of(i).collect();
            if accs.is_empty() {
                operands.push(self.state(env, v)?);
                slots.push((operands.len() - 1, Slot::Direct(v)));
                continue;
            }
            if accs.len() != 1 || !accs[0].is_single() {
                return unsupported("register ranges outside of broadcast gates");
            }
            let acc = self.map_access(accs[0])?;
            let gi = match groups.iter().position(|g| g.reg == v) {
                Some(gi) => gi,
                None => {
                    groups.push(Group { reg: v, accesses: Vec::new(), rest: v, slots: Vec::new() });
                    groups.len() - 1
                }
            };
            groups[gi].accesses.push(acc);
            operands.push(v); // placeholder, patched below
            groups[gi].slots.push(operands.len() - 1);
            slots.push((operands.len() - 1, Slot::Group(gi)));
        }
        for g in groups.iter_mut() {
            let rs = self.state(env, g.reg)?;
            let (qstates, rest) = self.extract(b, rs, &g.accesses);
            for (p, q) in g.slots.iter().zip(qstates) {
                operands[*p] = q;
            }
            g.rest = rest;
            env.states.remove(&g.reg);
        }
        Ok((operands, groups, slots))
    }

    /// Maps an op's output states back to references, recombining groups.
    fn finish(&mut self, b: BlockId, env: &mut Env, outs: Vec<ValueId>, slots: &[(usize, Slot)], groups: Vec<Group>, _marked: bool) {
        let mut per_group: Vec<Vec<ValueId>> = vec![Vec::new(); groups.len()];
        for ((_, slot), out) in slots.iter().zip(outs) {
            match slot {
                Slot::Direct(r) => {
                    env.states.insert(*r, out);
                }
                Slot::Group(gi) => per_group[*gi].push(out),
            }
        }
        for (g, states) in groups.into_iter().zip(per_group) {
            let c = self.combine(b, g.rest, &g.accesses, states);
            env.states.insert(g.reg, c);
        }
    }

    /// Quantum references defined outside `op` and used inside its regions,
    /// in first-use order.
    fn outer_refs(&self, op: OpId) -> Vec<ValueId> {
        let old = self.old;
        let inner: HashSet<OpId> = old.nested_ops(op).into_iter().collect();
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for &o in old.nested_ops(op).iter() {
            for &v in &old.op(o).operands {
                if !old.ty(v).is_quantum_ref() || seen.contains(&v) {
                    continue;
                }
                let inside = match old.defining_op(v) {
                    Some(d) => inner.contains(&d),
                    None => old.value_block(v).and_then(|bb| old.block_parent_op(bb)).map_or(false, |p| p == op || inner.contains(&p)),
                };
                if !inside {
                    seen.insert(v);
                    out.push(v);
                }
            }
        }
        out
    }

    fn lower_for(&mut self, o: OpId, b: BlockId, env: &mut Env) -> LResult<()> {
        let old = self.old;
        let d = old.op(o);
        let refs = self.outer_refs(o);
        let nb = loop_bound_operand_count(&d.attrs);
        let mut operands = Vec::new();
        for v in &d.operands {
            if old.ty(*v).is_quantum_ref() {
                return unsupported("quantum references as loop-carried values");
            }
            operands.push(self.map(*v)?);
        }
        let mut states = Vec::new();
        for r in &refs {
            states.push(self.state(env, *r)?);
        }
        let classical_tys: Vec<Type> = d.results.iter().map(|r| old.ty(*r).clone()).collect();
        let state_tys: Vec<Type> = states.iter().map(|s| self.new.ty(*s).clone()).collect();
        operands.extend(states);
        let mut tys = classical_tys.clone();
        tys.extend(state_tys.iter().cloned());
        let n = self.emit(b, OpSpec::new(d.name).operands(operands).attrs(d.attrs.clone()).results(tys.clone()).regions(1));
        let _ = nb;
        let r = self.new.op(n).regions[0];
        let ob = old.region_entry(o, 0);
        let oargs = old.block(ob).args.clone();
        let mut btys = vec![old.ty(oargs[0]).clone()];
        btys.extend(tys.iter().cloned());
        let body = self.new.add_block(r, btys);
        let nargs = self.new.block(body).args.clone();
        for (i, &oa) in oargs.iter().enumerate() {
            self.vmap.insert(oa, nargs[i]);
        }
        let mut inner = Env { states: env.states.clone(), local: Vec::new() };
        let k = oargs.len();
        for (j, &rf) in refs.iter().enumerate() {
            inner.states.insert(rf, nargs[k + j]);
        }
        self.block(ob, body, &mut inner, &Term::Yield { refs: refs.clone() })?;
        let res = self.new.op(n).results.clone();
        for (i, &r0) in d.results.iter().enumerate() {
            self.vmap.insert(r0, res[i]);
        }
        let c = d.results.len();
        for (j, &rf) in refs.iter().enumerate() {
            env.states.insert(rf, res[c + j]);
        }
        Ok(())
    }

    fn lower_if(&mut self, o: OpId, b: BlockId, env: &mut Env) -> LResult<()> {
        let old = self.old;
        let d = old.op(o);
        let refs = self.outer_refs(o);
        let cond = self.map(d.operands[0])?;
        let mut tys: Vec<Type> = d.results.iter().map(|r| old.ty(*r).clone()).collect();
        for r in &refs {
            let s = self.state(env, *r)?;
            tys.push(self.new.ty(s).clone());
        }
        let n = self.emit(b, OpSpec::new(d.name).operands([cond]).attrs(d.attrs.clone()).results(tys).regions(2));
        for i in 0..2 {
            let r = self.new.op(n).regions[i];
            let nb = self.new.add_block(r, vec![]);
            let ob = old.region_entry(o, i);
            let mut inner = Env { states: env.states.clone(), local: Vec::new() };
            self.block(ob, nb, &mut inner, &Term::Yield { refs: refs.clone() })?;
        }
        let res = self.new.op(n).results.clone();
        for (i, &r0) in d.results.iter().enumerate() {
            self.vmap.insert(r0, res[i]);
        }
        let c = d.results.len();
        for (j, &rf) in refs.iter().enumerate() {
            env.states.insert(rf, res[c + j]);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Direct(ValueId),
    Group(usize),
}
