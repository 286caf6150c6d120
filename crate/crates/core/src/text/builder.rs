//! Construction of IR from the syntax tree: name resolution, result-type
//! inference and signature checking.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::Pos;
use super::SourceDiagnostic;
use crate::ir::signature::{check_spec, ctrl_type};
use crate::ir::view::gate_value_type;
use crate::ir::{
    names, Access, Attribute, Attrs, BlockId, Dialect, Index, InsertPoint, Module, OpId, OpKind, OpName, OpSpec,
    RegAccess, Successor, Type, ValueId,
};

type BResult<T> = Result<T, SourceDiagnostic>;

pub struct Built {
    pub module: Module,
    pub locs: HashMap<OpId, Pos>,
}

struct Sig {
    results: Vec<Type>,
}

struct Builder {
    m: Module,
    locs: HashMap<OpId, Pos>,
    sigs: HashMap<String, Sig>,
    env: HashMap<String, ValueId>,
    scopes: Vec<Vec<String>>,
}

fn err<T>(pos: Pos, msg: impl Into<String>) -> BResult<T> {
    Err(SourceDiagnostic::error(pos, msg))
}

pub fn build_module(ast: &AstModule) -> BResult<Built> {
    let mut b = Builder { m: Module::new(), locs: HashMap::new(), sigs: HashMap::new(), env: HashMap::new(), scopes: Vec::new() };
    for f in &ast.items {
        if b.sigs.insert(f.name.clone(), Sig { results: f.results.clone() }).is_some() {
            return err(f.pos, format!("symbol @{} defined more than once", f.name));
        }
    }
    for f in &ast.items {
        b.func(f)?;
    }
    Ok(Built { module: b.m, locs: b.locs })
}

impl Builder {
    fn bind(&mut self, name: &str, v: ValueId, pos: Pos) -> BResult<()> {
        if self.env.contains_key(name) {
            return err(pos, format!("redefinition of value `%{name}`"));
        }
        self.env.insert(name.to_string(), v);
        if let Some(s) = self.scopes.last_mut() {
            s.push(name.to_string());
        }
        Ok(())
    }

    fn lookup(&self, v: &AstValue) -> BResult<ValueId> {
        match self.env.get(&v.name) {
            Some(id) => Ok(*id),
            None => err(v.pos, format!("use of undefined value `%{}`", v.name)),
        }
    }

    fn push_scope(&mut self) {
        self.scopes.push(Vec::new());
    }

    fn pop_scope(&mut self) {
        for n in self.scopes.pop().unwrap_or_default() {
            self.env.remove(&n);
        }
    }

    fn func(&mut self, f: &AstFunc) -> BResult<()> {
        let name = match f.keyword.as_str() {
            "func" => OpName::std(OpKind::Func),
            "q.circ" => OpName::new(Dialect::Q, OpKind::Circ),
            _ => OpName::new(Dialect::Qs, OpKind::Circ),
        };
        let mut attrs: Attrs = f.attrs.iter().cloned().collect();
        attrs.insert(names::SYM_NAME.into(), Attribute::Str(f.name.clone()));
        attrs.insert(names::RESULTS.into(), Attribute::List(f.results.iter().cloned().map(Attribute::Type).collect()));
        let top = self.m.top();
        let op = self.m.insert_new(InsertPoint::End(top), OpSpec::new(name).attrs(attrs).regions(1));
        self.locs.insert(op, f.pos);
        self.env.clear();
        self.scopes.clear();
        self.push_scope();
        let r = self.m.op(op).regions[0];
        let entry = self.m.add_block(r, f.params.iter().map(|p| p.1.clone()).collect());
        let args = self.m.block(entry).args.clone();
        for ((n, _, pos), v) in f.params.iter().zip(args) {
            self.bind(n, v, *pos)?;
            self.m.set_value_name(v, Some(n.clone()));
        }
        if f.body.blocks.first().map_or(false, |b| !b.args.is_empty()) {
            return err(f.body.blocks[0].pos, "entry block arguments come from the signature");
        }
        self.region_blocks(op, r, entry, &f.body, true)?;
        self.pop_scope();
        Ok(())
    }

    /// Fills a region whose entry block already exists.
    fn region_blocks(
        &mut self,
        parent: OpId,
        r: crate::ir::RegionId,
        entry: BlockId,
        ast: &AstRegion,
        multi: bool,
    ) -> BResult<()> {
        if !multi && ast.blocks.len() > 1 {
            return err(ast.blocks[1].pos, "structured regions take a single block");
        }
        let mut labels: HashMap<String, BlockId> = HashMap::new();
        let mut ids = Vec::new();
        for (i, blk) in ast.blocks.iter().enumerate() {
            let b = if i == 0 {
                entry
            } else {
                let b = self.m.add_block(r, blk.args.iter().map(|a| a.1.clone()).collect());
                if blk.label.is_none() {
                    return err(blk.pos, "only the entry block may omit its label");
                }
                b
            };
            if let Some(l) = &blk.label {
                if labels.insert(l.clone(), b).is_some() {
                    return err(blk.pos, format!("duplicate block label `^{l}`"));
                }
                self.m.block_mut(b).label = Some(l.clone());
            }
            ids.push(b);
        }
        let entry_label = ast.blocks[0].label.clone();
        self.push_scope();
        for (blk, &b) in ast.blocks.iter().zip(&ids) {
            let args = self.m.block(b).args.clone();
            if b != entry {
                for ((n, _, pos), v) in blk.args.iter().zip(args) {
                    self.bind(n, v, *pos)?;
                }
            }
            for op in &blk.ops {
                self.op(op, b, &labels, entry_label.as_deref())?;
            }
        }
        self.pop_scope();
        if ids.len() == 1 {
            let b = ids[0];
            let needs = self.m.terminator(b).map_or(true, |t| !self.m.name(t).is_terminator());
            if needs {
                let pk = self.m.kind(parent);
                let name = match pk {
                    OpKind::For | OpKind::If if self.m.op(parent).results.is_empty() => {
                        Some(OpName::new(self.m.name(parent).dialect, OpKind::Yield))
                    }
                    OpKind::Func | OpKind::Circ if self.m.func_result_types(parent).is_empty() => {
                        Some(OpName::std(OpKind::Return))
                    }
                    _ => None,
                };
                if let Some(n) = name {
                    let t = self.m.insert_new(InsertPoint::End(b), OpSpec::new(n));
                    if let Some(p) = self.locs.get(&parent).copied() {
                        self.locs.insert(t, p);
                    }
                }
            }
        }
        Ok(())
    }

    fn op(&mut self, op: &AstOp, b: BlockId, labels: &HashMap<String, BlockId>, entry: Option<&str>) -> BResult<()> {
        let at = InsertPoint::End(b);
        let pos = op.pos;
        let attrs: Attrs = op.attrs.iter().cloned().collect();
        let name = match op.name.as_str() {
            "q.call" => OpName::new(Dialect::Q, OpKind::QCall),
            "qs.call" => OpName::new(Dialect::Qs, OpKind::QCall),
            other => match OpName::parse(other) {
                Ok(n) => n,
                Err(_) => return err(pos, format!("unknown operation `{other}`")),
            },
        };
        let id = match &op.body {
            AstOpBody::Generic { paren, operands } => {
                if name.kind == OpKind::Adj && operands.len() > 1 {
                    return self.fused_adj(op, name, operands, attrs, b);
                }
                let (mut vals, accesses) = self.operands(operands)?;
                let mut attrs = attrs;
                self.paren(name, paren, &mut vals, &mut attrs, pos)?;
                let results = match &op.types {
                    Some(t) => t.clone(),
                    None => self.infer(name, &vals, &accesses, &attrs, pos)?,
                };
                let spec = OpSpec { name, operands: vals, accesses, result_types: results, attrs, successors: vec![], num_regions: 0 };
                self.create(spec, at, pos)?
            }
            AstOpBody::Call { callee, args } => {
                let (vals, accesses) = self.operands(args)?;
                if !accesses.is_empty() {
                    return err(pos, "register accesses are not allowed in calls");
                }
                let Some(sig) = self.sigs.get(callee) else {
                    return err(pos, format!("call to unknown symbol @{callee}"));
                };
                let results = op.types.clone().unwrap_or_else(|| sig.results.clone());
                let mut attrs = attrs;
                attrs.insert(names::CALLEE.into(), Attribute::Symbol(callee.clone()));
                let spec = OpSpec::new(name).operands(vals).results(results).attrs(attrs);
                self.create(spec, at, pos)?
            }
            AstOpBody::GetVal { callee } => {
                if !self.sigs.contains_key(callee) {
                    return err(pos, format!("reference to unknown symbol @{callee}"));
                }
                let mut attrs = attrs;
                attrs.insert(names::CALLEE.into(), Attribute::Symbol(callee.clone()));
                let results = op.types.clone().unwrap_or_else(|| vec![Type::Circ]);
                self.create(OpSpec::new(name).results(results).attrs(attrs), at, pos)?
            }
            AstOpBody::Apply { op: callee, args } => {
                let f = self.lookup(callee)?;
                let (mut vals, accesses) = self.operands(args)?;
                vals.insert(0, f);
                let accesses = accesses.into_iter().map(|a| Access { operand: a.operand + 1, range: a.range }).collect::<Vec<_>>();
                let results = match &op.types {
                    Some(t) => t.clone(),
                    None => self.infer(name, &vals, &accesses, &attrs, pos)?,
                };
                let spec = OpSpec::new(name).operands(vals).accesses(accesses).results(results).attrs(attrs);
                self.create(spec, at, pos)?
            }
            AstOpBody::For { iv, lb, ub, step, iter_args, body } => {
                let mut attrs = attrs;
                let mut vals = Vec::new();
                let mut iv_ty = None;
                for (key, bnd) in [(names::LB, Some(lb)), (names::UB, Some(ub)), (names::STEP, step.as_ref())] {
                    match bnd {
                        None => {
                            attrs.insert(key.into(), Attribute::Int(1));
                        }
                        Some(AstBound::Int(v)) => {
                            attrs.insert(key.into(), Attribute::Int(*v));
                        }
                        Some(AstBound::Val(v)) => {
                            let id = self.lookup(v)?;
                            if iv_ty.is_none() && key != names::STEP {
                                iv_ty = Some(self.m.ty(id).clone());
                            }
                            vals.push(id);
                        }
                    }
                }
                let mut inits = Vec::new();
                for (_, init) in iter_args {
                    inits.push(self.lookup(init)?);
                }
                let init_tys: Vec<Type> = inits.iter().map(|v| self.m.ty(*v).clone()).collect();
                if let Some(t) = &op.types {
                    if *t != init_tys {
                        return err(pos, "loop result types must match the iter_args types");
                    }
                }
                vals.extend(inits);
                let spec = OpSpec::new(name).operands(vals).results(init_tys.clone()).attrs(attrs).regions(1);
                let id = self.create(spec, at, pos)?;
                let r = self.m.op(id).regions[0];
                let iv_ty = iv_ty.filter(Type::is_integer_like).unwrap_or(Type::Index);
                let mut args = vec![iv_ty];
                args.extend(init_tys);
                let body_block = self.m.add_block(r, args);
                let bargs = self.m.block(body_block).args.clone();
                self.push_scope();
                self.bind(&iv.name, bargs[0], iv.pos)?;
                for ((a, _), v) in iter_args.iter().zip(&bargs[1..]) {
                    self.bind(&a.name, *v, a.pos)?;
                }
                if body.blocks.first().map_or(false, |b| !b.args.is_empty()) {
                    return err(body.blocks[0].pos, "loop body arguments come from the loop header");
                }
                self.region_blocks(id, r, body_block, body, false)?;
                self.pop_scope();
                id
            }
            AstOpBody::If { cond, then, els } => {
                let c = self.lookup(cond)?;
                let results = op.types.clone().unwrap_or_default();
                let spec = OpSpec::new(name).operands([c]).results(results).attrs(attrs).regions(2);
                let id = self.create(spec, at, pos)?;
                for (i, reg) in [Some(then), els.as_ref()].into_iter().enumerate() {
                    let r = self.m.op(id).regions[i];
                    let blk = self.m.add_block(r, vec![]);
                    let empty = AstRegion { blocks: vec![AstBlock { label: None, args: vec![], ops: vec![], pos }] };
                    let reg = reg.unwrap_or(&empty);
                    if reg.blocks.first().map_or(false, |b| !b.args.is_empty()) {
                        return err(reg.blocks[0].pos, "scf.if regions take no arguments");
                    }
                    self.region_blocks(id, r, blk, reg, false)?;
                }
                id
            }
            AstOpBody::Br { target, args } => {
                let s = self.successor(target, args, labels, entry)?;
                let spec = OpSpec { successors: vec![s], ..OpSpec::new(name).attrs(attrs) };
                self.create(spec, at, pos)?
            }
            AstOpBody::CondBr { cond, t, t_args, f, f_args } => {
                let c = self.lookup(cond)?;
                let s1 = self.successor(t, t_args, labels, entry)?;
                let s2 = self.successor(f, f_args, labels, entry)?;
                let spec = OpSpec { successors: vec![s1, s2], ..OpSpec::new(name).operands([c]).attrs(attrs) };
                self.create(spec, at, pos)?
            }
        };
        self.bind_results(op, id)
    }

    fn bind_results(&mut self, op: &AstOp, id: OpId) -> BResult<()> {
        let results = self.m.op(id).results.clone();
        if results.len() != op.results.len() {
            return err(
                op.pos,
                format!("`{}` produces {} result(s) but {} name(s) were given", op.name, results.len(), op.results.len()),
            );
        }
        for (n, v) in op.results.iter().zip(results) {
            self.bind(&n.name, v, n.pos)?;
        }
        Ok(())
    }

    fn fused_adj(&mut self, op: &AstOp, name: OpName, operands: &[AstOperand], attrs: Attrs, b: BlockId) -> BResult<()> {
        let pos = op.pos;
        let f = self.lookup(&operands[0].value)?;
        if !operands[0].accesses.is_empty() {
            return err(pos, "the adjoint operand cannot carry a register access");
        }
        let ty = self.m.ty(f).clone();
        let adj = self.create(OpSpec::new(name).operands([f]).results([ty]), InsertPoint::End(b), pos)?;
        let adj_v = self.m.op(adj).results[0];
        let (mut vals, accesses) = self.operands(&operands[1..])?;
        vals.insert(0, adj_v);
        let accesses: Vec<Access> = accesses.into_iter().map(|a| Access { operand: a.operand + 1, range: a.range }).collect();
        let apply_name = OpName::new(name.dialect, OpKind::Apply);
        let results = match &op.types {
            Some(t) => t.clone(),
            None => self.infer(apply_name, &vals, &accesses, &attrs, pos)?,
        };
        let spec = OpSpec::new(apply_name).operands(vals).accesses(accesses).results(results).attrs(attrs);
        let id = self.create(spec, InsertPoint::End(b), pos)?;
        self.bind_results(op, id)
    }

    fn successor(
        &mut self,
        target: &(String, Pos),
        args: &[AstValue],
        labels: &HashMap<String, BlockId>,
        entry: Option<&str>,
    ) -> BResult<Successor> {
        if entry == Some(target.0.as_str()) {
            return err(target.1, "the entry block cannot be a branch target");
        }
        let Some(&block) = labels.get(&target.0) else {
            return err(target.1, format!("unknown block `^{}`", target.0));
        };
        let mut vals = Vec::new();
        for a in args {
            vals.push(self.lookup(a)?);
        }
        Ok(Successor { block, args: vals })
    }

    fn create(&mut self, spec: OpSpec, at: InsertPoint, pos: Pos) -> BResult<OpId> {
        if let Err(e) = check_spec(&self.m, &spec) {
            return err(pos, e.to_string());
        }
        let id = self.m.insert_new(at, spec);
        self.locs.insert(id, pos);
        Ok(id)
    }

    fn operands(&self, ops: &[AstOperand]) -> BResult<(Vec<ValueId>, Vec<Access>)> {
        let mut vals = Vec::new();
        let mut acc = Vec::new();
        for (i, o) in ops.iter().enumerate() {
            vals.push(self.lookup(&o.value)?);
            for a in &o.accesses {
                let mut comps = Vec::new();
                for c in a {
                    comps.push(match c {
                        AstIdx::Int(v) => Index::Static(*v),
                        AstIdx::Val(v) => Index::Dyn(self.lookup(v)?),
                    });
                }
                let range = RegAccess { start: comps[0], stop: comps.get(1).copied(), step: comps.get(2).copied() };
                acc.push(Access { operand: i, range });
            }
        }
        Ok((vals, acc))
    }

    /// Maps parenthesised arguments onto attributes or trailing operands.
    fn paren(&self, name: OpName, paren: &[AstArg], vals: &mut Vec<ValueId>, attrs: &mut Attrs, pos: Pos) -> BResult<()> {
        let bad = || err(pos, format!("invalid argument list for `{name}`"));
        match (name.kind, paren) {
            (_, []) => {}
            (OpKind::Gate(g), [a]) if g.is_rotation() => match a {
                AstArg::Float(f) => {
                    attrs.insert(names::ANGLE.into(), Attribute::Float(*f));
                }
                AstArg::Int(i) => {
                    attrs.insert(names::ANGLE.into(), Attribute::Float(*i as f64));
                }
                AstArg::Val(v) => vals.push(self.lookup(v)?),
                _ => return bad(),
            },
            (OpKind::AllocReg | OpKind::MemAlloc, [a]) => match a {
                AstArg::Int(i) => {
                    attrs.insert(names::SIZE.into(), Attribute::Int(*i));
                }
                AstArg::Val(v) => vals.push(self.lookup(v)?),
                _ => return bad(),
            },
            (OpKind::Constant, [a]) => {
                let v = match a {
                    AstArg::Int(i) => Attribute::Int(*i),
                    AstArg::Float(f) => Attribute::Float(*f),
                    AstArg::Ident(s) if s == "true" => Attribute::Int(1),
                    AstArg::Ident(s) if s == "false" => Attribute::Int(0),
                    _ => return bad(),
                };
                attrs.insert(names::VALUE.into(), v);
            }
            (OpKind::CmpI | OpKind::CmpF, [AstArg::Ident(p) | AstArg::Str(p)]) => {
                attrs.insert(names::PREDICATE.into(), Attribute::Str(p.clone()));
            }
            (OpKind::RcInc, [AstArg::Ident(g) | AstArg::Str(g), rest @ ..]) if rest.len() <= 1 => {
                attrs.insert(names::GATE.into(), Attribute::Str(g.clone()));
                match rest {
                    [] => {}
                    [AstArg::Int(n)] => {
                        attrs.insert(names::VALUE.into(), Attribute::Int(*n));
                    }
                    _ => return bad(),
                }
            }
            (OpKind::Ctrl, [AstArg::Int(n)]) => {
                attrs.insert(names::COUNT.into(), Attribute::Int(*n));
            }
            _ => return bad(),
        }
        Ok(())
    }

    fn infer(&self, name: OpName, vals: &[ValueId], accesses: &[Access], attrs: &Attrs, pos: Pos) -> BResult<Vec<Type>> {
        let ty = |i: usize| -> BResult<Type> {
            match vals.get(i) {
                Some(v) => Ok(self.m.ty(*v).clone()),
                None => err(pos, format!("`{name}` is missing operand {}", i + 1)),
            }
        };
        let qs = name.dialect == Dialect::Qs;
        Ok(match name.kind {
            OpKind::Gate(g) => {
                let n = vals.len() - usize::from(g.is_rotation() && !attrs.contains_key(names::ANGLE));
                if n == 0 {
                    vec![gate_value_type(g)]
                } else if qs {
                    vals[..n].iter().map(|v| self.m.ty(*v).clone()).collect()
                } else {
                    vec![]
                }
            }
            OpKind::Arith(a) => {
                use crate::ir::ArithOp::*;
                match a {
                    SIToFP => vec![Type::F64],
                    FPToSI => vec![Type::i64()],
                    IndexCast => vec![if ty(0)? == Type::Index { Type::i64() } else { Type::Index }],
                    _ => vec![ty(0)?],
                }
            }
            OpKind::CmpI | OpKind::CmpF => vec![Type::i1()],
            OpKind::Select => vec![ty(1)?],
            OpKind::Constant => match attrs.get(names::VALUE) {
                Some(Attribute::Float(_)) => vec![Type::F64],
                _ => vec![Type::i64()],
            },
            OpKind::Load => match ty(0)? {
                Type::MemRef(_, e) => vec![*e],
                t => return err(pos, format!("cannot load from `{t}`")),
            },
            OpKind::MemAlloc => {
                let n = attrs.get(names::SIZE).and_then(Attribute::as_int).map(|n| n as u64);
                vec![Type::MemRef(n, Box::new(Type::i64()))]
            }
            OpKind::Alloc => vec![if qs { Type::QState } else { Type::Qubit }],
            OpKind::AllocReg => {
                let n = attrs.get(names::SIZE).and_then(Attribute::as_int).map(|n| n.max(0) as u64);
                vec![if qs { Type::RState(n) } else { Type::Qureg(n) }]
            }
            OpKind::Meas => {
                let t = ty(0)?;
                let single = t.is_single_qubit() || (accesses.len() == 1 && accesses[0].range.is_single());
                let bit = if single { Type::i1() } else { Type::BitVec(t.register_size()) };
                if qs {
                    vec![bit, t]
                } else {
                    vec![bit]
                }
            }
            OpKind::Extract => {
                let mut v = vec![Type::QState; accesses.len()];
                v.push(ty(0)?);
                v
            }
            OpKind::Combine => vec![ty(0)?],
            OpKind::Adj => vec![ty(0)?],
            OpKind::Ctrl => {
                let c = attrs.get(names::COUNT).and_then(Attribute::as_int).unwrap_or(1).max(1);
                vec![ctrl_type(&ty(0)?, c as u32)]
            }
            OpKind::Apply => {
                if qs {
                    vals[1..].iter().map(|v| self.m.ty(*v).clone()).filter(Type::is_quantum_data).collect()
                } else {
                    vec![]
                }
            }
            OpKind::RcUnknown => vec![Type::i1()],
            _ => vec![],
        })
    }
}
