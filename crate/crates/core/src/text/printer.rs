//! Deterministic printer producing text accepted by the parser.

use std::collections::{HashMap, HashSet};
use std::fmt::Write;

use crate::ir::attr::format_float;
use crate::ir::view::{gate_angle, loop_bounds, Angle, Bound};
use crate::ir::{names, Attribute, BlockId, Module, OpId, OpKind, Type, ValueId};

pub fn print_module(m: &Module) -> String {
    let mut out = String::from("module {\n");
    for (i, &op) in m.top_ops().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut p = Printer { m, names: HashMap::new(), labels: HashMap::new(), out: String::new() };
        p.assign(op);
        p.symbol(op, 1);
        out.push_str(&p.out);
    }
    out.push_str("}\n");
    out
}

/// Prints one top-level op (for diagnostics and debugging).
pub fn print_op(m: &Module, op: OpId) -> String {
    let mut p = Printer { m, names: HashMap::new(), labels: HashMap::new(), out: String::new() };
    let root = m.enclosing_symbol(op).unwrap_or(op);
    p.assign(root);
    if op == root {
        p.symbol(op, 0);
    } else {
        p.op(op, 0);
    }
    p.out
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch.is_ascii_alphabetic() || ch == '_')
        && s.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || ch == '$')
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || ch == '$')
}

struct Printer<'m> {
    m: &'m Module,
    names: HashMap<ValueId, String>,
    labels: HashMap<BlockId, String>,
    out: String,
}

impl<'m> Printer<'m> {
    fn assign(&mut self, sym: OpId) {
        let m = self.m;
        let mut used: HashSet<String> = HashSet::new();
        if !m.op(sym).regions.is_empty() {
            let entry = m.region_entry(sym, 0);
            for (i, &a) in m.block(entry).args.iter().enumerate() {
                let hint = m.value(a).name.clone().filter(|n| is_name(n) && !n.chars().all(|c| c.is_ascii_digit()));
                let name = match hint {
                    Some(h) if !used.contains(&h) => h,
                    _ => format!("arg{i}"),
                };
                used.insert(name.clone());
                self.names.insert(a, name);
            }
        }
        let mut counter = 0usize;
        self.assign_regions(sym, &mut counter, &mut used);
    }

    fn assign_regions(&mut self, op: OpId, counter: &mut usize, used: &mut HashSet<String>) {
        let m = self.m;
        for (ri, &r) in m.op(op).regions.iter().enumerate() {
            let blocks = m.region_blocks(r).to_vec();
            let mut taken: HashSet<String> = HashSet::new();
            let mut k = 1;
            for (bi, &b) in blocks.iter().enumerate() {
                let is_symbol_entry = bi == 0 && m.name(op).is_symbol_def() && ri == 0;
                if bi > 0 {
                    let label = match &m.block(b).label {
                        Some(l) if is_name(l) && !taken.contains(l) && !l.starts_with("bb") => l.clone(),
                        _ => loop {
                            let cand = format!("bb{k}");
                            k += 1;
                            if !taken.contains(&cand) {
                                break cand;
                            }
                        },
                    };
                    taken.insert(label.clone());
                    self.labels.insert(b, label);
                }
                if !is_symbol_entry {
                    for &a in &m.block(b).args {
                        self.fresh(a, counter, used);
                    }
                }
                for &o in &m.block(b).ops {
                    for &res in &m.op(o).results {
                        self.fresh(res, counter, used);
                    }
                    self.assign_regions(o, counter, used);
                }
            }
        }
    }

    fn fresh(&mut self, v: ValueId, counter: &mut usize, used: &mut HashSet<String>) {
        loop {
            let n = counter.to_string();
            *counter += 1;
            if used.insert(n.clone()) {
                self.names.insert(v, n);
                return;
            }
        }
    }

    fn v(&self, v: ValueId) -> String {
        match self.names.get(&v) {
            Some(n) => format!("%{n}"),
            None => format!("%<undef{}>", v.0),
        }
    }

    fn vs(&self, vs: &[ValueId]) -> String {
        vs.iter().map(|v| self.v(*v)).collect::<Vec<_>>().join(", ")
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn symbol(&mut self, op: OpId, depth: usize) {
        let m = self.m;
        let d = m.op(op);
        self.indent(depth);
        let kw = match d.kind() {
            OpKind::Func => "func".to_string(),
            _ => m.name(op).to_string(),
        };
        let entry = m.region_entry(op, 0);
        let params: Vec<String> =
            m.block(entry).args.iter().map(|a| format!("{}: {}", self.v(*a), m.ty(*a))).collect();
        let _ = write!(self.out, "{kw} @{}({})", d.sym_name().unwrap_or_default(), params.join(", "));
        let res = m.func_result_types(op);
        if !res.is_empty() {
            let _ = write!(self.out, " -> {}", type_list(&res));
        }
        let attrs = self.attr_dict(op, &[names::SYM_NAME, names::RESULTS]);
        if !attrs.is_empty() {
            let _ = write!(self.out, " attributes {attrs}");
        }
        self.out.push_str(" {\n");
        self.region_body(op, 0, depth);
        self.indent(depth);
        self.out.push_str("}\n");
    }

    fn region_body(&mut self, op: OpId, ri: usize, depth: usize) {
        let m = self.m;
        let r = m.op(op).regions[ri];
        for (bi, &b) in m.region_blocks(r).iter().enumerate() {
            if bi > 0 {
                self.indent(depth);
                let _ = write!(self.out, "^{}", self.labels[&b]);
                let args = &m.block(b).args;
                if !args.is_empty() {
                    let ps: Vec<String> = args.iter().map(|a| format!("{}: {}", self.v(*a), m.ty(*a))).collect();
                    let _ = write!(self.out, "({})", ps.join(", "));
                }
                self.out.push_str(":\n");
            }
            for &o in &m.block(b).ops {
                self.op(o, depth + 1);
            }
        }
    }

    fn attr_dict(&self, op: OpId, skip: &[&str]) -> String {
        let items: Vec<String> = self
            .m
            .op(op)
            .attrs
            .iter()
            .filter(|(k, _)| !skip.contains(&k.as_str()))
            .map(|(k, a)| {
                let key = if is_ident(k) { k.clone() } else { format!("{k:?}") };
                match a {
                    Attribute::Unit => key,
                    other => format!("{key} = {other}"),
                }
            })
            .collect();
        if items.is_empty() {
            String::new()
        } else {
            format!("{{{}}}", items.join(", "))
        }
    }

    fn op(&mut self, op: OpId, depth: usize) {
        let m = self.m;
        let d = m.op(op);
        self.indent(depth);
        if !d.results.is_empty() {
            let _ = write!(self.out, "{} = ", self.vs(&d.results));
        }
        let name = m.name(op);
        let result_types: Vec<Type> = d.results.iter().map(|v| m.ty(*v).clone()).collect();
        let mut skip: Vec<&str> = Vec::new();
        match d.kind() {
            OpKind::For => {
                let lbs = loop_bounds(m, op);
                let (iv, iters) = {
                    let b = m.region_entry(op, 0);
                    let a = &m.block(b).args;
                    (a[0], a[1..].to_vec())
                };
                let inits = &d.operands[lbs.bound_operands..];
                let _ = write!(
                    self.out,
                    "{name} {} = {} to {} step {}",
                    self.v(iv),
                    self.bound(lbs.lb),
                    self.bound(lbs.ub),
                    self.bound(lbs.step)
                );
                if !iters.is_empty() {
                    let pairs: Vec<String> =
                        iters.iter().zip(inits).map(|(a, i)| format!("{} = {}", self.v(*a), self.v(*i))).collect();
                    let _ = write!(self.out, " iter_args({}) -> ({})", pairs.join(", "), types(&result_types));
                }
                self.out.push_str(" {\n");
                self.region_body(op, 0, depth);
                self.indent(depth);
                self.out.push('}');
                let attrs = self.attr_dict(op, &[names::LB, names::UB, names::STEP]);
                if !attrs.is_empty() {
                    let _ = write!(self.out, " {attrs}");
                }
                self.out.push('\n');
                return;
            }
            OpKind::If => {
                let _ = write!(self.out, "{name} {}", self.v(d.operands[0]));
                if !result_types.is_empty() {
                    let _ = write!(self.out, " -> ({})", types(&result_types));
                }
                self.out.push_str(" {\n");
                self.region_body(op, 0, depth);
                self.indent(depth);
                self.out.push('}');
                let else_b = m.region_entry(op, 1);
                let trivial = m.block(else_b).ops.len() == 1 && m.op(m.block(else_b).ops[0]).operands.is_empty();
                if !trivial {
                    self.out.push_str(" else {\n");
                    self.region_body(op, 1, depth);
                    self.indent(depth);
                    self.out.push('}');
                }
                let attrs = self.attr_dict(op, &[]);
                if !attrs.is_empty() {
                    let _ = write!(self.out, " {attrs}");
                }
                self.out.push('\n');
                return;
            }
            OpKind::Br => {
                let s = &d.successors[0];
                let _ = write!(self.out, "br {}", self.succ(s.block, &s.args));
            }
            OpKind::CondBr => {
                let (a, b) = (&d.successors[0], &d.successors[1]);
                let _ = write!(
                    self.out,
                    "cond_br {}, {}, {}",
                    self.v(d.operands[0]),
                    self.succ(a.block, &a.args),
                    self.succ(b.block, &b.args)
                );
            }
            OpKind::Call | OpKind::QCall => {
                let _ = write!(self.out, "{name} @{}({})", d.callee().unwrap_or_default(), self.vs(&d.operands));
                skip.push(names::CALLEE);
            }
            OpKind::GetVal => {
                let _ = write!(self.out, "{name} @{}", d.callee().unwrap_or_default());
                skip.push(names::CALLEE);
            }
            OpKind::Apply => {
                let args = self.operand_list(op, 1, d.operands.len());
                let _ = write!(self.out, "{name} {}({args})", self.v(d.operands[0]));
            }
            kind => {
                let _ = write!(self.out, "{name}");
                let mut n_ops = d.operands.len();
                let paren: Option<String> = match kind {
                    OpKind::Gate(_) => match gate_angle(m, op) {
                        Some(Angle::Static(a)) => {
                            skip.push(names::ANGLE);
                            Some(format_float(a))
                        }
                        Some(Angle::Dyn(v)) => {
                            n_ops -= 1;
                            Some(self.v(v))
                        }
                        None => None,
                    },
                    OpKind::AllocReg | OpKind::MemAlloc => match d.attrs.get(names::SIZE) {
                        Some(a) => {
                            skip.push(names::SIZE);
                            Some(a.to_string())
                        }
                        None => {
                            n_ops -= 1;
                            Some(self.v(d.operands[0]))
                        }
                    },
                    OpKind::Constant => {
                        skip.push(names::VALUE);
                        d.attrs.get(names::VALUE).map(|a| a.to_string())
                    }
                    OpKind::CmpI | OpKind::CmpF => {
                        skip.push(names::PREDICATE);
                        d.attrs.get(names::PREDICATE).and_then(|a| a.as_str()).map(str::to_string)
                    }
                    OpKind::RcInc => {
                        skip.push(names::GATE);
                        skip.push(names::VALUE);
                        let g = d.attrs.get(names::GATE).and_then(|a| a.as_str()).unwrap_or_default();
                        let g = if is_ident(g) { g.to_string() } else { format!("{g:?}") };
                        Some(match d.attrs.get(names::VALUE).and_then(Attribute::as_int) {
                            Some(n) => format!("{g}, {n}"),
                            None => g,
                        })
                    }
                    OpKind::Ctrl => {
                        skip.push(names::COUNT);
                        d.attrs.get(names::COUNT).map(|a| a.to_string())
                    }
                    _ => None,
                };
                let start = usize::from(matches!(kind, OpKind::AllocReg | OpKind::MemAlloc) && n_ops < d.operands.len());
                if let Some(p) = paren {
                    let _ = write!(self.out, "({p})");
                }
                if n_ops > start {
                    let list = self.operand_list(op, start, n_ops);
                    let _ = write!(self.out, " {list}");
                }
            }
        }
        let attrs = self.attr_dict(op, &skip);
        if !attrs.is_empty() {
            let _ = write!(self.out, " {attrs}");
        }
        if !result_types.is_empty() {
            let _ = write!(self.out, " : {}", types(&result_types));
        }
        self.out.push('\n');
    }

    fn operand_list(&self, op: OpId, from: usize, to: usize) -> String {
        let d = self.m.op(op);
        (from..to)
            .map(|i| {
                let mut s = self.v(d.operands[i]);
                for a in d.accesses_of(i) {
                    let comps: Vec<String> = a
                        .components()
                        .map(|c| match c {
                            crate::ir::Index::Static(n) => n.to_string(),
                            crate::ir::Index::Dyn(v) => self.v(*v),
                        })
                        .collect();
                    let _ = write!(s, "[{}]", comps.join(", "));
                }
                s
            })
            .collect::<Vec<_>>()
            .join(", ")
    }

    fn succ(&self, b: BlockId, args: &[ValueId]) -> String {
        let l = self.labels.get(&b).cloned().unwrap_or_else(|| "entry".into());
        if args.is_empty() {
            format!("^{l}")
        } else {
            format!("^{l}({})", self.vs(args))
        }
    }

    fn bound(&self, b: Bound) -> String {
        match b {
            Bound::Static(v) => v.to_string(),
            Bound::Value(v) => self.v(v),
        }
    }
}

fn types(tys: &[Type]) -> String {
    tys.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

fn type_list(tys: &[Type]) -> String {
    if tys.len() == 1 {
        tys[0].to_string()
    } else {
        format!("({})", types(tys))
    }
}
