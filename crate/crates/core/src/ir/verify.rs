//! Module verifier for both dialects.
//!
//! Collects every problem it finds instead of stopping at the first one.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::attr::names;
use super::module::{BlockId, Index, Module, OpId, RegionId, ValueId};
use super::ops::{Dialect, OpKind};
use super::signature::{check_shape, Shape};
use super::types::Type;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagKind {
    Signature,
    Dominance,
    Isolation,
    LinearityViolation,
    StaticAliasing,
    NonUnitaryCircuit,
    Terminator,
    UnresolvedSymbol,
    DuplicateSymbol,
    TypeMismatch,
}

impl fmt::Display for DiagKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub kind: DiagKind,
    pub op: Option<OpId>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

struct Verifier<'m> {
    m: &'m Module,
    diags: Vec<Diagnostic>,
    symbols: HashMap<String, OpId>,
    doms: HashMap<RegionId, HashMap<BlockId, HashSet<BlockId>>>,
}

pub fn verify(m: &Module) -> Vec<Diagnostic> {
    let mut v = Verifier { m, diags: Vec::new(), symbols: HashMap::new(), doms: HashMap::new() };
    v.run();
    v.diags
}

/// Diagnostics of one kind only (convenience for tests and tooling).
pub fn verify_kind(m: &Module, kind: DiagKind) -> Vec<Diagnostic> {
    verify(m).into_iter().filter(|d| d.kind == kind).collect()
}

impl<'m> Verifier<'m> {
    fn err(&mut self, kind: DiagKind, op: Option<OpId>, message: impl Into<String>) {
        self.diags.push(Diagnostic { kind, op, message: message.into() });
    }

    fn where_(&self, op: OpId) -> String {
        let sym = self.m.enclosing_symbol(op).and_then(|s| self.m.op(s).sym_name().map(str::to_string));
        match sym {
            Some(s) => format!("`{}` in @{s}", self.m.name(op)),
            None => format!("`{}`", self.m.name(op)),
        }
    }

    fn run(&mut self) {
        let m = self.m;
        for &op in m.top_ops() {
            if !m.name(op).is_symbol_def() {
                self.err(DiagKind::Signature, Some(op), format!("{} is not allowed at module level", m.name(op)));
                continue;
            }
            let name = m.op(op).sym_name().unwrap_or_default().to_string();
            if self.symbols.insert(name.clone(), op).is_some() {
                self.err(DiagKind::DuplicateSymbol, Some(op), format!("symbol @{name} defined more than once"));
            }
        }
        let all = m.walk_all();
        for &op in &all {
            self.check_op(op);
        }
        for &op in &all {
            for &r in &m.op(op).regions {
                self.check_region(op, r);
            }
        }
        self.check_dominance(&all);
        self.check_linearity(&all);
    }

    fn check_op(&mut self, op: OpId) {
        let m = self.m;
        let d = m.op(op);
        let tys: Vec<Type> = d.operands.iter().map(|v| m.ty(*v).clone()).collect();
        let rtys: Vec<Type> = d.results.iter().map(|v| m.ty(*v).clone()).collect();
        for t in tys.iter().chain(rtys.iter()) {
            if let Err(e) = t.check() {
                self.err(DiagKind::TypeMismatch, Some(op), e);
            }
        }
        let shape = Shape {
            name: d.name,
            operands: &tys,
            results: &rtys,
            attrs: &d.attrs,
            accesses: &d.accesses,
            successors: d.successors.len(),
            regions: d.regions.len(),
        };
        if let Err(e) = check_shape(&shape) {
            self.err(DiagKind::Signature, Some(op), format!("{}: {e}", self.where_(op)));
            return;
        }
        match d.kind() {
            OpKind::Call | OpKind::QCall => self.check_call(op),
            OpKind::GetVal => {
                let callee = d.callee().unwrap_or_default();
                match self.symbols.get(callee) {
                    None => self.err(DiagKind::UnresolvedSymbol, Some(op), format!("unknown symbol @{callee}")),
                    Some(&def) if m.kind(def) != OpKind::Circ => {
                        self.err(DiagKind::TypeMismatch, Some(op), format!("@{callee} is not a circuit"))
                    }
                    _ => {}
                }
            }
            OpKind::Adj | OpKind::Ctrl => {
                if let Some(sym) = op_value_circuit(m, d.operands[0]) {
                    if self.symbols.contains_key(&sym) {
                        if let Err(why) = circuit_is_unitary(m, &sym) {
                            self.err(DiagKind::NonUnitaryCircuit, Some(op), why);
                        }
                    }
                }
            }
            _ => {}
        }
        if d.name.dialect == Dialect::Q || d.kind() == OpKind::Extract || d.kind() == OpKind::Combine {
            self.check_aliasing(op);
        }
    }

    fn check_call(&mut self, op: OpId) {
        let m = self.m;
        let d = m.op(op);
        let callee = d.callee().unwrap_or_default().to_string();
        let Some(&def) = self.symbols.get(&callee) else {
            self.err(DiagKind::UnresolvedSymbol, Some(op), format!("unknown symbol @{callee}"));
            return;
        };
        let want_args = m.func_arg_types(def);
        let got: Vec<Type> = d.operands.iter().map(|v| m.ty(*v).clone()).collect();
        if want_args != got {
            self.err(
                DiagKind::TypeMismatch,
                Some(op),
                format!("call to @{callee}: argument types ({}) do not match ({})", join(&got), join(&want_args)),
            );
        }
        let want_res = m.func_result_types(def);
        let got_res: Vec<Type> = d.results.iter().map(|v| m.ty(*v).clone()).collect();
        if want_res != got_res {
            self.err(
                DiagKind::TypeMismatch,
                Some(op),
                format!("call to @{callee}: result types ({}) do not match ({})", join(&got_res), join(&want_res)),
            );
        }
    }

    fn check_aliasing(&mut self, op: OpId) {
        let m = self.m;
        let d = m.op(op);
        // (reference, static index set or None for the whole register)
        let mut seen: Vec<(ValueId, Option<Vec<i64>>)> = Vec::new();
        let mut add = |v: ValueId, idx: Option<Vec<i64>>, this: &mut Self| {
            for (w, other) in &seen {
                if *w != v {
                    continue;
                }
                let clash = match (&idx, other) {
                    (Some(a), Some(b)) => a.iter().find(|x| b.contains(x)).copied(),
                    _ => Some(-1),
                };
                if let Some(i) = clash {
                    let at = if i >= 0 { format!(" (index {i})") } else { String::new() };
                    this.err(
                        DiagKind::StaticAliasing,
                        Some(op),
                        format!("{}: the same qubit is passed more than once{at}", this.where_(op)),
                    );
                    return;
                }
            }
            seen.push((v, idx));
        };
        let quantum_slot = |i: usize| d.kind() != OpKind::Combine || i == 0;
        for (i, &v) in d.operands.iter().enumerate() {
            if !m.ty(v).is_quantum_data() || !quantum_slot(i) {
                continue;
            }
            let accs: Vec<_> = d.accesses_of(i).collect();
            if accs.is_empty() {
                if d.kind() == OpKind::Extract || d.kind() == OpKind::Combine {
                    continue;
                }
                add(v, None, self);
                continue;
            }
            for a in accs {
                if a.components().any(|c| matches!(c, Index::Dyn(_))) {
                    continue;
                }
                let start = a.start.as_static().unwrap();
                let set: Vec<i64> = match (&a.stop, &a.step) {
                    (None, _) => vec![start],
                    (Some(stop), step) => {
                        let stop = stop.as_static().unwrap();
                        let step = step.map(|s| s.as_static().unwrap()).unwrap_or(1).max(1);
                        (start..stop).step_by(step as usize).collect()
                    }
                };
                add(v, Some(set), self);
            }
        }
    }

    fn check_region(&mut self, parent: OpId, r: RegionId) {
        let m = self.m;
        let pk = m.kind(parent);
        let blocks = m.region_blocks(r).to_vec();
        if blocks.is_empty() {
            if pk != OpKind::If {
                self.err(DiagKind::Terminator, Some(parent), format!("{} has an empty region", self.where_(parent)));
            }
            return;
        }
        if pk != OpKind::Func && pk != OpKind::Circ && blocks.len() != 1 {
            self.err(DiagKind::Terminator, Some(parent), format!("{} region must have a single block", self.where_(parent)));
        }
        let expected_yield: Vec<Type> = match pk {
            OpKind::For | OpKind::If => m.op(parent).results.iter().map(|v| m.ty(*v).clone()).collect(),
            _ => Vec::new(),
        };
        if pk == OpKind::For {
            let entry = blocks[0];
            let args: Vec<Type> = m.block(entry).args.iter().map(|v| m.ty(*v).clone()).collect();
            let mut want = vec![Type::Index];
            want.extend(expected_yield.iter().cloned());
            let iv_ok = args.first().map_or(false, Type::is_integer_like);
            if !iv_ok || args[1..] != want[1..] {
                self.err(
                    DiagKind::TypeMismatch,
                    Some(parent),
                    format!("{}: body arguments ({}) do not match the loop-carried values", self.where_(parent), join(&args)),
                );
            }
        }
        if pk == OpKind::If && !m.block(blocks[0]).args.is_empty() {
            self.err(DiagKind::Signature, Some(parent), "scf.if regions take no arguments".to_string());
        }
        for b in blocks {
            let ops = m.block(b).ops.clone();
            let Some(&last) = ops.last() else {
                self.err(DiagKind::Terminator, Some(parent), format!("{}: empty block", self.where_(parent)));
                continue;
            };
            for &o in &ops[..ops.len() - 1] {
                if m.name(o).is_terminator() {
                    self.err(DiagKind::Terminator, Some(o), format!("{} must be the last operation of its block", self.where_(o)));
                }
            }
            if !m.name(last).is_terminator() {
                self.err(DiagKind::Terminator, Some(last), format!("block ends in non-terminator {}", self.where_(last)));
                continue;
            }
            let lk = m.kind(last);
            let structured = matches!(pk, OpKind::For | OpKind::If);
            let ok = if structured { lk == OpKind::Yield } else { lk != OpKind::Yield };
            if !ok {
                self.err(DiagKind::Terminator, Some(last), format!("{} cannot terminate this region", self.where_(last)));
                continue;
            }
            let got: Vec<Type> = m.op(last).operands.iter().map(|v| m.ty(*v).clone()).collect();
            match lk {
                OpKind::Yield if got != expected_yield => self.err(
                    DiagKind::TypeMismatch,
                    Some(last),
                    format!("yield types ({}) do not match ({})", join(&got), join(&expected_yield)),
                ),
                OpKind::Return => {
                    let want = m.func_result_types(parent);
                    if got != want {
                        self.err(
                            DiagKind::TypeMismatch,
                            Some(last),
                            format!("{}: returns ({}) but signature says ({})", self.where_(last), join(&got), join(&want)),
                        );
                    }
                }
                OpKind::Br | OpKind::CondBr => {
                    for s in &m.op(last).successors {
                        if m.block(s.block).parent != Some(r) {
                            self.err(DiagKind::Terminator, Some(last), "branch target outside the region".to_string());
                            continue;
                        }
                        let want: Vec<Type> = m.block(s.block).args.iter().map(|v| m.ty(*v).clone()).collect();
                        let got: Vec<Type> = s.args.iter().map(|v| m.ty(*v).clone()).collect();
                        if want != got {
                            self.err(
                                DiagKind::TypeMismatch,
                                Some(last),
                                format!("branch arguments ({}) do not match block arguments ({})", join(&got), join(&want)),
                            );
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn dominators(&mut self, r: RegionId) -> &HashMap<BlockId, HashSet<BlockId>> {
        if !self.doms.contains_key(&r) {
            let d = compute_dominators(self.m, r);
            self.doms.insert(r, d);
        }
        &self.doms[&r]
    }

    fn check_dominance(&mut self, all: &[OpId]) {
        let m = self.m;
        for &op in all {
            for v in m.op(op).used_values() {
                if v.index() >= m.num_values() {
                    self.err(DiagKind::Dominance, Some(op), format!("{} uses an unknown value", self.where_(op)));
                    continue;
                }
                if let Some(def) = m.defining_op(v) {
                    if m.is_erased(def) {
                        self.err(DiagKind::Dominance, Some(op), format!("{} uses a value of an erased op", self.where_(op)));
                        continue;
                    }
                }
                let Some(def_block) = m.value_block(v) else {
                    self.err(DiagKind::Dominance, Some(op), format!("{} uses a detached value", self.where_(op)));
                    continue;
                };
                // climb from the use until reaching the defining block's region
                let def_region = m.block(def_block).parent;
                let mut cur = op;
                let mut crossed_isolation = false;
                let mut found = false;
                loop {
                    let Some(b) = m.parent_block(cur) else { break };
                    if m.block(b).parent == def_region {
                        found = true;
                        if b == def_block {
                            if let Some(d) = m.defining_op(v) {
                                let pd = m.op_position(d).unwrap_or(usize::MAX);
                                let pu = m.op_position(cur).unwrap_or(0);
                                if d == cur || pd >= pu {
                                    self.err(
                                        DiagKind::Dominance,
                                        Some(op),
                                        format!("{}: operand is used before its definition", self.where_(op)),
                                    );
                                }
                            }
                        } else if let Some(r) = def_region {
                            let dominated = self.dominators(r).get(&b).map_or(false, |s| s.contains(&def_block));
                            if !dominated {
                                self.err(
                                    DiagKind::Dominance,
                                    Some(op),
                                    format!("{}: operand definition does not dominate its use", self.where_(op)),
                                );
                            }
                        }
                        break;
                    }
                    match m.block_parent_op(b) {
                        Some(p) => {
                            if m.name(p).is_symbol_def() {
                                crossed_isolation = true;
                            }
                            cur = p;
                        }
                        None => break,
                    }
                }
                if crossed_isolation {
                    self.err(
                        DiagKind::Isolation,
                        Some(op),
                        format!("{} references a value defined outside its enclosing body", self.where_(op)),
                    );
                } else if !found {
                    self.err(DiagKind::Dominance, Some(op), format!("{}: operand not visible here", self.where_(op)));
                }
            }
        }
    }

    fn check_linearity(&mut self, all: &[OpId]) {
        let m = self.m;
        let mut values: Vec<ValueId> = Vec::new();
        for &op in all {
            values.extend(m.op(op).results.iter().copied());
            for &r in &m.op(op).regions {
                for &b in m.region_blocks(r) {
                    values.extend(m.block(b).args.iter().copied());
                }
            }
        }
        for v in values {
            if !m.ty(v).is_quantum_state() {
                continue;
            }
            let Some(def_block) = m.value_block(v) else { continue };
            match linear_use_count(m, v, def_block) {
                Ok(1) => {}
                Ok(n) => {
                    let ctx = match m.defining_op(v) {
                        Some(d) => self.where_(d),
                        None => "block argument".to_string(),
                    };
                    let msg = if n == 0 {
                        format!("state produced by {ctx} is never consumed")
                    } else {
                        format!("state produced by {ctx} is consumed {n} times")
                    };
                    self.err(DiagKind::LinearityViolation, m.defining_op(v), msg);
                }
                Err(user) => self.err(
                    DiagKind::LinearityViolation,
                    Some(user),
                    format!("{} consumes a state defined outside its loop body", self.where_(user)),
                ),
            }
        }
    }
}

fn join(tys: &[Type]) -> String {
    tys.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ")
}

/// Number of consuming uses of a state value, taking the maximum over
/// mutually exclusive `scf.if` branches and `cond_br` edges. Returns the
/// offending user when the value is consumed inside a nested loop body.
pub fn linear_use_count(m: &Module, v: ValueId, def_block: BlockId) -> Result<usize, OpId> {
    // A tree keyed by the chain of (scf.if op, branch) between the definition
    // and each use.
    #[derive(Default)]
    struct Node {
        direct: usize,
        ifs: HashMap<OpId, [Box<Node>; 2]>,
    }
    fn total(n: &Node) -> usize {
        n.direct + n.ifs.values().map(|b| total(&b[0]).max(total(&b[1]))).sum::<usize>()
    }
    let mut root = Node::default();
    let mut seen: HashSet<OpId> = HashSet::new();
    for &u in m.uses(v) {
        if !seen.insert(u) {
            continue;
        }
        let d = m.op(u);
        let slots = if d.kind() == OpKind::CondBr {
            let direct = d.operands.iter().filter(|x| **x == v).count();
            direct + d.successors.iter().map(|s| s.args.iter().filter(|x| **x == v).count()).max().unwrap_or(0)
        } else {
            d.used_values().iter().filter(|x| **x == v).count()
        };
        // path from the use up to the def block
        let mut path: Vec<(OpId, usize)> = Vec::new();
        let mut cur = u;
        loop {
            let Some(b) = m.parent_block(cur) else { break };
            if b == def_block || m.block(b).parent == m.block(def_block).parent {
                break;
            }
            let Some(p) = m.block_parent_op(b) else { break };
            match m.kind(p) {
                OpKind::If => {
                    let r = m.block(b).parent.unwrap();
                    let idx = m.op(p).regions.iter().position(|x| *x == r).unwrap_or(0);
                    path.push((p, idx));
                }
                OpKind::For => return Err(u),
                _ => {}
            }
            cur = p;
        }
        let mut node = &mut root;
        for (ifop, branch) in path.into_iter().rev() {
            node = &mut node.ifs.entry(ifop).or_default()[branch];
        }
        node.direct += slots;
    }
    Ok(total(&root))
}

/// Dominator sets for the blocks of one region (entry = first block).
pub fn compute_dominators(m: &Module, r: RegionId) -> HashMap<BlockId, HashSet<BlockId>> {
    let blocks = m.region_blocks(r).to_vec();
    let all: HashSet<BlockId> = blocks.iter().copied().collect();
    let mut preds: HashMap<BlockId, Vec<BlockId>> = HashMap::new();
    for &b in &blocks {
        if let Some(t) = m.terminator(b) {
            for s in &m.op(t).successors {
                preds.entry(s.block).or_default().push(b);
            }
        }
    }
    let mut dom: HashMap<BlockId, HashSet<BlockId>> = HashMap::new();
    for (i, &b) in blocks.iter().enumerate() {
        if i == 0 {
            dom.insert(b, [b].into_iter().collect());
        } else {
            dom.insert(b, all.clone());
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for &b in blocks.iter().skip(1) {
            let mut new: Option<HashSet<BlockId>> = None;
            for p in preds.get(&b).map(Vec::as_slice).unwrap_or(&[]) {
                let pd = &dom[p];
                new = Some(match new {
                    None => pd.clone(),
                    Some(acc) => acc.intersection(pd).copied().collect(),
                });
            }
            // unreachable blocks are dominated only by themselves
            let mut new = new.unwrap_or_default();
            new.insert(b);
            if new != dom[&b] {
                dom.insert(b, new);
                changed = true;
            }
        }
    }
    dom
}

/// Symbol of the circuit behind an operation value (through adj/ctrl).
pub fn op_value_circuit(m: &Module, v: ValueId) -> Option<String> {
    let op = m.defining_op(v)?;
    let d = m.op(op);
    match d.kind() {
        OpKind::GetVal => d.callee().map(str::to_string),
        OpKind::Adj | OpKind::Ctrl => op_value_circuit(m, d.operands[0]),
        _ => None,
    }
}

/// Checks that a circuit (transitively) contains no measurement and only
/// calls circuits or functions.
pub fn circuit_is_unitary(m: &Module, sym: &str) -> Result<(), String> {
    let mut visited = HashSet::new();
    unitary_rec(m, sym, &mut visited)
}

fn unitary_rec(m: &Module, sym: &str, visited: &mut HashSet<String>) -> Result<(), String> {
    if !visited.insert(sym.to_string()) {
        return Ok(());
    }
    let Some(def) = m.lookup(sym) else { return Ok(()) };
    if m.kind(def) == OpKind::Func {
        return Ok(());
    }
    for op in m.nested_ops(def) {
        let d = m.op(op);
        match d.kind() {
            OpKind::Meas | OpKind::RcUnknown => {
                return Err(format!("circuit @{sym} must not contain measurements (used by adj/ctrl)"));
            }
            OpKind::QCall | OpKind::Call | OpKind::GetVal => {
                if let Some(c) = d.callee() {
                    let c = c.to_string();
                    unitary_rec(m, &c, visited).map_err(|e| format!("{e} (reached from @{sym})"))?;
                }
            }
            _ => {}
        }
    }
    Ok(())
}

/// True when the op's `callee` attribute names a live symbol.
pub fn callee_def(m: &Module, op: OpId) -> Option<OpId> {
    m.op(op).attrs.get(names::CALLEE).and_then(|a| a.as_str()).and_then(|s| m.lookup(s))
}
