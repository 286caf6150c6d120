//! Random well-formed programs as text.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

const ONE_Q: [&str; 6] = ["H", "X", "Y", "Z", "S", "T"];
const ROT: [&str; 4] = ["R", "Rx", "Ry", "Rz"];
const ANGLES: [f64; 7] = [0.25, -0.25, 0.5, 1.0, -1.5, 2.0, 3.141592653589793];

/// One quantum application on wire indices.
#[derive(Clone, Debug)]
pub struct QOp {
    pub gate: &'static str,
    pub angle: Option<f64>,
    pub adjoint: bool,
    pub controls: usize,
    /// Controls first, then targets.
    pub wires: Vec<usize>,
    /// Spell it as a native gate when possible.
    pub native: bool,
}

impl QOp {
    fn arity(&self) -> usize {
        if matches!(self.gate, "CX" | "SWAP") {
            2
        } else {
            1
        }
    }

    pub fn inverse(&self) -> QOp {
        let mut o = self.clone();
        match self.gate {
            "R" | "Rx" | "Ry" | "Rz" => o.angle = self.angle.map(|a| -a),
            "S" | "T" => {
                o.adjoint = !self.adjoint;
                o.native = false;
            }
            _ => {}
        }
        o
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Opts {
    pub gates: usize,
    pub loops: bool,
    pub ifs: bool,
    /// Allow `adj`/`ctrl` meta-operations on gate values.
    pub meta: bool,
    /// Allow explicitly controlled applications.
    pub controlled: bool,
    /// Probability of following an op with its inverse (or itself).
    pub echo: f64,
}

impl Default for Opts {
    fn default() -> Self {
        Opts { gates: 20, loops: true, ifs: true, meta: true, controlled: true, echo: 0.35 }
    }
}

pub struct Gen<'r, R: Rng> {
    pub rng: &'r mut R,
    next: usize,
    out: String,
    indent: usize,
    cond_arg: Option<String>,
}

impl<'r, R: Rng> Gen<'r, R> {
    pub fn new(rng: &'r mut R) -> Self {
        Gen { rng, next: 0, out: String::new(), indent: 1, cond_arg: None }
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("%v{}", self.next - 1)
    }

    fn line(&mut self, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "  ".repeat(self.indent));
    }

    pub fn random_op(&mut self, n: usize, o: &Opts) -> QOp {
        let two = n >= 2 && self.rng.gen_bool(0.3);
        let gate: &'static str = if two {
            ["CX", "SWAP"][self.rng.gen_range(0..2)]
        } else if self.rng.gen_bool(0.4) {
            ROT.choose(self.rng).unwrap()
        } else {
            ONE_Q.choose(self.rng).unwrap()
        };
        let arity = if two { 2 } else { 1 };
        let max_ctl = if o.controlled { (n - arity).min(2) } else { 0 };
        let controls = if max_ctl > 0 && self.rng.gen_bool(0.25) { self.rng.gen_range(1..=max_ctl) } else { 0 };
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(self.rng);
        idx.truncate(controls + arity);
        let angle = ROT.contains(&gate).then(|| *ANGLES.choose(self.rng).unwrap());
        let adjoint = o.meta && self.rng.gen_bool(0.2);
        let native = controls == 0 && !adjoint && !(o.meta && self.rng.gen_bool(0.2));
        QOp { gate, angle, adjoint, controls, wires: idx, native }
    }

    /// Emits `op` on the current states `w`, updating them.
    pub fn emit(&mut self, op: &QOp, w: &mut [String]) {
        let ins: Vec<String> = op.wires.iter().map(|k| w[*k].clone()).collect();
        let outs: Vec<String> = ins.iter().map(|_| self.fresh()).collect();
        let tys = vec!["!qs.qstate"; ins.len()].join(", ");
        let ang = op.angle.map(|a| format!("({a:?})")).unwrap_or_default();
        if op.native && op.controls == 0 && !op.adjoint {
            self.line(&format!("{} = qs.{}{ang} {} : {tys}", outs.join(", "), op.gate, ins.join(", ")));
        } else {
            let base = format!("!q.u{}", op.arity());
            let mut cur = self.fresh();
            self.line(&format!("{cur} = qs.{}{ang} : {base}", op.gate));
            if op.adjoint {
                let a = self.fresh();
                self.line(&format!("{a} = qs.adj {cur} : {base}"));
                cur = a;
            }
            if op.controls > 0 {
                let c = self.fresh();
                self.line(&format!("{c} = qs.ctrl({}) {cur} : !q.cop<{}, {base}>", op.controls, op.controls));
                cur = c;
            }
            self.line(&format!("{} = qs.apply {cur}({}) : {tys}", outs.join(", "), ins.join(", ")));
        }
        for (k, v) in op.wires.iter().zip(outs) {
            w[*k] = v;
        }
    }

    /// `count` random operations on states `w`.
    pub fn block(&mut self, w: &mut Vec<String>, count: usize, depth: usize, o: &Opts) {
        let mut left = count;
        while left > 0 {
            let roll: f64 = self.rng.gen();
            if o.loops && depth < 2 && roll < 0.12 && left >= 3 {
                let body = self.rng.gen_range(2..=left.min(8));
                self.for_loop(w, body, depth, o);
                left -= body;
            } else if o.ifs && depth < 2 && roll < 0.2 && left >= 2 && self.cond_arg.is_some() {
                let body = self.rng.gen_range(1..=left.min(6));
                self.if_op(w, body, depth, o);
                left -= body;
            } else {
                let op = self.random_op(w.len(), o);
                self.emit(&op, w);
                left -= 1;
                if left > 0 && self.rng.gen_bool(o.echo) {
                    let echo = if self.rng.gen_bool(0.7) { op.inverse() } else { op };
                    self.emit(&echo, w);
                    left -= 1;
                }
            }
        }
    }

    fn subset(&mut self, n: usize) -> Vec<usize> {
        let k = self.rng.gen_range(1..=n);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(self.rng);
        idx.truncate(k);
        idx.sort_unstable();
        idx
    }

    fn for_loop(&mut self, w: &mut [String], body: usize, depth: usize, o: &Opts) {
        let sel = self.subset(w.len());
        let trip = self.rng.gen_range(0..=3);
        let iv = self.fresh();
        let args: Vec<String> = sel.iter().map(|_| self.fresh()).collect();
        let outs: Vec<String> = sel.iter().map(|_| self.fresh()).collect();
        let inits: Vec<String> = sel.iter().zip(&args).map(|(k, a)| format!("{a} = {}", w[*k])).collect();
        let tys = vec!["!qs.qstate"; sel.len()].join(", ");
        self.line(&format!(
            "{} = scf.for {iv} = 0 to {trip} step 1 iter_args({}) -> ({tys}) {{",
            outs.join(", "),
            inits.join(", ")
        ));
        self.indent += 1;
        let mut local = args.clone();
        // a boundary pair invites loop-boundary rewrites
        let boundary = body >= 3 && self.rng.gen_bool(0.6);
        let mut inner = body;
        let first = if boundary {
            let op = self.random_op(local.len(), o);
            self.emit(&op, &mut local);
            inner -= 2;
            Some(op)
        } else {
            None
        };
        self.block(&mut local, inner, depth + 1, o);
        if let Some(op) = first {
            let last = if self.rng.gen_bool(0.7) { op.inverse() } else { op };
            self.emit(&last, &mut local);
        }
        self.line(&format!("scf.yield {}", local.join(", ")));
        self.indent -= 1;
        self.line("}");
        for (k, v) in sel.iter().zip(outs) {
            w[*k] = v;
        }
    }

    fn if_op(&mut self, w: &mut [String], body: usize, depth: usize, o: &Opts) {
        let sel = self.subset(w.len());
        let k = self.cond_arg.clone().unwrap();
        let lit = self.fresh();
        let c = self.fresh();
        let t = self.rng.gen_range(0..4);
        self.line(&format!("{lit} = constant({t})"));
        self.line(&format!("{c} = cmpi(slt) {k}, {lit}"));
        let outs: Vec<String> = sel.iter().map(|_| self.fresh()).collect();
        let tys = vec!["!qs.qstate"; sel.len()].join(", ");
        self.line(&format!("{} = scf.if {c} -> ({tys}) {{", outs.join(", ")));
        for branch in 0..2 {
            if branch == 1 {
                self.line("} else {");
            }
            self.indent += 1;
            let mut local: Vec<String> = sel.iter().map(|k| w[*k].clone()).collect();
            let n = if branch == 0 { body } else { self.rng.gen_range(0..=body) };
            self.block(&mut local, n, depth + 1, o);
            self.line(&format!("scf.yield {}", local.join(", ")));
            self.indent -= 1;
        }
        self.line("}");
        for (k, v) in sel.iter().zip(outs) {
            w[*k] = v;
        }
    }

    /// A value-semantics circuit on `n` qubit arguments (and an `i64`
    /// argument `%k` when `ifs` is on). Returns the text.
    pub fn qs_circuit(&mut self, name: &str, n: usize, o: &Opts) -> String {
        self.out.clear();
        self.indent = 1;
        let mut w: Vec<String> = (0..n).map(|i| format!("%q{i}")).collect();
        let mut params: Vec<String> = w.iter().map(|q| format!("{q}: !qs.qstate")).collect();
        if o.ifs {
            params.insert(0, "%k: i64".into());
            self.cond_arg = Some("%k".into());
        } else {
            self.cond_arg = None;
        }
        let res = vec!["!qs.qstate"; n].join(", ");
        let res = if n == 1 { res } else { format!("({res})") };
        self.block(&mut w, o.gates, 0, o);
        let body = std::mem::take(&mut self.out);
        format!("qs.circ @{name}({}) -> {res} {{\n{body}  return {}\n}}\n", params.join(", "), w.join(", "))
    }
}

/// Driver allocating `n` qubits, applying `op_expr` (built from `@name`) and
/// freeing them. `ctl` adds one leading control qubit, allocated last.
pub fn driver(entry: &str, name: &str, n: usize, k: Option<i64>, adj: bool, ctl: bool) -> String {
    let mut s = format!("qs.circ @{entry}() {{\n");
    for i in 0..n {
        let _ = writeln!(s, "  %a{i} = qs.alloc : !qs.qstate");
    }
    if ctl {
        let _ = writeln!(s, "  %c0 = qs.alloc : !qs.qstate");
    }
    let mut args: Vec<String> = Vec::new();
    if ctl {
        args.push("%c0".into());
    }
    if let Some(k) = k {
        let _ = writeln!(s, "  %kk = constant({k})");
        args.push("%kk".into());
    }
    let mut qargs: Vec<String> = (0..n).map(|i| format!("%a{i}")).collect();
    if ctl {
        qargs.insert(0, "%c0".into());
    }
    args.extend(qargs.iter().skip(ctl as usize).cloned());
    let outs: Vec<String> = qargs.iter().enumerate().map(|(i, _)| format!("%b{i}")).collect();
    let tys = vec!["!qs.qstate"; outs.len()].join(", ");
    let _ = writeln!(s, "  %g = qs.getval @{name} : !q.circ");
    let mut cur = "%g".to_string();
    if adj {
        let _ = writeln!(s, "  %ga = qs.adj {cur} : !q.circ");
        cur = "%ga".into();
    }
    if ctl {
        let _ = writeln!(s, "  %gc = qs.ctrl(1) {cur} : !q.cop<1, !q.circ>");
        cur = "%gc".into();
    }
    let _ = writeln!(s, "  {} = qs.apply {cur}({}) : {tys}", outs.join(", "), args.join(", "));
    for o in &outs {
        let _ = writeln!(s, "  qs.free {o}");
    }
    s.push_str("  return\n}\n");
    s
}

/// A random module mixing both dialects and classical functions, for
/// round-trip checks.
pub fn mixed_module<R: Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    let nf = rng.gen_range(1..=3);
    for f in 0..nf {
        s.push_str(&classical_func(rng, f));
        s.push('\n');
    }
    let nm = rng.gen_range(1..=3);
    let size = rng.gen_range(2..=5);
    for c in 0..nm {
        s.push_str(&mem_circuit(rng, c, nf, size));
        s.push('\n');
    }
    let mut g = Gen::new(rng);
    let n = g.rng.gen_range(1..=4);
    let o = Opts { gates: g.rng.gen_range(0..15), ..Opts::default() };
    s.push_str(&g.qs_circuit("vs", n, &o));
    s
}

fn classical_func<R: Rng>(rng: &mut R, f: usize) -> String {
    let mut s = format!("func @f{f}(%a: i64, %b: i64) -> i64 {{\n");
    let mut ints = vec!["%a".to_string(), "%b".to_string()];
    let mut floats: Vec<String> = Vec::new();
    let n = rng.gen_range(1..12);
    for i in 0..n {
        let x = ints.choose(rng).unwrap().clone();
        let y = ints.choose(rng).unwrap().clone();
        let v = format!("%t{i}");
        match rng.gen_range(0..9) {
            0 => {
                let _ = writeln!(s, "  {v} = constant({})", rng.gen_range(-9..50));
            }
            1 => {
                let _ = writeln!(s, "  {v} = addi {x}, {y}");
            }
            2 => {
                let _ = writeln!(s, "  {v} = muli {x}, {y}");
            }
            3 => {
                let _ = writeln!(s, "  {v} = subi {x}, {y}");
            }
            4 => {
                let c = format!("%c{i}");
                let _ = writeln!(s, "  {c} = cmpi(sle) {x}, {y}");
                let _ = writeln!(s, "  {v} = select {c}, {x}, {y}");
            }
            5 => {
                let _ = writeln!(s, "  {v} = scf.for %i{i} = 0 to {x} iter_args(%acc{i} = {y}) -> i64 {{");
                let _ = writeln!(s, "    %s{i} = addi %acc{i}, %i{i}");
                let _ = writeln!(s, "    scf.yield %s{i}");
                let _ = writeln!(s, "  }}");
            }
            6 => {
                let fv = format!("%fl{i}");
                let _ = writeln!(s, "  {fv} = sitofp {x} : f64");
                floats.push(fv);
                let _ = writeln!(s, "  {v} = ori {x}, {y}");
            }
            7 if !floats.is_empty() => {
                let p = floats.choose(rng).unwrap().clone();
                let fv = format!("%fm{i}");
                let _ = writeln!(s, "  {fv} = mulf {p}, {p}");
                floats.push(fv);
                let _ = writeln!(s, "  {v} = andi {x}, {y}");
            }
            _ => {
                let c = format!("%c{i}");
                let _ = writeln!(s, "  {c} = cmpi(ne) {x}, {y}");
                let _ = writeln!(s, "  {v} = scf.if {c} -> (i64) {{");
                let _ = writeln!(s, "    scf.yield {x}");
                let _ = writeln!(s, "  }} else {{");
                let _ = writeln!(s, "    scf.yield {y}");
                let _ = writeln!(s, "  }}");
            }
        }
        ints.push(v);
    }
    let _ = writeln!(s, "  return {}", ints.last().unwrap());
    s.push_str("}\n");
    s
}

fn mem_circuit<R: Rng>(rng: &mut R, c: usize, funcs: usize, size: usize) -> String {
    let mut s = format!("q.circ @m{c}(%r: !q.qureg<{size}>, %q: !q.qubit, %n: index) {{\n");
    let n = rng.gen_range(0..14);
    for i in 0..n {
        let a = rng.gen_range(0..size);
        let b = (a + rng.gen_range(1..size)) % size;
        match rng.gen_range(0..11) {
            0 => {
                let _ = writeln!(s, "  q.{} %q", ONE_Q.choose(rng).unwrap());
            }
            1 => {
                let _ = writeln!(s, "  q.{}({:?}) %r[{a}]", ROT.choose(rng).unwrap(), ANGLES.choose(rng).unwrap());
            }
            2 => {
                let _ = writeln!(s, "  q.CX %r[{a}], %r[{b}]");
            }
            3 => {
                let _ = writeln!(s, "  q.SWAP %q, %r[{a}]");
            }
            4 => {
                let _ = writeln!(s, "  q.H %r");
            }
            5 => {
                let _ = writeln!(s, "  affine.for %i{i} = 0 to %n {{");
                let _ = writeln!(s, "    q.CX %q, %r[%i{i}]");
                let _ = writeln!(s, "  }}");
            }
            6 => {
                let _ = writeln!(s, "  %b{i} = q.meas %q");
                let _ = writeln!(s, "  scf.if %b{i} {{");
                let _ = writeln!(s, "    q.X %r[{a}]");
                let _ = writeln!(s, "  }}");
            }
            7 => {
                let _ = writeln!(s, "  %x{i} = q.alloc");
                let _ = writeln!(s, "  q.CX %q, %x{i}");
                let _ = writeln!(s, "  q.CX %q, %x{i}");
                let _ = writeln!(s, "  q.free %x{i}");
            }
            8 if c > 0 => {
                let callee = rng.gen_range(0..c);
                let _ = writeln!(s, "  q.call @m{callee}(%r, %q, %n)");
            }
            9 => {
                let _ = writeln!(s, "  %g{i} = q.T");
                let _ = writeln!(s, "  %ga{i} = q.adj %g{i}");
                let _ = writeln!(s, "  %gc{i} = q.ctrl(1) %ga{i}");
                let _ = writeln!(s, "  q.apply %gc{i}(%q, %r[{a}])");
            }
            _ if funcs > 0 => {
                let f = rng.gen_range(0..funcs);
                let _ = writeln!(s, "  %k{i} = constant({})", rng.gen_range(0..8));
                let _ = writeln!(s, "  %y{i} = call @f{f}(%k{i}, %k{i})");
            }
            _ => {}
        }
    }
    s.push_str("  return\n}\n");
    s
}

/// Classical functions and memory-semantics circuits, with an entry `@main`
/// allocating the register and calling the last circuit.
pub fn mem_module<R: Rng>(rng: &mut R) -> String {
    let mut s = String::new();
    let nf = rng.gen_range(0..=2);
    for f in 0..nf {
        s.push_str(&classical_func(rng, f));
        s.push('\n');
    }
    let nm = rng.gen_range(1..=3);
    let size = rng.gen_range(2..=5);
    for c in 0..nm {
        s.push_str(&mem_circuit(rng, c, nf, size));
        s.push('\n');
    }
    let n = rng.gen_range(0..=size);
    let _ = write!(
        s,
        "q.circ @main() {{\n  %r = q.allocreg({size})\n  %q = q.alloc\n  %n = constant({n}) : index\n  \
         q.call @m{}(%r, %q, %n)\n  q.free %q\n  q.freereg %r\n  return\n}}\n",
        nm - 1
    );
    s
}
