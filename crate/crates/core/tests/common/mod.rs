#![allow(dead_code)]

pub mod gen;
pub mod matrix;

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use qiro::resource::interp::{GateApp, Interpreter, QuantumBackend, Trap, Val};

pub fn corpus(name: &str) -> String {
    let p = format!("{}/corpus/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{p}: {e}"))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Gate(GateApp),
    Measure(u64),
}

/// Records every gate; measurements always read `outcome`.
pub struct Trace {
    pub events: Vec<Event>,
    pub next: u64,
    pub live: u64,
    pub outcome: i64,
}

impl Trace {
    pub fn new(outcome: i64) -> Self {
        Trace { events: Vec::new(), next: 0, live: 0, outcome }
    }

    pub fn gates(&self) -> impl Iterator<Item = &GateApp> {
        self.events.iter().filter_map(|e| match e {
            Event::Gate(g) => Some(g),
            _ => None,
        })
    }
}

impl QuantumBackend for Trace {
    fn alloc(&mut self) -> Result<u64, Trap> {
        self.next += 1;
        self.live += 1;
        Ok(self.next - 1)
    }
    fn free(&mut self, _: u64) -> Result<(), Trap> {
        self.live -= 1;
        Ok(())
    }
    fn gate(&mut self, g: GateApp) -> Result<(), Trap> {
        self.events.push(Event::Gate(g));
        Ok(())
    }
    fn measure(&mut self, q: u64) -> Result<Val, Trap> {
        self.events.push(Event::Measure(q));
        Ok(Val::Int(self.outcome))
    }
}

/// Runs `entry` of a module of either dialect, recording the gate trace.
pub fn trace(m: &qiro::ir::Module, entry: &str, args: &[i64]) -> Trace {
    let args = args.iter().map(|a| Val::Int(*a)).collect();
    Interpreter::new(m, Trace::new(1)).run_with_backend(entry, args).expect("trace run").1
}

pub fn class_counts<'a>(gates: impl Iterator<Item = &'a GateApp>) -> BTreeMap<String, u64> {
    let mut c = BTreeMap::new();
    for g in gates {
        *c.entry(g.gate.name().to_string()).or_insert(0) += 1;
    }
    c
}

pub fn rotations<'a>(gates: impl Iterator<Item = &'a GateApp>) -> u64 {
    gates.filter(|g| g.gate.is_rotation()).count() as u64
}

fn key(g: &GateApp) -> (qiro::ir::Gate, Vec<u64>, Vec<u64>) {
    let mut c = g.controls.clone();
    c.sort_unstable();
    let mut t = g.targets.clone();
    if g.gate == qiro::ir::Gate::SWAP {
        t.sort_unstable();
    }
    (g.gate, c, t)
}

fn period(g: qiro::ir::Gate) -> f64 {
    if g == qiro::ir::Gate::R {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

fn is_zero_angle(a: f64, p: f64) -> bool {
    let r = a.rem_euclid(p);
    r < 1e-9 || p - r < 1e-9
}

/// Online peephole over a fully resolved trace: adjacent inverse pairs cancel
/// and adjacent same-axis rotations merge, repeatedly, until nothing applies.
pub fn peephole(events: &[Event]) -> Vec<GateApp> {
    const BARRIER: usize = usize::MAX;
    let mut live: Vec<Option<GateApp>> = Vec::new();
    let mut stacks: HashMap<u64, Vec<usize>> = HashMap::new();
    for e in events {
        let g = match e {
            Event::Measure(q) => {
                stacks.entry(*q).or_default().push(BARRIER);
                continue;
            }
            Event::Gate(g) => g.clone(),
        };
        let qubits: Vec<u64> = g.controls.iter().chain(&g.targets).copied().collect();
        let tops: Vec<Option<usize>> = qubits.iter().map(|q| stacks.get(q).and_then(|s| s.last().copied())).collect();
        let mut merged = false;
        if let Some(Some(j)) = tops.first() {
            let j = *j;
            if j != BARRIER && tops.iter().all(|t| *t == Some(j)) {
                let prev = live[j].as_ref().unwrap();
                if key(prev) == key(&g) {
                    let remove = if g.gate.is_rotation() {
                        let a = prev.angle.unwrap() + g.angle.unwrap();
                        if is_zero_angle(a, period(g.gate)) {
                            true
                        } else {
                            live[j].as_mut().unwrap().angle = Some(a);
                            false
                        }
                    } else {
                        g.gate.is_hermitian() || prev.adjoint != g.adjoint
                    };
                    if g.gate.is_rotation() || remove {
                        merged = true;
                    }
                    if remove {
                        for q in &qubits {
                            stacks.get_mut(q).unwrap().pop();
                        }
                        live[j] = None;
                    }
                }
            }
        }
        if !merged {
            let idx = live.len();
            live.push(Some(g));
            for q in qubits {
                stacks.entry(q).or_default().push(idx);
            }
        }
    }
    live.into_iter().flatten().collect()
}
