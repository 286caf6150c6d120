use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::Serialize;

use crate::ir::Gate;

/// Program argument as bound on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ArgValue {
    Int(i64),
    Float(f64),
}

impl std::fmt::Display for ArgValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ArgValue::Int(v) => write!(f, "{v}"),
            ArgValue::Float(v) => write!(f, "{}", crate::ir::attr::format_float(*v)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundArg {
    pub name: String,
    pub value: ArgValue,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResourceReport {
    pub program: String,
    pub entry: String,
    pub args: Vec<BoundArg>,
    pub counts: BTreeMap<String, u64>,
    #[serde(skip)]
    pub printed: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
    /// Counters that saturated at 2^64 - 1.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub saturated: Vec<String>,
}

impl ResourceReport {
    pub fn count(&self, class: &str) -> u64 {
        self.counts.get(class).copied().unwrap_or(0)
    }

    /// Single-qubit rotations of any axis, controlled or not.
    pub fn rotations(&self) -> u64 {
        [Gate::R, Gate::Rx, Gate::Ry, Gate::Rz].iter().map(|g| self.count(g.name())).fold(0, u64::saturating_add)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.counts {
            let _ = writeln!(s, "{k}: {v}");
        }
        let _ = writeln!(s, "rotations: {}", self.rotations());
        for c in &self.saturated {
            let _ = writeln!(s, "warning: counter {c} saturated");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
