//! Gate cost models.
//!
//! A cost model maps a gate application, identified by its native gate class,
//! number of controls and adjoint flag, to counter increments. JSON form:
//!
//! ```json
//! {
//!   "control_factor": 2,
//!   "rows": {
//!     "R": [ { "controls": 1, "adjoint": false, "cost": { "R": 3, "CX": 2 } } ]
//!   }
//! }
//! ```
//!
//! Lookup falls back in this order: exact row; the non-adjoint row with the
//! same control count; for `k > 1` controls the one-control cost scaled by
//! `control_factor^(k-1)`; finally one unit of the gate's own class.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::Gate;

pub type Increments = BTreeMap<String, u64>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostRow {
    #[serde(default)]
    pub controls: u32,
    #[serde(default)]
    pub adjoint: bool,
    pub cost: Increments,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    #[serde(default = "one")]
    pub control_factor: u64,
    #[serde(default)]
    pub rows: BTreeMap<String, Vec<CostRow>>,
}

fn one() -> u64 {
    1
}

#[derive(Debug, Error)]
pub enum CostModelError {
    #[error("malformed cost model: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown gate class `{0}`")]
    UnknownGate(String),
    #[error("gate {0} without controls must cost exactly one {0}")]
    BadBaseRow(String),
    #[error("duplicate row for gate {gate} with {controls} controls (adjoint: {adjoint})")]
    DuplicateRow { gate: String, controls: u32, adjoint: bool },
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel::op_count()
    }
}

impl CostModel {
    /// Every gate application counts once towards its base gate class,
    /// irrespective of controls or adjoint.
    pub fn op_count() -> CostModel {
        CostModel { control_factor: 1, rows: BTreeMap::new() }
    }

    /// Controlled rotations decomposed into three rotations and two CX.
    pub fn decomposed() -> CostModel {
        let mut rows = BTreeMap::new();
        for g in [Gate::R, Gate::Rx, Gate::Ry, Gate::Rz] {
            let cost = Increments::from([(g.name().to_string(), 3), (Gate::CX.name().to_string(), 2)]);
            rows.insert(g.name().to_string(), vec![CostRow { controls: 1, adjoint: false, cost }]);
        }
        // Placeholder growth per additional control.
        CostModel { control_factor: 2, rows }
    }

    pub fn from_json(s: &str) -> Result<CostModel, CostModelError> {
        let m: CostModel = serde_json::from_str(s)?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cost model serializes")
    }

    pub fn validate(&self) -> Result<(), CostModelError> {
        for (g, rows) in &self.rows {
            if Gate::from_name(g).is_none() {
                return Err(CostModelError::UnknownGate(g.clone()));
            }
            for (i, r) in rows.iter().enumerate() {
                if r.controls == 0 && !r.adjoint && r.cost != Increments::from([(g.clone(), 1)]) {
                    return Err(CostModelError::BadBaseRow(g.clone()));
                }
                if rows[..i].iter().any(|p| p.controls == r.controls && p.adjoint == r.adjoint) {
                    return Err(CostModelError::DuplicateRow {
                        gate: g.clone(),
                        controls: r.controls,
                        adjoint: r.adjoint,
                    });
                }
            }
        }
        Ok(())
    }

    fn row(&self, g: Gate, controls: u32, adjoint: bool) -> Option<&Increments> {
        self.rows.get(g.name())?.iter().find(|r| r.controls == controls && r.adjoint == adjoint).map(|r| &r.cost)
    }

    /// Counter increments for one application.
    pub fn cost(&self, g: Gate, controls: u32, adjoint: bool) -> Increments {
        if let Some(c) = self.row(g, controls, adjoint) {
            return c.clone();
        }
        if adjoint {
            return self.cost(g, controls, false);
        }
        if controls > 1 {
            if let Some(base) = self.row(g, 1, false) {
                let f = self.control_factor.saturating_pow(controls - 1);
                return base.iter().map(|(k, v)| (k.clone(), v.saturating_mul(f))).collect();
            }
        }
        Increments::from([(g.name().to_string(), 1)])
    }
}
