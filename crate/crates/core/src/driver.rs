//! Pass pipelines and end-to-end estimation.

use std::fmt;
use std::time::{Duration, Instant};

use crate::ir::{names, verify, Module};
use crate::pass::{PassContext, PassError};
use crate::quantum::{lower_adj, lower_ctrl, quantum_gate_opt, GateOpt};
use crate::resource::interp::{Interpreter, NoQuantum, Outcome, Trap, Val};
use crate::resource::{count_resources, ArgValue, BoundArg, CostModel, ResourceReport};
use crate::transforms::strip::DEFAULT_ROOTS;
use crate::transforms::{canonicalize, cse, inline, strip_unused, unroll::unroll_with};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    MemToVal,
    LowerCtrl,
    LowerAdj,
    Strip,
    Canonicalize,
    Cse,
    Inline,
    Unroll(Option<u64>),
    GateOpt,
    CountResources,
}

impl Stage {
    /// Flag spelling without the leading dashes.
    pub fn name(&self) -> String {
        match self {
            Stage::MemToVal => "convert-mem-to-val".into(),
            Stage::LowerCtrl => "lower-ctrl".into(),
            Stage::LowerAdj => "lower-adj".into(),
            Stage::Strip => "strip-circ".into(),
            Stage::Canonicalize => "canonicalize".into(),
            Stage::Cse => "cse".into(),
            Stage::Inline => "circuit-inline".into(),
            Stage::Unroll(None) => "affine-unroll".into(),
            Stage::Unroll(Some(k)) => format!("affine-unroll={k}"),
            Stage::GateOpt => "quantum-gate-opt".into(),
            Stage::CountResources => "count-resources".into(),
        }
    }

    pub fn parse(s: &str) -> Result<Stage, PassError> {
        let (name, val) = match s.split_once('=') {
            Some((n, v)) => (n, Some(v)),
            None => (s, None),
        };
        let st = match name {
            "convert-mem-to-val" => Stage::MemToVal,
            "lower-ctrl" => Stage::LowerCtrl,
            "lower-adj" => Stage::LowerAdj,
            "strip-circ" => Stage::Strip,
            "canonicalize" => Stage::Canonicalize,
            "cse" => Stage::Cse,
            "circuit-inline" => Stage::Inline,
            "affine-unroll" => {
                return match val {
                    None => Ok(Stage::Unroll(None)),
                    Some(v) => v.parse().map(|k| Stage::Unroll(Some(k))).map_err(|_| PassError::UnknownPass(s.into())),
                }
            }
            "quantum-gate-opt" => Stage::GateOpt,
            "count-resources" => Stage::CountResources,
            _ => return Err(PassError::UnknownPass(s.into())),
        };
        if val.is_some() {
            return Err(PassError::UnknownPass(s.into()));
        }
        Ok(st)
    }

}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "--{}", self.name())
    }
}

/// The standard sequence ending in resource counting.
pub fn default_stages() -> Vec<Stage> {
    use Stage::*;
    vec![
        MemToVal,
        LowerCtrl,
        Strip,
        Canonicalize,
        Strip,
        Inline,
        Strip,
        Canonicalize,
        Strip,
        GateOpt,
        Canonicalize,
        LowerAdj,
        Canonicalize,
        CountResources,
    ]
}

/// Names accepted by `--disable`.
pub const GATE_OPT_PARTS: &[&str] = &["hermitian", "adjoint", "rotation", "controlled-rotation", "loop-boundary"];

pub fn disable(opts: &mut GateOpt, part: &str) -> Result<(), PassError> {
    match part {
        "hermitian" => opts.hermitian = false,
        "adjoint" => opts.adjoint = false,
        "rotation" => opts.rotations = false,
        "controlled-rotation" => opts.controlled_rotations = false,
        "loop-boundary" => opts.loop_boundary = false,
        _ => return Err(PassError::UnknownPass(part.into())),
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct Pipeline {
    pub stages: Vec<Stage>,
    pub gate_opt: GateOpt,
    pub cost: CostModel,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline { stages: default_stages(), gate_opt: GateOpt::default(), cost: CostModel::op_count() }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage}: {error}")]
pub struct StageError {
    pub stage: String,
    pub error: PassError,
}

pub fn run_stage(m: Module, st: Stage, p: &Pipeline, cx: &mut PassContext) -> Result<Module, PassError> {
    let mut m = m;
    match st {
        Stage::MemToVal => return crate::lower::lower_module(&m),
        Stage::CountResources => return count_resources(&m, &p.cost),
        Stage::LowerCtrl => lower_ctrl(&mut m, cx)?,
        Stage::LowerAdj => lower_adj(&mut m, cx)?,
        Stage::Strip => strip_unused(&mut m, cx)?,
        Stage::Canonicalize => canonicalize(&mut m, cx)?,
        Stage::Cse => cse(&mut m, cx)?,
        Stage::Inline => inline(&mut m, cx)?,
        Stage::Unroll(k) => unroll_with(&mut m, cx, k, false)?,
        Stage::GateOpt => quantum_gate_opt(&mut m, cx, &p.gate_opt)?,
    }
    Ok(m)
}

/// Runs every stage, verifying after each. `on_stage` sees each stage's
/// wall time.
pub fn run_pipeline(
    m: Module,
    p: &Pipeline,
    cx: &mut PassContext,
    mut on_stage: impl FnMut(Stage, Duration),
) -> Result<Module, StageError> {
    let mut m = m;
    for &st in &p.stages {
        let t = Instant::now();
        m = run_stage(m, st, p, cx).map_err(|error| StageError { stage: st.to_string(), error })?;
        on_stage(st, t.elapsed());
        if let Some(d) = verify(&m).into_iter().next() {
            return Err(StageError { stage: st.to_string(), error: PassError::Verify(d.to_string()) });
        }
    }
    Ok(m)
}

/// Entry symbol: the one marked `entry`, else `mlir_main` or `main`.
pub fn default_entry(m: &Module) -> String {
    let syms = m.symbols();
    m.symbol_defs()
        .into_iter()
        .find(|f| m.op(*f).has_attr(names::ENTRY))
        .and_then(|f| m.op(f).sym_name().map(str::to_string))
        .or_else(|| DEFAULT_ROOTS.iter().find(|s| syms.contains_key(**s)).map(|s| s.to_string()))
        .unwrap_or_else(|| "main".into())
}

/// Orders named arguments by the entry's parameter names.
pub fn bind_args(m: &Module, entry: &str, named: &[(String, ArgValue)]) -> Result<Vec<BoundArg>, Trap> {
    let f = *m.symbols().get(entry).ok_or_else(|| Trap::MissingEntry(entry.into()))?;
    let params = m.block(m.region_entry(f, 0)).args.clone();
    let mut out = Vec::new();
    for p in &params {
        let name = m.value(*p).name.clone().unwrap_or_default();
        let Some((_, v)) = named.iter().find(|(n, _)| *n == name) else {
            return Err(Trap::ArgMismatch(format!("missing argument `{name}` of @{entry}")));
        };
        let v = match (v, matches!(m.ty(*p), crate::ir::Type::F64)) {
            (ArgValue::Int(i), true) => ArgValue::Float(*i as f64),
            (ArgValue::Float(_), false) => {
                return Err(Trap::ArgMismatch(format!("argument `{name}` of @{entry} must be an integer")))
            }
            (v, _) => v.clone(),
        };
        out.push(BoundArg { name, value: v });
    }
    if let Some((n, _)) = named.iter().find(|(n, _)| !out.iter().any(|b| b.name == *n)) {
        return Err(Trap::ArgMismatch(format!("@{entry} has no argument `{n}`")));
    }
    Ok(out)
}

/// Interprets a resource-converted module.
pub fn interpret(m: &Module, program: &str, entry: &str, args: Vec<BoundArg>) -> Result<ResourceReport, Trap> {
    let vals = args
        .iter()
        .map(|a| match a.value {
            ArgValue::Int(i) => Val::Int(i),
            ArgValue::Float(f) => Val::Float(f),
        })
        .collect();
    let t = Instant::now();
    let out: Outcome = Interpreter::new(m, NoQuantum).run(entry, vals)?;
    Ok(ResourceReport {
        program: program.into(),
        entry: entry.into(),
        args,
        counts: out.counters,
        printed: out.printed,
        elapsed: t.elapsed(),
        saturated: out.saturated,
    })
}

#[derive(Debug, thiserror::Error)]
pub enum EstimateError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Stage(#[from] StageError),
    #[error(transparent)]
    Trap(#[from] Trap),
}

/// Parse, run `p`, interpret `entry` (default entry when `None`).
pub fn estimate(
    src: &str,
    entry: Option<&str>,
    args: &[(String, ArgValue)],
    p: &Pipeline,
) -> Result<ResourceReport, EstimateError> {
    let m = crate::text::parse(src)
        .map_err(|ds| EstimateError::Parse(ds.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")))?;
    let entry = entry.map(str::to_string).unwrap_or_else(|| default_entry(&m));
    let m = run_pipeline(m, p, &mut PassContext::default(), |_, _| {})?;
    let bound = bind_args(&m, &entry, args)?;
    Ok(interpret(&m, "", &entry, bound)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_names_round_trip() {
        for s in default_stages().into_iter().chain([Stage::Cse, Stage::Unroll(Some(4))]) {
            assert_eq!(Stage::parse(&s.name()).unwrap(), s);
        }
        assert!(Stage::parse("bogus").is_err());
        assert!(Stage::parse("cse=3").is_err());
    }

    #[test]
    fn disable_parts() {
        let mut o = GateOpt::default();
        for p in GATE_OPT_PARTS {
            disable(&mut o, p).unwrap();
        }
        assert_eq!(o, GateOpt::none());
        assert!(disable(&mut o, "everything").is_err());
    }
}
