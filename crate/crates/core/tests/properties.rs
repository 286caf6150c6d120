mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::SeedableRng;

use common::gen::{driver, mem_module, mixed_module, Gen, Opts};
use qiro::driver::{default_stages, estimate, run_pipeline, run_stage, Pipeline, Stage};
use qiro::ir::{isomorphic, verify, Gate, Module, OpKind};
use qiro::pass::PassContext;
use qiro::resource::interp::Val;
use qiro::resource::ArgValue;
use qiro::text::{parse, print_module};

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() }
}

fn qs_program(seed: u64, o: Opts) -> (String, usize) {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = 1 + (seed % 4) as usize;
    let src = Gen::new(&mut rng).qs_circuit("c", n, &o);
    (format!("{src}{}", driver("main", "c", n, o.ifs.then_some((seed % 3) as i64), false, false)), n)
}

fn stage(m: Module, st: Stage) -> Module {
    let p = Pipeline::default();
    run_stage(m, st, &p, &mut PassContext::default()).unwrap_or_else(|e| panic!("{st}: {e}"))
}

/// Applied gates, not gate values.
fn native_gates(m: &Module) -> BTreeMap<Gate, usize> {
    let mut c = BTreeMap::new();
    for op in m.walk_all() {
        if let OpKind::Gate(g) = m.kind(op) {
            if m.op(op).operands.iter().any(|v| m.ty(*v).is_quantum_data()) {
                *c.entry(g).or_insert(0) += 1;
            }
        }
    }
    c
}

fn def_use_symmetric(m: &Module) -> Result<(), String> {
    let ops = m.walk_all();
    for &op in &ops {
        for v in m.op(op).used_values() {
            let want = m.op(op).used_values().iter().filter(|x| **x == v).count();
            let got = m.uses(v).iter().filter(|u| **u == op).count();
            if want != got {
                return Err(format!("{v:?} read {want} times by {op:?}, {got} use records"));
            }
        }
    }
    for i in 0..m.num_values() {
        let v = qiro::ir::ValueId(i as u32);
        for u in m.uses(v) {
            if m.is_erased(*u) || !m.op(*u).used_values().contains(&v) {
                return Err(format!("stale use record of {v:?} on {u:?}"));
            }
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(cfg(200))]

    #[test]
    fn verify_is_idempotent_and_def_use_symmetric(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = parse(&mixed_module(&mut rng)).unwrap();
        prop_assert!(verify(&m).is_empty());
        prop_assert!(verify(&m).is_empty());
        prop_assert_eq!(def_use_symmetric(&m), Ok(()));
        let mut rng = StdRng::seed_from_u64(seed);
        let lowered = qiro::lower::lower_module(&parse(&mem_module(&mut rng)).unwrap()).unwrap();
        prop_assert_eq!(def_use_symmetric(&lowered), Ok(()));
    }

    #[test]
    fn printing_round_trips_and_is_deterministic(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = parse(&mixed_module(&mut rng)).unwrap();
        let t = print_module(&m);
        prop_assert_eq!(&t, &print_module(&m));
        let back = parse(&t).unwrap();
        prop_assert_eq!(isomorphic(&m, &back), Ok(()));
        prop_assert_eq!(t, print_module(&back));
    }

    #[test]
    fn mem_to_val_keeps_per_qubit_gate_order(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = mem_module(&mut rng);
        let m = parse(&src).unwrap();
        let lowered = qiro::lower::lower_module(&m).unwrap();
        prop_assert!(verify(&lowered).is_empty());
        prop_assert_eq!(native_gates(&m), native_gates(&lowered));
        let a = common::trace(&m, "main", &[]);
        let b = common::trace(&lowered, "main", &[]);
        prop_assert_eq!(a.events, b.events, "{}", src);
        // the output dialect is not an input to lowering
        prop_assert!(qiro::lower::lower_module(&lowered).is_err());
    }

    #[test]
    fn passes_preserve_verification(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = parse(&mem_module(&mut rng)).unwrap();
        let mut p = Pipeline::default();
        p.stages.retain(|s| *s != Stage::CountResources);
        p.stages.extend([Stage::Cse, Stage::Unroll(None), Stage::Canonicalize, Stage::GateOpt]);
        let out = run_pipeline(m, &p, &mut PassContext::default(), |_, _| {});
        prop_assert!(out.is_ok(), "{}", out.unwrap_err());
        let (src, _) = qs_program(seed, Opts::default());
        let mut m = parse(&src).unwrap();
        for st in [Stage::LowerCtrl, Stage::LowerAdj, Stage::Inline, Stage::Canonicalize, Stage::GateOpt, Stage::Strip] {
            m = stage(m, st);
            prop_assert!(verify(&m).is_empty(), "{}: {:?}", st, verify(&m));
        }
    }

    #[test]
    fn canonicalize_and_cse_are_idempotent(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = qiro::lower::lower_module(&parse(&mem_module(&mut rng)).unwrap()).unwrap();
        for st in [Stage::Canonicalize, Stage::Cse] {
            let once = stage(m.clone(), st);
            let twice = stage(once.clone(), st);
            prop_assert_eq!(isomorphic(&once, &twice), Ok(()), "{}", st);
        }
    }

    #[test]
    fn classical_passes_keep_results(seed in any::<u64>(), a in -6i64..6, b in -6i64..6) {
        let mut rng = StdRng::seed_from_u64(seed);
        let m = parse(&mixed_module(&mut rng)).unwrap();
        let run = |m: &Module| qiro::resource::interp::Interpreter::new(m, qiro::resource::interp::NoQuantum)
            .with_step_limit(100_000)
            .run("f0", vec![Val::Int(a), Val::Int(b)])
            .map(|o| o.returns);
        let Ok(want) = run(&m) else { return Ok(()) };
        let mut cur = m;
        for st in [Stage::Canonicalize, Stage::Cse, Stage::Inline, Stage::Unroll(Some(2)), Stage::Canonicalize] {
            cur = stage(cur, st);
            let got = run(&cur).ok();
            prop_assert_eq!(got.as_ref(), Some(&want), "{}", st);
        }
    }

    #[test]
    fn lower_adj_keeps_hermitian_gates_bare(seed in any::<u64>()) {
        let o = Opts { meta: false, controlled: false, ..Opts::default() };
        let mut rng = StdRng::seed_from_u64(seed);
        let n = 1 + (seed % 4) as usize;
        let mut src = Gen::new(&mut rng).qs_circuit("c", n, &o);
        src.push_str(&driver("main", "c", n, Some(1), true, false));
        let m = stage(parse(&src).unwrap(), Stage::LowerAdj);
        let adj = m.lookup("c__adj").expect("adjoint circuit");
        for op in m.nested_ops(adj) {
            if let OpKind::Gate(g) = m.kind(op) {
                if g.is_hermitian() {
                    prop_assert!(m.op(op).operands.iter().any(|v| m.ty(*v).is_quantum_data()),
                        "hermitian {} became a gate value", g.name());
                }
            }
        }
        let herm = |m: &Module, f| m.nested_ops(f).into_iter().filter(|o| matches!(m.kind(*o), OpKind::Gate(g) if g.is_hermitian())).count();
        prop_assert_eq!(herm(&m, adj), herm(&m, m.lookup("c").unwrap()));
    }

    #[test]
    fn gate_opt_never_grows(seed in any::<u64>()) {
        let (src, _) = qs_program(seed, Opts { loops: false, ifs: false, ..Opts::default() });
        let m = stage(parse(&src).unwrap(), Stage::Canonicalize);
        let before: usize = native_gates(&m).values().sum();
        let after: usize = native_gates(&stage(m, Stage::GateOpt)).values().sum();
        prop_assert!(after <= before);
    }

    #[test]
    fn straight_line_counts_match_a_walk(seed in any::<u64>()) {
        let o = Opts { loops: false, ifs: false, meta: false, controlled: false, ..Opts::default() };
        let (src, _) = qs_program(seed, o);
        let m = parse(&src).unwrap();
        // each gate value is applied exactly once here
        let mut walk: BTreeMap<String, u64> = BTreeMap::new();
        for op in m.walk_all() {
            if let OpKind::Gate(g) = m.kind(op) {
                *walk.entry(g.name().to_string()).or_insert(0) += 1;
            }
        }
        let p = Pipeline { stages: vec![Stage::CountResources], ..Pipeline::default() };
        let r = estimate(&src, Some("main"), &[], &p).unwrap();
        prop_assert_eq!(&r.counts, &walk);
        let again = estimate(&src, Some("main"), &[], &p).unwrap();
        prop_assert_eq!(r.to_json(), again.to_json());
    }

    #[test]
    fn measured_branches_count_the_maximum(
        xs in prop::collection::vec(0usize..4, 0..6),
        ys in prop::collection::vec(0usize..4, 0..6),
    ) {
        const G: [(&str, &str); 4] = [("H", "H"), ("X", "X"), ("T", "T"), ("Rz", "Rz(0.5)")];
        let body = |p: &str, gs: &[usize]| {
            let mut s = String::new();
            let mut cur = "%m".to_string();
            for (i, g) in gs.iter().enumerate() {
                s.push_str(&format!("    %{p}{i} = qs.{} {cur} : !qs.qstate\n", G[*g].1));
                cur = format!("%{p}{i}");
            }
            (s, cur)
        };
        let (a, ra) = body("a", &xs);
        let (b, rb) = body("b", &ys);
        let src = format!(
            "qs.circ @main() {{\n  %q = qs.alloc : !qs.qstate\n  %c, %m = qs.meas %q : i1, !qs.qstate\n  \
             %o = scf.if %c -> (!qs.qstate) {{\n{a}    scf.yield {ra}\n  }} else {{\n{b}    scf.yield {rb}\n  }}\n  \
             qs.free %o\n  return\n}}\n"
        );
        let p = Pipeline { stages: vec![Stage::CountResources], ..Pipeline::default() };
        let r = estimate(&src, Some("main"), &[], &p).unwrap();
        for (k, (name, _)) in G.iter().enumerate() {
            let count = |gs: &[usize]| gs.iter().filter(|g| **g == k).count() as u64;
            let want = count(&xs).max(count(&ys));
            prop_assert!(r.count(name) >= want, "{}: {} < {}\n{}", name, r.count(name), want, src);
        }
    }
}

#[test]
fn default_pipeline_is_deterministic_on_shor() {
    let src = common::corpus("shor.qiro");
    let args = vec![("n".into(), ArgValue::Int(3)), ("N".into(), ArgValue::Int(7)), ("a".into(), ArgValue::Int(2))];
    let p = Pipeline { stages: default_stages(), ..Pipeline::default() };
    let a = estimate(&src, None, &args, &p).unwrap();
    let b = estimate(&src, None, &args, &p).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn lexer_positions_are_one_based() {
    let src = common::corpus("shor.qiro");
    let mut rng = StdRng::seed_from_u64(7);
    use rand::Rng;
    for _ in 0..300 {
        let mut bytes: Vec<char> = src.chars().collect();
        for _ in 0..rng.gen_range(1..4) {
            let i = rng.gen_range(0..bytes.len());
            bytes[i] = ['%', '{', '}', '(', 'x', '\n', '@', '1', ':'][rng.gen_range(0..9)];
        }
        let s: String = bytes.into_iter().collect();
        if let Err(ds) = parse(&s) {
            assert!(!ds.is_empty());
            assert!(ds.iter().all(|d| d.line >= 1 && d.column >= 1));
        }
    }
}
