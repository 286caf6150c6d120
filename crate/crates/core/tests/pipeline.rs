mod common;

use qiro::driver::{estimate, Pipeline};
use qiro::quantum::GateOpt;
use qiro::resource::ArgValue;

fn shor_args(n: i64) -> Vec<(String, ArgValue)> {
    vec![("n".into(), ArgValue::Int(n)), ("N".into(), ArgValue::Int((1 << n) - 1)), ("a".into(), ArgValue::Int(2))]
}

#[test]
fn shor_counts_against_trace() {
    let src = common::corpus("shor.qiro");
    let m = qiro::text::parse(&src).unwrap();
    for n in 2..=5 {
        let t = common::trace(&m, "mlir_main", &[n, (1 << n) - 1, 2]);
        let raw = common::rotations(t.gates());
        let oracle = common::rotations(common::peephole(&t.events).iter());
        let off = Pipeline { gate_opt: GateOpt::none(), ..Pipeline::default() };
        let r_off = estimate(&src, None, &shor_args(n), &off).unwrap();
        let r_on = estimate(&src, None, &shor_args(n), &Pipeline::default()).unwrap();
        let nolb = Pipeline { gate_opt: GateOpt { loop_boundary: false, ..GateOpt::default() }, ..Pipeline::default() };
        let r_nolb = estimate(&src, None, &shor_args(n), &nolb).unwrap();
        eprintln!("n={n} raw={raw} oracle={oracle} off={} on={} nolb={}", r_off.rotations(), r_on.rotations(), r_nolb.rotations());
        assert_eq!(r_off.rotations(), raw as u64);
    }
}
