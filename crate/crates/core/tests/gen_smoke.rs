mod common;

use common::gen::{mixed_module, Gen, Opts};
use rand::rngs::StdRng;
use rand::SeedableRng;

#[test]
fn generated_programs_verify() {
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = if seed % 2 == 0 {
            mixed_module(&mut rng)
        } else {
            let mut g = Gen::new(&mut rng);
            g.qs_circuit("c", 3, &Opts::default())
        };
        let m = qiro::text::parse(&src).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        let d = qiro::ir::verify(&m);
        assert!(d.is_empty(), "seed {seed}: {d:?}\n{src}");
    }
}

#[test]
fn mem_modules_verify() {
    for seed in 0..200u64 {
        let mut rng = StdRng::seed_from_u64(seed);
        let src = common::gen::mem_module(&mut rng);
        let m = qiro::text::parse(&src).unwrap_or_else(|e| panic!("seed {seed}: {e:?}\n{src}"));
        common::trace(&m, "main", &[]);
    }
}
