//! The Shor corpus circuits compute what their names say.

mod common;

use common::matrix::{run, Matrix};
use qiro::resource::interp::Val;

const DRIVERS: &str = "
q.circ @drv_add(%n: i64, %c: i64) {
  %r = q.allocreg(%n)
  q.call @addConstant(%r, %n, %c)
  q.freereg %r
  return
}
q.circ @drv_addmod(%n: i64, %c: i64, %N: i64) {
  %r = q.allocreg(%n)
  q.call @addCmodN(%r, %n, %c, %N)
  q.freereg %r
  return
}
q.circ @drv_mul(%n: i64, %c: i64, %N: i64) {
  %r = q.allocreg(%n)
  q.call @mulCmodN(%r, %n, %c, %N)
  q.freereg %r
  return
}
";

fn module() -> qiro::ir::Module {
    qiro::text::parse(&format!("{}\n{DRIVERS}", common::corpus("shor.qiro"))).unwrap()
}

fn ints(v: &[i64]) -> Vec<Val> {
    v.iter().map(|x| Val::Int(*x)).collect()
}

#[test]
fn add_constant_adds() {
    let m = module();
    let n = 4;
    for c in [0, 1, 5, -3, 11] {
        let u = run(&m, "drv_add", &ints(&[n, c]), Matrix::identity(n as usize)).unwrap();
        for x in 0..1usize << n {
            let want = (x as i64 + c).rem_euclid(1 << n) as usize;
            assert_eq!(u.image(x), Some(want), "x={x} c={c}");
        }
    }
}

#[test]
fn add_modular() {
    let m = module();
    let (n, big) = (4i64, 7i64);
    let xs: Vec<usize> = (0..big as usize).collect();
    for c in 0..big {
        let u = run(&m, "drv_addmod", &ints(&[n, c, big]), Matrix::basis(n as usize + 1, xs.clone())).unwrap();
        for (k, x) in xs.iter().enumerate() {
            let want = (*x as i64 + c) % big;
            assert_eq!(u.image(k), Some(want as usize), "x={x} c={c}");
        }
    }
}

#[test]
fn multiply_modular() {
    let m = module();
    let (n, big) = (3i64, 5i64);
    let xs: Vec<usize> = (0..big as usize).collect();
    for c in [1, 2, 3] {
        let q = 2 * n as usize + 2;
        let u = run(&m, "drv_mul", &ints(&[n, c, big]), Matrix::basis(q, xs.clone())).unwrap();
        for (k, x) in xs.iter().enumerate() {
            let want = (*x as i64 * c) % big;
            assert_eq!(u.image(k), Some(want as usize), "x={x} c={c}");
        }
    }
}
