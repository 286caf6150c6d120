//! Dense unitary of a small program, built column by column.
//!
//! Qubit `k` is bit `k` of the basis index. Allocation reuses the lowest
//! released index first. Ancillas are not reset, so only columns with fresh
//! ancillas at 0 are meaningful for programs that allocate inside circuits.

use num_complex::Complex64 as C;
use qiro::ir::Gate;
use qiro::resource::interp::{GateApp, QuantumBackend, Trap, Val};

pub struct Matrix {
    pub qubits: usize,
    /// Images of the tracked basis states.
    pub cols: Vec<Vec<C>>,
    next: u64,
    released: std::collections::BTreeSet<u64>,
}

type U2 = [[C; 2]; 2];

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn single(g: Gate, angle: Option<f64>) -> U2 {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = angle.unwrap_or(0.0);
    let (ch, sh) = ((a / 2.0).cos(), (a / 2.0).sin());
    match g {
        Gate::H => [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]],
        Gate::X | Gate::CX => [[z, o], [o, z]],
        Gate::Y => [[z, c(0.0, -1.0)], [c(0.0, 1.0), z]],
        Gate::Z => [[o, z], [z, c(-1.0, 0.0)]],
        Gate::S => [[o, z], [z, c(0.0, 1.0)]],
        Gate::T => [[o, z], [z, C::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
        Gate::R => [[o, z], [z, C::from_polar(1.0, a)]],
        Gate::Rx => [[c(ch, 0.0), c(0.0, -sh)], [c(0.0, -sh), c(ch, 0.0)]],
        Gate::Ry => [[c(ch, 0.0), c(-sh, 0.0)], [c(sh, 0.0), c(ch, 0.0)]],
        Gate::Rz => [[C::from_polar(1.0, -a / 2.0), z], [z, C::from_polar(1.0, a / 2.0)]],
        Gate::SWAP => unreachable!("two-qubit gate"),
    }
}

fn dagger(u: U2) -> U2 {
    [[u[0][0].conj(), u[1][0].conj()], [u[0][1].conj(), u[1][1].conj()]]
}

impl Matrix {
    pub fn identity(qubits: usize) -> Matrix {
        Matrix::basis(qubits, 0..1usize << qubits)
    }

    /// Tracks only the images of basis states `xs`.
    pub fn basis(qubits: usize, xs: impl IntoIterator<Item = usize>) -> Matrix {
        let d = 1usize << qubits;
        let cols = xs
            .into_iter()
            .map(|x| {
                let mut v = vec![C::new(0.0, 0.0); d];
                v[x] = C::new(1.0, 0.0);
                v
            })
            .collect();
        Matrix { qubits, cols, next: 0, released: Default::default() }
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    fn apply_u(&mut self, u: U2, ctl: usize, t: usize) {
        let tb = 1usize << t;
        for col in &mut self.cols {
            for i in 0..col.len() {
                if i & tb == 0 && i & ctl == ctl {
                    let (a, b) = (col[i], col[i | tb]);
                    col[i] = u[0][0] * a + u[0][1] * b;
                    col[i | tb] = u[1][0] * a + u[1][1] * b;
                }
            }
        }
    }

    fn apply_swap(&mut self, ctl: usize, a: usize, b: usize) {
        let (ab, bb) = (1usize << a, 1usize << b);
        for col in &mut self.cols {
            for i in 0..col.len() {
                if i & ctl == ctl && i & ab != 0 && i & bb == 0 {
                    col.swap(i, i ^ ab ^ bb);
                }
            }
        }
    }

    pub fn apply(&mut self, g: &GateApp) -> Result<(), Trap> {
        let n = self.qubits;
        let q = |x: u64| -> Result<usize, Trap> {
            if (x as usize) < n {
                Ok(x as usize)
            } else {
                Err(Trap::Unsupported(format!("qubit {x} outside the simulated range")))
            }
        };
        let mut ctl = 0usize;
        for &x in &g.controls {
            ctl |= 1 << q(x)?;
        }
        match g.gate {
            Gate::SWAP => {
                let (a, b) = (q(g.targets[0])?, q(g.targets[1])?);
                self.apply_swap(ctl, a, b)
            }
            Gate::CX => {
                let t = q(g.targets[1])?;
                self.apply_u(single(Gate::X, None), ctl | 1 << q(g.targets[0])?, t)
            }
            _ => {
                let mut u = single(g.gate, g.angle);
                if g.adjoint {
                    u = dagger(u);
                }
                for &t in &g.targets {
                    self.apply_u(u, ctl, q(t)?);
                }
            }
        }
        Ok(())
    }

    /// Equal up to one global phase, entrywise within `tol`.
    pub fn equivalent(&self, other: &Matrix, tol: f64) -> bool {
        if self.qubits != other.qubits {
            return false;
        }
        let mut phase = None;
        for (ca, cb) in self.cols.iter().zip(&other.cols) {
            for (a, b) in ca.iter().zip(cb) {
                if phase.is_none() && a.norm() > 1e-6 {
                    phase = Some(b / a);
                }
            }
        }
        let Some(p) = phase else { return false };
        if (p.norm() - 1.0).abs() > tol {
            return false;
        }
        self.cols.iter().zip(&other.cols).all(|(ca, cb)| ca.iter().zip(cb).all(|(a, b)| (a * p - b).norm() < tol))
    }

    /// Basis state the `k`-th tracked column maps to, if it is one up to
    /// phase.
    pub fn image(&self, k: usize) -> Option<usize> {
        let col = &self.cols[k];
        let y = (0..col.len()).max_by(|a, b| col[*a].norm().total_cmp(&col[*b].norm()))?;
        ((col[y].norm() - 1.0).abs() < 1e-6).then_some(y)
    }
}

impl QuantumBackend for Matrix {
    fn alloc(&mut self) -> Result<u64, Trap> {
        if let Some(q) = self.released.pop_first() {
            return Ok(q);
        }
        self.next += 1;
        Ok(self.next - 1)
    }
    fn free(&mut self, q: u64) -> Result<(), Trap> {
        self.released.insert(q);
        Ok(())
    }
    fn gate(&mut self, g: GateApp) -> Result<(), Trap> {
        self.apply(&g)
    }
    fn measure(&mut self, _: u64) -> Result<Val, Trap> {
        Err(Trap::Unsupported("measurement in a unitary".into()))
    }
}

/// Unitary of `entry` on `qubits` qubits.
pub fn unitary(m: &qiro::ir::Module, entry: &str, args: &[Val], qubits: usize) -> Result<Matrix, Trap> {
    run(m, entry, args, Matrix::identity(qubits))
}

pub fn run(m: &qiro::ir::Module, entry: &str, args: &[Val], start: Matrix) -> Result<Matrix, Trap> {
    qiro::resource::interp::Interpreter::new(m, start).run_with_backend(entry, args.to_vec()).map(|(_, b)| b)
}
