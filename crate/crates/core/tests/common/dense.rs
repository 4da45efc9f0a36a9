//! Dense reference implementations built from explicit Kronecker products.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use trotterlab::circuit::{Gate, InitialStateSpec};
use trotterlab::pauli::Letter;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Single-site or two-site matrix, written out independently of the library.
pub fn local(g: &Gate) -> DMatrix<C> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::PauliX(_) => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Gate::Hadamard(_) => DMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]),
        Gate::PhaseS(_) => DMatrix::from_diagonal(&DVector::from_vec(vec![c(1., 0.), c(0., 1.)])),
        Gate::PhaseSInverse(_) => DMatrix::from_diagonal(&DVector::from_vec(vec![c(1., 0.), c(0., -1.)])),
        Gate::RotZ { angle, .. } => DMatrix::from_diagonal(&DVector::from_vec(vec![
            C::from_polar(1.0, -angle / 2.0),
            C::from_polar(1.0, angle / 2.0),
        ])),
        Gate::ControlledNot { .. } => {
            let mut m = DMatrix::zeros(4, 4);
            for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                m[(i, j)] = c(1., 0.);
            }
            m
        }
    }
}

/// Embed a local matrix on `sites` (first site = most significant local bit)
/// into an `n`-site register where site `j` is bit `j − 1`.
pub fn embed(n: usize, sites: &[usize], m: &DMatrix<C>) -> DMatrix<C> {
    let dim = 1usize << n;
    let k = sites.len();
    let local_index = |i: usize| -> usize { sites.iter().fold(0, |acc, s| (acc << 1) | ((i >> (s - 1)) & 1)) };
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = local_index(col);
        for lr in 0..(1 << k) {
            let v = m[(lr, lc)];
            if v == c(0., 0.) {
                continue;
            }
            let mut row = col;
            for (pos, s) in sites.iter().enumerate() {
                let bit = (lr >> (k - 1 - pos)) & 1;
                row = (row & !(1 << (s - 1))) | (bit << (s - 1));
            }
            out[(row, col)] += v;
        }
    }
    out
}

pub fn gate_unitary(n: usize, g: &Gate) -> DMatrix<C> {
    embed(n, &g.sites(), &local(g))
}

pub fn circuit_unitary(n: usize, gates: &[Gate]) -> DMatrix<C> {
    gates.iter().fold(DMatrix::identity(1 << n, 1 << n), |u, g| gate_unitary(n, g) * u)
}

/// Eigenvector of `letter` with eigenvalue `(−1)^bit`.
pub fn eigenvector(letter: Letter, bit: u8) -> [C; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s = if bit == 0 { 1.0 } else { -1.0 };
    match letter {
        Letter::Z if bit == 0 => [c(1., 0.), c(0., 0.)],
        Letter::Z => [c(0., 0.), c(1., 0.)],
        Letter::X => [c(h, 0.), c(s * h, 0.)],
        Letter::Y => [c(h, 0.), c(0., s * h)],
        Letter::I => panic!("no identity eigenbasis"),
    }
}

pub fn product_state(spec: &InitialStateSpec) -> DVector<C> {
    let n = spec.n_sites();
    DVector::from_fn(1 << n, |i, _| (0..n).map(|j| eigenvector(spec.letters[j], spec.bits[j])[(i >> j) & 1]).product())
}

pub fn pauli_letter(l: Letter) -> DMatrix<C> {
    match l {
        Letter::I => DMatrix::identity(2, 2),
        Letter::X => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
        Letter::Y => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]),
        Letter::Z => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]),
    }
}

/// `Σ D ρ D†` with each Kraus operator embedded on `site`.
pub fn kraus_on_site(n: usize, rho: &DMatrix<C>, site: usize, ops: &[DMatrix<C>]) -> DMatrix<C> {
    ops.iter().fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, d| {
        let e = embed(n, &[site], d);
        acc + &e * rho * e.adjoint()
    })
}

/// Max entry distance between two matrices after removing a global phase.
pub fn phase_free_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    let (mut best, mut idx) = (0.0, (0, 0));
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            if b[(i, j)].norm() > best {
                best = b[(i, j)].norm();
                idx = (i, j);
            }
        }
    }
    let phase = a[idx] / b[idx];
    let phase = phase / phase.norm();
    (a - b * phase).camax()
}
