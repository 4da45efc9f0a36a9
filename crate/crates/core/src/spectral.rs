//! One-step channel as a dense superoperator: spectrum, fixed point and
//! late-time decay rate.
//!
//! Vectorization is row-major, `|ρ⟩ = Σ ρ_{ab} |a⟩⊗|b⟩`, so a unitary acts
//! as `U ⊗ U*` and a Kraus set as `Σ D ⊗ D*`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::Gate;
use crate::noise::{KrausChannel, NoiseModel};
use crate::sim::{DensityMatrix, SimError};

/// Largest chain for the dense construction (`4^N` rows).
pub const SUPEROPERATOR_MAX_SITES: usize = 4;
/// Eigenvalues this close to 1 count as the fixed point.
pub const UNIT_TOL: f64 = 1e-8;

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("{n_sites} sites exceeds the dense superoperator budget of {max}")]
    Budget { n_sites: usize, max: usize },
    #[error("eigenvalue solver failed to converge")]
    Solver,
    #[error("multiple steady states: {0} eigenvalues within tolerance of 1")]
    MultipleSteadyStates(usize),
    #[error("no eigenvalue at 1 found (closest distance {0:e})")]
    NoFixedPoint(f64),
    #[error("fixed point is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Result of [`decay_rate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayRate {
    Rate { gamma: f64, lambda_modulus: f64 },
    NoDecay,
}

impl DecayRate {
    pub fn gamma(&self) -> Option<f64> {
        match self {
            DecayRate::Rate { gamma, .. } => Some(*gamma),
            DecayRate::NoDecay => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperOperator {
    n_sites: usize,
    matrix: DMatrix<C>,
}

/// Row-sparse form of a Kronecker factor.
struct SparseRows(Vec<Vec<(usize, C)>>);

impl SparseRows {
    fn from_dense(m: &DMatrix<C>) -> Self {
        Self(
            (0..m.nrows())
                .map(|r| (0..m.ncols()).filter(|&c| m[(r, c)] != C::new(0.0, 0.0)).map(|c| (c, m[(r, c)])).collect())
                .collect(),
        )
    }

    /// `self · rhs`.
    fn mul(&self, rhs: &DMatrix<C>) -> DMatrix<C> {
        let mut out = DMatrix::zeros(rhs.nrows(), rhs.ncols());
        for (r, row) in self.0.iter().enumerate() {
            for &(k, v) in row {
                for col in 0..rhs.ncols() {
                    out[(r, col)] += v * rhs[(k, col)];
                }
            }
        }
        out
    }
}

/// Local matrix on `sites` (first site = high local bit) lifted to `n` sites,
/// with site `j` stored in bit `j − 1`.
pub fn embed_local(n: usize, sites: &[usize], m: &DMatrix<C>) -> DMatrix<C> {
    let dim = 1usize << n;
    let k = sites.len();
    let mut out = DMatrix::zeros(dim, dim);
    for col in 0..dim {
        let lc = sites.iter().fold(0, |acc, s| (acc << 1) | ((col >> (s - 1)) & 1));
        for lr in 0..1usize << k {
            let v = m[(lr, lc)];
            if v == C::new(0.0, 0.0) {
                continue;
            }
            let row = sites.iter().enumerate().fold(col, |r, (pos, s)| {
                let bit = (lr >> (k - 1 - pos)) & 1;
                (r & !(1 << (s - 1))) | (bit << (s - 1))
            });
            out[(row, col)] += v;
        }
    }
    out
}

fn unitary_factor(n: usize, g: &Gate) -> SparseRows {
    let u = embed_local(n, &g.sites(), &g.local_matrix());
    SparseRows::from_dense(&u.kronecker(&u.map(|x| x.conj())))
}

fn kraus_factor(n: usize, site: usize, ch: &KrausChannel) -> SparseRows {
    let dim = 1usize << (2 * n);
    let sum = ch.operators().iter().fold(DMatrix::zeros(dim, dim), |acc, d| {
        let e = embed_local(n, &[site], d);
        acc + e.kronecker(&e.map(|x| x.conj()))
    });
    SparseRows::from_dense(&sum)
}

/// Superoperator of one evolution step, each gate followed by its channel.
pub fn vectorize_step(n_sites: usize, gates: &[Gate], noise: &NoiseModel) -> Result<SuperOperator, SpectralError> {
    if n_sites == 0 || n_sites > SUPEROPERATOR_MAX_SITES {
        return Err(SpectralError::Budget { n_sites, max: SUPEROPERATOR_MAX_SITES });
    }
    noise.validate().map_err(SimError::from)?;
    let dim = 1usize << (2 * n_sites);
    let mut s = DMatrix::<C>::identity(dim, dim);
    for g in gates {
        s = unitary_factor(n_sites, g).mul(&s);
        let channel = if g.is_two_site() { &noise.after_two_qubit } else { &noise.after_one_qubit };
        if let Some(ch) = channel {
            for site in g.sites() {
                s = kraus_factor(n_sites, site, ch).mul(&s);
            }
        }
    }
    Ok(SuperOperator { n_sites, matrix: s })
}

impl SuperOperator {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.matrix
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix, SpectralError> {
        let v = nalgebra::DVector::from_column_slice(rho.entries());
        let out = &self.matrix * v;
        Ok(DensityMatrix::from_entries(self.n_sites, out.as_slice().to_vec())?)
    }
}

/// All eigenvalues, sorted by descending modulus (ties by argument).
pub fn spectrum(op: &SuperOperator) -> Result<Vec<C>, SpectralError> {
    let schur = op.matrix.clone().try_schur(1e-14, 10_000).ok_or(SpectralError::Solver)?;
    let (_, t) = schur.unpack();
    let mut ev: Vec<C> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
    Ok(ev)
}

/// Number of eigenvalues within [`UNIT_TOL`] of 1.
pub fn unit_multiplicity(ev: &[C]) -> usize {
    ev.iter().filter(|l| (*l - C::new(1.0, 0.0)).norm() < UNIT_TOL).count()
}

/// Steady state of the channel, from the null space of `Φ̃ − 1`.
pub fn fixed_point(op: &SuperOperator) -> Result<DensityMatrix, SpectralError> {
    let ev = spectrum(op)?;
    match unit_multiplicity(&ev) {
        0 => {
            let d = ev.iter().map(|l| (l - C::new(1.0, 0.0)).norm()).fold(f64::INFINITY, f64::min);
            return Err(SpectralError::NoFixedPoint(d));
        }
        1 => {}
        k => return Err(SpectralError::MultipleSteadyStates(k)),
    }
    let dim = op.matrix.nrows();
    let shifted = &op.matrix - DMatrix::<C>::identity(dim, dim);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.ok_or(SpectralError::Solver)?;
    let (imin, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
    let v: Vec<C> = v_t.row(imin).iter().map(|x| x.conj()).collect();
    let d = 1usize << op.n_sites;
    // The null vector carries an arbitrary phase; fixing the trace removes it.
    let m = DMatrix::from_row_slice(d, d, &v);
    let m = &m / m.trace();
    let rho = (&m + m.adjoint()) * C::new(0.5, 0.0);
    let entries: Vec<C> = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|rc| rho[rc]).collect();
    let out = DensityMatrix::from_entries(op.n_sites, entries)?;
    let min = out.min_eigenvalue();
    if min < -1e-8 {
        return Err(SpectralError::NotPositive(min));
    }
    Ok(out)
}

/// `−ln |λ₁|` for the largest modulus strictly below `1 − 1e−8`.
pub fn decay_rate(ev: &[C]) -> DecayRate {
    ev.iter()
        .map(|l| l.norm())
        .filter(|m| *m < 1.0 - UNIT_TOL)
        .fold(None, |best: Option<f64>, m| Some(best.map_or(m, |b| b.max(m))))
        .map_or(DecayRate::NoDecay, |m| DecayRate::Rate { gamma: -m.ln(), lambda_modulus: m })
}

/// Approximate `|λ₁|` by iterating the channel on a traceless operator:
/// the geometric-mean growth over steps `burn_in..burn_in + span`.
///
/// Works beyond the dense budget; only the modulus is estimated.
pub fn power_estimate_modulus(
    n_sites: usize,
    step: &[Gate],
    noise: &NoiseModel,
    burn_in: usize,
    span: usize,
) -> Result<f64, SpectralError> {
    let compiled = crate::sim::CompiledNoise::new(noise)?;
    let d = 1usize << n_sites;
    // Staggered magnetization plus a hopping term: traceless, generic enough
    // to overlap the slowest modes.
    let mut data = vec![C::new(0.0, 0.0); d * d];
    for i in 0..d {
        let m: f64 = (0..n_sites).map(|j| if i >> j & 1 == 0 { 1.0 } else { -1.0 } * (j as f64 + 1.0)).sum();
        data[i * d + i] = C::new(m, 0.0);
        let k = i ^ 0b11;
        data[i * d + k] += C::new(0.3, 0.1 * (i as f64).sin());
        data[k * d + i] += C::new(0.3, -0.1 * (i as f64).sin());
    }
    let scale = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    data.iter_mut().for_each(|v| *v /= scale);
    // Trace is the weight on the fixed point (the identity is the left
    // eigenvector at 1), so zeroing it each step keeps roundoff from
    // feeding that mode. Renormalizing keeps the iterate representable.
    let mut log_growth = 0.0;
    for k in 0..burn_in + span {
        let mut x = DensityMatrix::from_entries(n_sites, data)?;
        compiled.apply_gates(&mut x, step, false);
        data = x.entries().to_vec();
        let tr = (0..d).map(|i| data[i * d + i]).sum::<C>() / d as f64;
        for i in 0..d {
            data[i * d + i] -= tr;
        }
        let norm = data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        data.iter_mut().for_each(|v| *v /= norm);
        if k >= burn_in {
            log_growth += norm.ln();
        }
    }
    Ok((log_growth / span as f64).exp())
}
