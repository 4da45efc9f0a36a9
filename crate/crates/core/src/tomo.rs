//! Full Pauli-basis state tomography: collection, linear inversion,
//! projection onto density matrices, and fidelity.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{build_init, build_step, CircuitError, InitialStateSpec};
use crate::measure::PauliWord;
use crate::noise::NoiseModel;
use crate::pauli::{phase_to_complex, Letter, PauliString};
use crate::sim::{sample, word_probabilities_noisy, CompiledNoise, DensityMatrix, SimError, StateVector};

pub const TOMO_MAX_SITES: usize = 6;
/// Eigenvalues below `−PSD_TOL` make a matrix invalid as a state.
pub const PSD_TOL: f64 = 1e-8;
/// Eigenvalues below this are roundoff; their square roots would not be.
const ZERO_EIG: f64 = 1e-12;

type C = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("{0} sites exceeds the tomography budget of {TOMO_MAX_SITES}")]
    Budget(usize),
    #[error("matrix is not a valid density matrix (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("incomplete basis data: {got} of {expected} bases")]
    Incomplete { got: usize, expected: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Finite shots per basis, or the exact outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TomoMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Outcome frequencies in each of the `3^N` Pauli bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyData {
    pub n_sites: usize,
    /// `None` in exact mode.
    pub shots: Option<u64>,
    pub bases: Vec<(PauliWord, Vec<f64>)>,
}

/// All words over {X, Y, Z}, site 1 varying slowest.
pub fn all_words(n: usize) -> Vec<PauliWord> {
    (0..3usize.pow(n as u32))
        .map(|k| {
            let letters = (0..n).map(|j| Letter::NON_IDENTITY[(k / 3usize.pow((n - 1 - j) as u32)) % 3]).collect();
            PauliWord::new(letters).expect("no identity letters")
        })
        .collect()
}

/// Measure `rho` in every Pauli basis.
pub fn collect(rho: &DensityMatrix, mode: TomoMode, noise: &CompiledNoise) -> Result<TomographyData, TomoError> {
    use crate::sim::QuantumState;
    let n = rho.n_sites();
    if n > TOMO_MAX_SITES {
        return Err(TomoError::Budget(n));
    }
    let words = all_words(n);
    let bases = words
        .into_par_iter()
        .enumerate()
        .map(|(k, w)| {
            let probs = word_probabilities_noisy(rho, w.letters(), noise)?;
            let freqs = match mode {
                TomoMode::Exact => probs,
                TomoMode::Shots { shots, seed } => {
                    let counts = sample(&probs, n, shots, seed, k as u64, noise.readout_flip())?;
                    let mut f = vec![0.0; probs.len()];
                    for (b, c) in counts.iter() {
                        f[b as usize] = c as f64 / shots as f64;
                    }
                    f
                }
            };
            Ok((w, freqs))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let shots = match mode {
        TomoMode::Exact => None,
        TomoMode::Shots { shots, .. } => Some(shots),
    };
    Ok(TomographyData { n_sites: n, shots, bases })
}

/// `v[S] ← Σ_b v[b] (−1)^{|b ∧ S|}`.
fn walsh(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for chunk in v.chunks_exact_mut(2 * h) {
            let (a, b) = chunk.split_at_mut(h);
            for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                let (p, q) = (*x, *y);
                *x = p + q;
                *y = p - q;
            }
        }
        h *= 2;
    }
}

/// `ρ* = 2^{−N} Σ_P m_P P`, each `m_P` averaged over every basis that
/// measures `P`, and `m_I = 1`.
pub fn linear_inversion(data: &TomographyData) -> Result<DMatrix<C>, TomoError> {
    let n = data.n_sites;
    let expected = 3usize.pow(n as u32);
    if data.bases.len() != expected {
        return Err(TomoError::Incomplete { got: data.bases.len(), expected });
    }
    let d = 1usize << n;
    // Pauli keyed by x | z << n.
    let mut sum = vec![0.0f64; d * d];
    let mut count = vec![0u32; d * d];
    for (w, freqs) in &data.bases {
        if freqs.len() != d {
            return Err(TomoError::SizeMismatch(freqs.len(), d));
        }
        let (wx, wz) = w.letters().iter().enumerate().fold((0usize, 0usize), |(x, z), (j, l)| {
            let (bx, bz) = l.bits();
            (x | (bx as usize) << j, z | (bz as usize) << j)
        });
        let mut e = freqs.clone();
        walsh(&mut e);
        for (s, v) in e.iter().enumerate() {
            let key = (wx & s) | (wz & s) << n;
            sum[key] += v;
            count[key] += 1;
        }
    }
    let mut rho = DMatrix::<C>::zeros(d, d);
    for key in 0..d * d {
        let m = if key == 0 { 1.0 } else { sum[key] / count[key] as f64 };
        if m == 0.0 {
            continue;
        }
        let p = PauliString::from_masks(n, (key % d) as u64, (key / d) as u64, 0).expect("masks fit");
        for i in 0..d {
            let (j, k) = p.apply_to_basis(i as u64);
            rho[(j as usize, i)] += phase_to_complex(k) * (m / d as f64);
        }
    }
    Ok(rho)
}

/// Closest density matrix in Frobenius norm: keep the eigenvectors,
/// zero the most negative eigenvalues and spread their weight evenly
/// over the rest.
pub fn psd_project(m: &DMatrix<C>) -> Result<DensityMatrix, TomoError> {
    let d = m.nrows();
    let n = d.trailing_zeros() as usize;
    let herm = (m + m.adjoint()) * C::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut lambda = vec![0.0; d];
    let mut acc = 0.0;
    let mut i = d;
    while i > 0 && mu[i - 1] + acc / (i as f64) < 0.0 {
        acc += mu[i - 1];
        i -= 1;
    }
    for j in 0..i {
        lambda[j] = mu[j] + acc / i as f64;
    }
    let mut out = DMatrix::<C>::zeros(d, d);
    for (rank, &idx) in order.iter().enumerate() {
        if lambda[rank] == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(idx);
        out += v * v.adjoint() * C::new(lambda[rank], 0.0);
    }
    let entries = (0..d).flat_map(|r| (0..d).map(move |c| (r, c))).map(|rc| out[rc]).collect();
    Ok(DensityMatrix::from_entries(n, entries)?)
}

fn sqrt_psd(m: &DMatrix<C>) -> Result<DMatrix<C>, TomoError> {
    let eig = ((m + m.adjoint()) * C::new(0.5, 0.0)).symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(TomoError::NotPositive(min));
    }
    let d = m.nrows();
    let mut out = DMatrix::<C>::zeros(d, d);
    for (i, l) in eig.eigenvalues.iter().enumerate() {
        if *l > ZERO_EIG {
            let v = eig.eigenvectors.column(i);
            out += v * v.adjoint() * C::new(l.sqrt(), 0.0);
        }
    }
    Ok(out)
}

/// `F(ρ, σ) = (tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64, TomoError> {
    if rho.dim() != sigma.dim() {
        return Err(TomoError::SizeMismatch(rho.dim(), sigma.dim()));
    }
    let s = sqrt_psd(&rho.to_matrix())?;
    let sig = sigma.to_matrix();
    let min = ((&sig + sig.adjoint()) * C::new(0.5, 0.0)).symmetric_eigenvalues().min();
    if min < -PSD_TOL {
        return Err(TomoError::NotPositive(min));
    }
    let inner = &s * sig * &s;
    let ev = ((&inner + inner.adjoint()) * C::new(0.5, 0.0)).symmetric_eigenvalues();
    let t: f64 = ev.iter().filter(|l| **l > ZERO_EIG).map(|l| l.sqrt()).sum();
    Ok((t * t).clamp(0.0, 1.0))
}

/// Collect, invert and project.
pub fn reconstruct(rho: &DensityMatrix, mode: TomoMode, noise: &CompiledNoise) -> Result<DensityMatrix, TomoError> {
    psd_project(&linear_inversion(&collect(rho, mode, noise)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFidelity {
    pub a: String,
    pub b: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyReport {
    pub n_sites: usize,
    pub alpha: f64,
    pub mode: TomoMode,
    pub depths: Vec<usize>,
    /// Per state: fidelity of the reconstructed state with the ideal initial state.
    pub self_fidelity: BTreeMap<String, Vec<f64>>,
    pub pair_fidelity: Vec<PairFidelity>,
}

/// Evolve each labelled initial state under noise, reconstruct it by
/// tomography at every requested depth, and tabulate fidelities.
pub fn fidelity_trajectories(
    states: &[(String, InitialStateSpec)],
    alpha: f64,
    depths: &[usize],
    noise: &NoiseModel,
    mode: TomoMode,
) -> Result<TomographyReport, TomoError> {
    let n = states.first().map_or(0, |s| s.1.n_sites());
    if n > TOMO_MAX_SITES {
        return Err(TomoError::Budget(n));
    }
    let mut depths = depths.to_vec();
    depths.sort_unstable();
    depths.dedup();
    let compiled = CompiledNoise::new(noise)?;
    let step = build_step(n, alpha)?;
    let per_state = states
        .par_iter()
        .map(|(_, spec)| -> Result<(Vec<DensityMatrix>, Vec<f64>), TomoError> {
            if spec.n_sites() != n {
                return Err(TomoError::SizeMismatch(spec.n_sites(), n));
            }
            let ideal = DensityMatrix::from_pure(&StateVector::prepared(spec)?)?;
            let mut rho = DensityMatrix::zero(n)?;
            compiled.apply_gates(&mut rho, &build_init(spec)?, true);
            let mut done = 0;
            let mut recon = Vec::new();
            let mut selff = Vec::new();
            for &d in &depths {
                while done < d {
                    compiled.apply_gates(&mut rho, &step, false);
                    done += 1;
                }
                let r = reconstruct(&rho, mode, &compiled)?;
                selff.push(fidelity(&ideal, &r)?);
                recon.push(r);
            }
            Ok((recon, selff))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut self_fidelity = BTreeMap::new();
    for ((label, _), (_, s)) in states.iter().zip(&per_state) {
        self_fidelity.insert(label.clone(), s.clone());
    }
    let mut pair_fidelity = Vec::new();
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            let values = (0..depths.len())
                .map(|k| fidelity(&per_state[i].0[k], &per_state[j].0[k]))
                .collect::<Result<Vec<_>, _>>()?;
            pair_fidelity.push(PairFidelity { a: states[i].0.clone(), b: states[j].0.clone(), values });
        }
    }
    Ok(TomographyReport { n_sites: n, alpha, mode, depths, self_fidelity, pair_fidelity })
}
