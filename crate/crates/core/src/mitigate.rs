//! Readout-error correction through a calibration matrix, and zero-noise
//! extrapolation by CNOT folding.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charges::PauliPolynomial;
use crate::circuit::{Circuit, CircuitError, InitialStateSpec};
use crate::measure::{
    build_cover, collect_noisy, estimate, estimate_weighted, MeasureError, MeasurementPlan, WeightedRecord,
};
use crate::noise::NoiseModel;
use crate::sim::{
    apply_readout_flip, derive_seed, evolve_noisy, exact_expectation, sample, Counts, DensityMatrix, SimError,
};

pub const CALIBRATION_MAX_SITES: usize = 6;
/// Projected-gradient iteration cap.
pub const MAX_ITERATIONS: usize = 1000;
/// Stop once no entry moves by more than this.
pub const STEP_TOL: f64 = 1e-10;
/// Smallest singular value accepted for a calibration matrix.
pub const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MitigateError {
    #[error("{n_sites} sites exceeds the calibration budget of {max}")]
    Budget { n_sites: usize, max: usize },
    #[error("distribution has {got} entries, calibration expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("calibration matrix is singular (smallest singular value {0:e})")]
    Singular(f64),
    #[error("no readout flip configured; set readout_flip (0 for none)")]
    NoReadoutModel,
    #[error("noiseless reference is zero; results cannot be normalized")]
    ZeroReference,
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalibrationMode {
    Exact,
    Shots { shots: u64, seed: u64 },
}

/// Column `j` is the measured distribution when basis state `j` is prepared.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    n_sites: usize,
    matrix: DMatrix<f64>,
}

impl CalibrationMatrix {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A · p`.
    pub fn forward(&self, p: &[f64]) -> Vec<f64> {
        (&self.matrix * nalgebra::DVector::from_column_slice(p)).as_slice().to_vec()
    }
}

/// Prepare each basis state and push it through the readout model.
pub fn calibrate(
    n_sites: usize,
    noise: &NoiseModel,
    mode: CalibrationMode,
) -> Result<CalibrationMatrix, MitigateError> {
    if n_sites == 0 || n_sites > CALIBRATION_MAX_SITES {
        return Err(MitigateError::Budget { n_sites, max: CALIBRATION_MAX_SITES });
    }
    let q = noise.readout_flip.ok_or(MitigateError::NoReadoutModel)?;
    let dim = 1usize << n_sites;
    let columns = (0..dim)
        .into_par_iter()
        .map(|j| {
            let mut point = vec![0.0; dim];
            point[j] = 1.0;
            match mode {
                CalibrationMode::Exact => Ok(apply_readout_flip(&point, n_sites, q)),
                CalibrationMode::Shots { shots, seed } => {
                    let counts = sample(&point, n_sites, shots, seed, j as u64, Some(q))?;
                    Ok(distribution(&counts))
                }
            }
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let mut matrix = DMatrix::zeros(dim, dim);
    for (j, col) in columns.iter().enumerate() {
        let s: f64 = col.iter().sum();
        for (i, v) in col.iter().enumerate() {
            matrix[(i, j)] = v / s;
        }
    }
    Ok(CalibrationMatrix { n_sites, matrix })
}

/// Relative frequencies as a dense vector over `2^N` outcomes.
pub fn distribution(counts: &Counts) -> Vec<f64> {
    let mut p = vec![0.0; 1 << counts.n_sites()];
    for (b, f) in counts.frequencies() {
        p[b as usize] = f;
    }
    p
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (k as f64 + 1.0);
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corrected {
    pub probabilities: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares solution of `A x = observed` over the probability simplex.
pub fn correct(observed: &[f64], cal: &CalibrationMatrix) -> Result<Corrected, MitigateError> {
    let a = &cal.matrix;
    if observed.len() != a.ncols() {
        return Err(MitigateError::DimensionMismatch { expected: a.ncols(), got: observed.len() });
    }
    let sv = a.singular_values();
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
    if smin < SINGULAR_TOL {
        return Err(MitigateError::Singular(smin));
    }
    let step = 1.0 / (smax * smax);
    let y = nalgebra::DVector::from_column_slice(observed);
    let ata = a.transpose() * a;
    let aty = a.transpose() * &y;
    let mut x = nalgebra::DVector::from_vec(project_simplex(observed));
    for it in 1..=MAX_ITERATIONS {
        let grad = &ata * &x - &aty;
        let next = nalgebra::DVector::from_vec(project_simplex((&x - grad * step).as_slice()));
        let moved = (&next - &x).amax();
        x = next;
        if moved < STEP_TOL {
            return Ok(Corrected { probabilities: x.as_slice().to_vec(), iterations: it, converged: true });
        }
    }
    Ok(Corrected { probabilities: x.as_slice().to_vec(), iterations: MAX_ITERATIONS, converged: false })
}

/// Each CNOT repeated `2k + 1` times; every other gate kept.
pub fn zne_fold(circuit: &Circuit, k: usize) -> Circuit {
    circuit.map_gates(|g| if g.is_two_site() { vec![*g; 2 * k + 1] } else { vec![*g] })
}

/// Line through `(1, e1)` and `(3, e3)` evaluated at zero noise.
pub fn zne_extrapolate(e1: f64, e3: f64) -> f64 {
    (3.0 * e1 - e3) / 2.0
}

/// Standard error of [`zne_extrapolate`] for independent inputs.
pub fn zne_uncertainty(s1: f64, s3: f64) -> f64 {
    (9.0 * s1 * s1 + s3 * s3).sqrt() / 2.0
}

/// One charge tracked over depth, with and without mitigation.
#[derive(Debug, Clone)]
pub struct MitigationSetup {
    pub init: InitialStateSpec,
    pub alpha: f64,
    pub charge: PauliPolynomial,
    pub depths: Vec<usize>,
    /// Gate noise plus a `readout_flip` rate.
    pub noise: NoiseModel,
    pub shots_total: u64,
    pub calibration: CalibrationMode,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationRow {
    pub d: usize,
    pub unmitigated: f64,
    pub s_unmitigated: f64,
    pub mitigated: f64,
    pub s_mitigated: f64,
    /// Infinite-shot value under gate noise, no readout error.
    pub noisy_exact: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    /// Noiseless `⟨Q⟩`, constant in depth.
    pub noiseless: f64,
    pub readout_model: String,
    pub rows: Vec<MitigationRow>,
}

impl MitigationReport {
    /// `d,unmitigated,s_unmitigated,mitigated,s_mitigated,exact,noisy_exact`,
    /// every value divided by the noiseless reference.
    pub fn to_csv(&self) -> String {
        let r = self.noiseless;
        let mut s = String::from("d,unmitigated,s_unmitigated,mitigated,s_mitigated,exact,noisy_exact\n");
        for row in &self.rows {
            s.push_str(&format!(
                "{},{:.10},{:.10},{:.10},{:.10},{:.10},{:.10}\n",
                row.d,
                row.unmitigated / r,
                row.s_unmitigated / r.abs(),
                row.mitigated / r,
                row.s_mitigated / r.abs(),
                1.0,
                row.noisy_exact / r,
            ));
        }
        s
    }
}

fn seed_for(seed: u64, d: usize, role: u64) -> u64 {
    derive_seed(seed, d as u64, role)
}

/// Unmitigated and mitigated runs are sampled independently.
pub fn run_mitigation(setup: &MitigationSetup) -> Result<MitigationReport, MitigateError> {
    let n = setup.init.n_sites();
    let delta = setup.alpha.tan();
    let cal = calibrate(n, &setup.noise, setup.calibration)?;
    let words = build_cover(&setup.charge)?;
    let plan = MeasurementPlan::with_total_shots(words, setup.shots_total)?;
    let rho0 = DensityMatrix::from_pure(&crate::sim::StateVector::prepared(&setup.init)?)?;
    let noiseless = exact_expectation(&rho0, &setup.charge, delta)?;
    if noiseless == 0.0 {
        return Err(MitigateError::ZeroReference);
    }
    let evolved = |d: usize, k: usize| -> Result<DensityMatrix, MitigateError> {
        let c = zne_fold(&Circuit::experiment(&setup.init, setup.alpha, d, None)?, k);
        Ok(evolve_noisy(&c, DensityMatrix::zero(n)?, &setup.noise)?)
    };
    let corrected_estimate = |rho: &DensityMatrix, seed: u64| -> Result<(f64, f64, Vec<String>), MitigateError> {
        let records = collect_noisy(rho, &plan, &setup.noise, seed)?;
        let weighted = records
            .records
            .into_iter()
            .map(|(w, counts)| {
                let c = correct(&distribution(&counts), &cal)?;
                Ok(WeightedRecord::from_distribution(w, counts.total(), &c.probabilities))
            })
            .collect::<Result<Vec<_>, MitigateError>>()?;
        let e = estimate_weighted(&weighted, &setup.charge, delta)?;
        Ok((e.value, e.std_uncertainty, e.warnings))
    };
    let rows = setup
        .depths
        .par_iter()
        .map(|&d| {
            let rho1 = evolved(d, 0)?;
            let rho3 = evolved(d, 1)?;
            let raw = estimate(
                &collect_noisy(&rho1, &plan, &setup.noise, seed_for(setup.seed, d, 0))?,
                &setup.charge,
                delta,
            )?;
            let (e1, s1, mut w1) = corrected_estimate(&rho1, seed_for(setup.seed, d, 1))?;
            let (e3, s3, w3) = corrected_estimate(&rho3, seed_for(setup.seed, d, 3))?;
            let mut warnings = raw.warnings;
            warnings.append(&mut w1);
            warnings.extend(w3);
            Ok(MitigationRow {
                d,
                unmitigated: raw.value,
                s_unmitigated: raw.std_uncertainty,
                mitigated: zne_extrapolate(e1, e3),
                s_mitigated: zne_uncertainty(s1, s3),
                noisy_exact: exact_expectation(&rho1, &setup.charge, delta)?,
                warnings,
            })
        })
        .collect::<Result<Vec<_>, MitigateError>>()?;
    Ok(MitigationReport {
        noiseless,
        readout_model: format!("synthetic independent per-bit flip, q = {}", setup.noise.readout_flip.unwrap_or(0.0)),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn simplex_projection_of_a_distribution_is_itself() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let q = project_simplex(&p);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn simplex_projection_clips_negatives() {
        let q = project_simplex(&[1.2, -0.1, -0.1]);
        assert!((q[0] - 1.0).abs() < 1e-15 && q[1] == 0.0 && q[2] == 0.0);
    }

    #[test]
    fn derived_seeds_differ_by_role() {
        assert_ne!(seed_for(1, 0, 0), seed_for(1, 0, 1));
        assert_ne!(seed_for(1, 0, 1), seed_for(1, 1, 1));
    }

    #[test]
    fn fold_only_touches_cnots() {
        let g = [Gate::Hadamard(1), Gate::ControlledNot { control: 1, target: 2 }];
        let mut c = Circuit::new(2);
        c.push_section(crate::circuit::Section::Step(1), g.to_vec()).unwrap();
        let f = zne_fold(&c, 2);
        assert_eq!(f.gates().len(), 6);
        assert_eq!(f.gates()[0], g[0]);
    }
}
