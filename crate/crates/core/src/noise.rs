//! Kraus channels and the per-gate noise model.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("rate {name} = {value} outside its allowed range")]
    RateOutOfRange { name: &'static str, value: f64 },
    #[error("Kraus operators are not complete: ||sum D^dag D - I|| = {0:e}")]
    NotComplete(f64),
    #[error("Kraus operators must be square of size 2 or 4")]
    BadShape,
    #[error("expected a one-site channel")]
    NotSingleSite,
    #[error("noise configuration: {0}")]
    Config(String),
}

/// CPTP map `ρ ↦ Σ D ρ D†` on one or two sites.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    arity: usize,
    ops: Vec<DMatrix<Complex64>>,
}

impl KrausChannel {
    /// Validates shape and completeness.
    pub fn new(ops: Vec<DMatrix<Complex64>>) -> Result<Self, NoiseError> {
        let dim = ops.first().map(|m| m.nrows()).ok_or(NoiseError::BadShape)?;
        let arity = match dim {
            2 => 1,
            4 => 2,
            _ => return Err(NoiseError::BadShape),
        };
        if ops.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(NoiseError::BadShape);
        }
        let sum = ops.iter().fold(DMatrix::<Complex64>::zeros(dim, dim), |acc, d| acc + d.adjoint() * d);
        let err = (sum - DMatrix::<Complex64>::identity(dim, dim)).norm();
        if err > COMPLETENESS_TOL {
            return Err(NoiseError::NotComplete(err));
        }
        Ok(Self { arity, ops })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn operators(&self) -> &[DMatrix<Complex64>] {
        &self.ops
    }

    /// Dense action on a `2^arity`-dimensional density matrix.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.ops.iter().fold(DMatrix::zeros(rho.nrows(), rho.ncols()), |acc, d| acc + d * rho * d.adjoint())
    }

    /// `Φ(I) = I` to within the completeness tolerance.
    pub fn is_unital(&self) -> bool {
        let dim = 1 << self.arity;
        let id = DMatrix::<Complex64>::identity(dim, dim);
        (self.apply(&id) - id).norm() < 1e-12
    }

    /// One-site superoperator `Σ D ⊗ D*`, index `2·row_bit + col_bit`.
    pub fn site_superoperator(&self) -> Result<[[Complex64; 4]; 4], NoiseError> {
        if self.arity != 1 {
            return Err(NoiseError::NotSingleSite);
        }
        let mut s = [[Complex64::new(0.0, 0.0); 4]; 4];
        for d in &self.ops {
            for a in 0..2 {
                for b in 0..2 {
                    for a2 in 0..2 {
                        for b2 in 0..2 {
                            s[2 * a + b][2 * a2 + b2] += d[(a, a2)] * d[(b, b2)].conj();
                        }
                    }
                }
            }
        }
        Ok(s)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Operators `√(1−3p/4) I`, `√(p/4) X`, `√(p/4) Y`, `√(p/4) Z`.
pub fn depolarizing(p: f64) -> Result<KrausChannel, NoiseError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(NoiseError::RateOutOfRange { name: "p", value: p });
    }
    let a = (1.0 - 0.75 * p).sqrt();
    let b = (p / 4.0).sqrt();
    let z = c(0.0);
    let i = Complex64::new(0.0, b);
    KrausChannel::new(vec![
        DMatrix::from_row_slice(2, 2, &[c(a), z, z, c(a)]),
        DMatrix::from_row_slice(2, 2, &[z, c(b), c(b), z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[c(b), z, z, c(-b)]),
    ])
}

/// Combined amplitude and phase damping with rates `λ_a`, `λ_p`.
pub fn amp_phase_damping(lambda_a: f64, lambda_p: f64) -> Result<KrausChannel, NoiseError> {
    if lambda_a < 0.0 {
        return Err(NoiseError::RateOutOfRange { name: "lambda_a", value: lambda_a });
    }
    if lambda_p < 0.0 || lambda_a + lambda_p > 1.0 {
        return Err(NoiseError::RateOutOfRange { name: "lambda_p", value: lambda_p });
    }
    let z = c(0.0);
    KrausChannel::new(vec![
        DMatrix::from_row_slice(2, 2, &[c(1.0), z, z, c((1.0 - lambda_a - lambda_p).sqrt())]),
        DMatrix::from_row_slice(2, 2, &[z, c(lambda_a.sqrt()), z, z]),
        DMatrix::from_row_slice(2, 2, &[z, z, z, c(lambda_p.sqrt())]),
    ])
}

/// Rates in the textbook parameterization: amplitude `γ = λ_a`, phase
/// `λ = λ_p (1 − λ_a)`.
pub fn to_standard_rates(lambda_a: f64, lambda_p: f64) -> (f64, f64) {
    (lambda_a, lambda_p * (1.0 - lambda_a))
}

/// Inverse of [`to_standard_rates`].
pub fn from_standard_rates(gamma: f64, lambda: f64) -> (f64, f64) {
    (gamma, if gamma < 1.0 { lambda / (1.0 - gamma) } else { 0.0 })
}

/// Tensor product `Φ ⊗ Φ` with local index `2·bit_first + bit_second`.
pub fn two_site(channel: &KrausChannel) -> Result<KrausChannel, NoiseError> {
    if channel.arity != 1 {
        return Err(NoiseError::NotSingleSite);
    }
    let mut ops = Vec::with_capacity(channel.ops.len().pow(2));
    for a in &channel.ops {
        for b in &channel.ops {
            ops.push(a.kronecker(b));
        }
    }
    KrausChannel::new(ops)
}

/// Channels inserted after gates, plus classical readout bit flips.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseModel {
    /// Applied to the site of every one-qubit gate.
    pub after_one_qubit: Option<KrausChannel>,
    /// Applied independently to both sites of every two-qubit gate.
    pub after_two_qubit: Option<KrausChannel>,
    /// Per-site probability of flipping a measured bit.
    pub readout_flip: Option<f64>,
    /// Whether preparation and measurement-rotation gates receive one-qubit noise.
    pub noisy_init_measure: bool,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { noisy_init_measure: true, ..Default::default() }
    }

    pub fn is_noiseless(&self) -> bool {
        self.after_one_qubit.is_none() && self.after_two_qubit.is_none()
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for ch in [&self.after_one_qubit, &self.after_two_qubit].into_iter().flatten() {
            if ch.arity() != 1 {
                return Err(NoiseError::NotSingleSite);
            }
        }
        if let Some(q) = self.readout_flip {
            if !(0.0..=1.0).contains(&q) {
                return Err(NoiseError::RateOutOfRange { name: "readout_flip", value: q });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Depolarizing,
    Damping,
}

/// A single depolarizing rate or a `[λ_a, λ_p]` damping pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Rates {
    Single(f64),
    Pair([f64; 2]),
}

/// JSON noise block. `p1` applies after one-qubit gates, `p2` after
/// two-qubit gates; an absent rate means no channel there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    #[serde(default)]
    pub p1: Option<Rates>,
    #[serde(default)]
    pub p2: Option<Rates>,
    #[serde(default)]
    pub readout_flip: Option<f64>,
    #[serde(default = "default_true")]
    pub noisy_init_measure: bool,
}

fn default_true() -> bool {
    true
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self { kind: NoiseKind::None, p1: None, p2: None, readout_flip: None, noisy_init_measure: true }
    }

    pub fn depolarizing(p1: f64, p2: f64) -> Self {
        Self {
            kind: NoiseKind::Depolarizing,
            p1: Some(Rates::Single(p1)),
            p2: Some(Rates::Single(p2)),
            readout_flip: None,
            noisy_init_measure: true,
        }
    }

    /// Damping after two-qubit gates only.
    pub fn damping(lambda_a: f64, lambda_p: f64) -> Self {
        Self {
            kind: NoiseKind::Damping,
            p1: None,
            p2: Some(Rates::Pair([lambda_a, lambda_p])),
            readout_flip: None,
            noisy_init_measure: true,
        }
    }

    fn channel(&self, rates: Option<Rates>) -> Result<Option<KrausChannel>, NoiseError> {
        match (self.kind, rates) {
            (_, None) | (NoiseKind::None, _) => Ok(None),
            (NoiseKind::Depolarizing, Some(Rates::Single(p))) => Ok(Some(depolarizing(p)?)),
            (NoiseKind::Damping, Some(Rates::Pair([a, p]))) => Ok(Some(amp_phase_damping(a, p)?)),
            (NoiseKind::Depolarizing, Some(Rates::Pair(_))) => {
                Err(NoiseError::Config("depolarizing rates are single numbers".into()))
            }
            (NoiseKind::Damping, Some(Rates::Single(_))) => {
                Err(NoiseError::Config("damping rates are [lambda_a, lambda_p] pairs".into()))
            }
        }
    }

    pub fn to_model(&self) -> Result<NoiseModel, NoiseError> {
        let m = NoiseModel {
            after_one_qubit: self.channel(self.p1)?,
            after_two_qubit: self.channel(self.p2)?,
            readout_flip: self.readout_flip,
            noisy_init_measure: self.noisy_init_measure,
        };
        m.validate()?;
        Ok(m)
    }
}
