//! Fits of charge decay curves: late-time `c₁e^{−γd} + c₂` and the
//! early-time linear slope `β`, plus the benchmark pass/fail record.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ITERATIONS: usize = 500;
/// Relative parameter change that ends the iteration.
pub const REL_TOL: f64 = 1e-9;
/// Normal matrices with a worse condition number are treated as singular.
const MAX_CONDITION: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("steps must be strictly increasing (at index {0})")]
    NotIncreasing(usize),
    #[error("invalid point at d={d}: value {value}, sigma {sigma}")]
    InvalidPoint { d: usize, value: f64, sigma: f64 },
    #[error("initial value is zero, so the slope cannot be normalized; choose an initial state with nonzero charge")]
    ZeroInitialValue,
    #[error("window of {0} points is too short for a linear fit")]
    Window(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub d: usize,
    pub value: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    points: Vec<Point>,
}

impl DecaySeries {
    pub fn new(points: Vec<Point>) -> Result<Self, AnalysisError> {
        for (i, p) in points.iter().enumerate() {
            if !p.value.is_finite() || !p.sigma.is_finite() || p.sigma < 0.0 {
                return Err(AnalysisError::InvalidPoint { d: p.d, value: p.value, sigma: p.sigma });
            }
            if i > 0 && points[i - 1].d >= p.d {
                return Err(AnalysisError::NotIncreasing(i));
            }
        }
        Ok(Self { points })
    }

    /// Points at `d = 0, 1, ...` with zero uncertainty.
    pub fn exact(values: &[f64]) -> Result<Self, AnalysisError> {
        Self::new(values.iter().enumerate().map(|(d, &value)| Point { d, value, sigma: 0.0 }).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points with `lo ≤ d ≤ hi`.
    pub fn window(&self, lo: usize, hi: usize) -> Result<Self, AnalysisError> {
        Self::new(self.points.iter().copied().filter(|p| p.d >= lo && p.d <= hi).collect())
    }

    /// `1/σ²` when every point carries an uncertainty, else uniform.
    fn weights(&self) -> Vec<f64> {
        if self.points.iter().all(|p| p.sigma > 0.0) {
            self.points.iter().map(|p| 1.0 / (p.sigma * p.sigma)).collect()
        } else {
            vec![1.0; self.points.len()]
        }
    }

    fn weighted(&self) -> bool {
        self.points.iter().all(|p| p.sigma > 0.0)
    }
}

/// `c₁e^{−γd} + c₂` fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub c1: f64,
    pub gamma: f64,
    pub c2: f64,
    pub se_c1: f64,
    pub se_gamma: f64,
    pub se_c2: f64,
    /// `sqrt(Σ wᵢ rᵢ²)`.
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ExpFit {
    /// The decay rate, withheld when the fit did not converge.
    pub fn rate(&self) -> Option<f64> {
        self.converged.then_some(self.gamma)
    }
}

fn model(theta: &Vector3<f64>, d: f64) -> (f64, Vector3<f64>) {
    let e = (-theta[1] * d).exp();
    (theta[0] * e + theta[2], Vector3::new(e, -theta[0] * d * e, 1.0))
}

fn normal_equations(s: &DecaySeries, w: &[f64], theta: &Vector3<f64>) -> (Matrix3<f64>, Vector3<f64>, f64) {
    let mut jtj = Matrix3::zeros();
    let mut jtr = Vector3::zeros();
    let mut cost = 0.0;
    for (p, wi) in s.points.iter().zip(w) {
        let (f, g) = model(theta, p.d as f64);
        let r = p.value - f;
        jtj += g * g.transpose() * *wi;
        jtr += g * (r * wi);
        cost += wi * r * r;
    }
    (jtj, jtr, cost)
}

fn initial_guess(s: &DecaySeries) -> Vector3<f64> {
    let n = s.points.len();
    let c2 = s.points[n - 3..].iter().map(|p| p.value).sum::<f64>() / 3.0;
    let half: Vec<(f64, f64)> = s.points[..n.div_ceil(2)]
        .iter()
        .filter(|p| (p.value - c2).abs() > 0.0)
        .map(|p| (p.d as f64, (p.value - c2).abs().ln()))
        .collect();
    let gamma = match ols(&half) {
        Some((_, slope)) if slope.is_finite() && slope < 0.0 => -slope,
        _ => 0.1,
    };
    let first = s.points[0];
    let c1 = (first.value - c2) * (gamma * first.d as f64).exp();
    Vector3::new(c1, gamma, c2)
}

/// Intercept and slope by ordinary least squares.
fn ols(xy: &[(f64, f64)]) -> Option<(f64, f64)> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    Some((my - slope * mx, slope))
}

fn well_conditioned(m: &Matrix3<f64>) -> bool {
    let sv = m.singular_values();
    let (lo, hi) = (sv.min(), sv.max());
    hi > 0.0 && lo > 0.0 && hi / lo < MAX_CONDITION
}

/// Weighted least squares for `c₁e^{−γd} + c₂` by damped Gauss-Newton.
pub fn fit_exp(series: &DecaySeries) -> Result<ExpFit, AnalysisError> {
    if series.len() < 4 {
        return Err(AnalysisError::TooFewPoints { needed: 4, got: series.len() });
    }
    let w = series.weights();
    let mut theta = initial_guess(series);
    let (mut jtj, mut jtr, mut cost) = normal_equations(series, &w, &theta);
    let mut mu = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut a = jtj;
        for k in 0..3 {
            a[(k, k)] += mu * jtj[(k, k)].max(1e-300);
        }
        let Some(step) = a.lu().solve(&jtr) else {
            mu *= 10.0;
            continue;
        };
        let trial = theta + step;
        let rel = step.norm() / theta.norm().max(1e-300);
        let (tj, tr, tc) = normal_equations(series, &w, &trial);
        if tc.is_finite() && tc <= cost {
            theta = trial;
            (jtj, jtr, cost) = (tj, tr, tc);
            mu = (mu / 10.0).max(1e-12);
            if rel < REL_TOL {
                converged = true;
                break;
            }
        } else if rel < REL_TOL && mu <= 1.0 {
            // Undamped step below tolerance that roundoff keeps from lowering the cost.
            converged = true;
            break;
        } else {
            mu *= 10.0;
            if mu > 1e16 {
                break;
            }
        }
    }
    // An unidentifiable parameter (e.g. a flat series) leaves the normal
    // matrix singular; the fit is then reported but not trusted.
    let identifiable = well_conditioned(&jtj);
    let cov = if identifiable { jtj.try_inverse() } else { None };
    let scale = if series.weighted() { 1.0 } else { cost / (series.len() as f64 - 3.0).max(1.0) };
    let se = |k: usize| cov.map_or(f64::NAN, |c| (c[(k, k)] * scale).max(0.0).sqrt());
    Ok(ExpFit {
        c1: theta[0],
        gamma: theta[1],
        c2: theta[2],
        se_c1: se(0),
        se_gamma: se(1),
        se_c2: se(2),
        residual_norm: cost.sqrt(),
        iterations,
        converged: converged && identifiable,
    })
}

/// `⟨Q⟩_d / ⟨Q⟩₀ ≈ 1 − βd` over the first steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub q0: f64,
    pub beta: f64,
    pub se_beta: f64,
    pub intercept: f64,
    pub residual_norm: f64,
}

/// Ordinary least squares of `value / ⟨Q⟩₀` on `d` over the first `window` points.
pub fn fit_early_linear(series: &DecaySeries, window: usize) -> Result<LinearFit, AnalysisError> {
    if window < 3 {
        return Err(AnalysisError::Window(window));
    }
    if series.len() < window {
        return Err(AnalysisError::TooFewPoints { needed: window, got: series.len() });
    }
    let q0 = series.points[0].value;
    if q0 == 0.0 {
        return Err(AnalysisError::ZeroInitialValue);
    }
    let xy: Vec<(f64, f64)> = series.points[..window].iter().map(|p| (p.d as f64, p.value / q0)).collect();
    let (intercept, slope) = ols(&xy).expect("distinct steps");
    let rss: f64 = xy.iter().map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / xy.len() as f64;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let se_beta = (rss / (xy.len() as f64 - 2.0) / sxx).sqrt();
    Ok(LinearFit { q0, beta: -slope, se_beta, intercept, residual_norm: rss.sqrt() })
}

/// One entry of the benchmark table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    /// Width (number of qubits).
    pub w: usize,
    /// Depth (number of steps in the fit window).
    pub d: usize,
    /// Charge order.
    pub n: usize,
    pub variant: String,
    pub initial_state: String,
    pub delta: f64,
    pub beta: f64,
    pub beta_star: f64,
    pub pass: bool,
}

/// Context attached to a verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkContext {
    pub w: usize,
    pub d: usize,
    pub n: usize,
    pub variant: String,
    pub initial_state: String,
    pub delta: f64,
}

/// Pass iff `β < β⋆`; a tie fails.
pub fn benchmark_verdict(beta: f64, beta_star: f64, ctx: BenchmarkContext) -> BenchmarkRecord {
    BenchmarkRecord {
        w: ctx.w,
        d: ctx.d,
        n: ctx.n,
        variant: ctx.variant,
        initial_state: ctx.initial_state,
        delta: ctx.delta,
        beta,
        beta_star,
        pass: beta < beta_star,
    }
}
