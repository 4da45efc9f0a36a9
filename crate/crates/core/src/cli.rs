//! Experiment configuration and the pipelines behind the command-line verbs.
//!
//! Every artifact carries the code version and the SHA-256 of the resolved
//! configuration, so a result can be traced back to the run that made it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    benchmark_verdict, fit_early_linear, fit_exp, AnalysisError, BenchmarkContext, BenchmarkRecord, DecaySeries,
    ExpFit, LinearFit, Point,
};
use crate::charges::{assemble, ChargeDocument, ChargeError, ChargeSpec, PauliPolynomial, Variant};
use crate::circuit::{build_init, build_step, CircuitError, InitialStateSpec};
use crate::measure::{build_cover, collect_noisy, collect_pure, estimate, MeasureError, MeasurementPlan};
use crate::mitigate::{
    run_mitigation as mitigate_run, CalibrationMode, MitigateError, MitigationReport, MitigationSetup,
};
use crate::noise::{NoiseConfig, NoiseError, NoiseKind, Rates};
use crate::sim::{
    derive_seed, exact_expectation, CompiledNoise, DensityMatrix, QuantumState, SimError, StateVector,
    DENSITY_MAX_SITES,
};
use crate::spectral::{decay_rate, fixed_point, spectrum, unit_multiplicity, vectorize_step, DecayRate, SpectralError};
use crate::tomo::{fidelity_trajectories, TomoError, TomoMode, TomographyReport};

pub const SCHEMA_VERSION: u32 = 1;
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("at d={d}, {charge}: {message}")]
    At { d: usize, charge: String, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Charge(#[from] ChargeError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Tomo(#[from] TomoError),
    #[error(transparent)]
    Mitigate(#[from] MitigateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Pure,
    Noisy,
}

/// Product state: computational bits rotated into per-site bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub bits: String,
    /// Defaults to all `Z`.
    #[serde(default)]
    pub letters: Option<String>,
}

impl StateConfig {
    pub fn new(bits: &str, letters: &str) -> Self {
        Self { bits: bits.into(), letters: Some(letters.into()) }
    }

    pub fn to_spec(&self) -> Result<InitialStateSpec, CircuitError> {
        let letters = self.letters.clone().unwrap_or_else(|| "Z".repeat(self.bits.len()));
        InitialStateSpec::parse(&self.bits, &letters)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeRequest {
    pub order: usize,
    pub variant: Variant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub n_sites: usize,
    pub noise: NoiseConfig,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        let noise = NoiseConfig { p1: None, ..NoiseConfig::depolarizing(0.0, 0.018) };
        Self { n_sites: 4, noise }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelledState {
    pub label: String,
    pub bits: String,
    #[serde(default)]
    pub letters: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TomoConfig {
    pub n_sites: usize,
    pub depths: Vec<usize>,
    pub states: Vec<LabelledState>,
    pub noise: NoiseConfig,
    /// Shots per basis; absent means exact outcome probabilities.
    pub shots: Option<u64>,
}

impl Default for TomoConfig {
    fn default() -> Self {
        let s = |label: &str, bits: &str, letters: &str| LabelledState {
            label: label.into(),
            bits: bits.into(),
            letters: Some(letters.into()),
        };
        Self {
            n_sites: 6,
            depths: vec![0, 1, 2, 3, 5, 7, 10, 15, 20, 25, 30],
            states: vec![
                s("neel", "010101", "ZZZZZZ"),
                s("zero", "000000", "ZZZZZZ"),
                s("zero_yzxyzx", "000000", "YZXYZX"),
            ],
            noise: NoiseConfig::damping(0.018, 0.018),
            shots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MitigationConfig {
    pub n_sites: usize,
    pub depth_max: usize,
    pub charge: ChargeRequest,
    pub initial_state: Option<StateConfig>,
    /// Gate noise plus the synthetic readout flip rate.
    pub noise: NoiseConfig,
    pub shots_total: u64,
    /// Shots per calibration column; absent means the exact matrix.
    pub calibration_shots: Option<u64>,
}

impl Default for MitigationConfig {
    fn default() -> Self {
        Self {
            n_sites: 4,
            depth_max: 15,
            charge: ChargeRequest { order: 1, variant: Variant::Plus },
            initial_state: None,
            noise: NoiseConfig { readout_flip: Some(0.02), ..NoiseConfig::depolarizing(0.0013, 0.013) },
            shots_total: 100_000,
            calibration_shots: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// `[lo, hi]` steps for the exponential fit; absent means all steps.
    pub window: Option<[usize; 2]>,
    /// Number of leading points in the linear fit.
    pub early_points: usize,
    /// Threshold for the benchmark verdict; absent skips it.
    pub beta_star: Option<f64>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { window: None, early_points: 6, beta_star: None }
    }
}

fn default_schema() -> u32 {
    SCHEMA_VERSION
}
fn default_n_sites() -> usize {
    8
}
fn default_alpha() -> f64 {
    0.3
}
fn default_depth() -> usize {
    30
}
fn default_charges() -> Vec<ChargeRequest> {
    vec![ChargeRequest { order: 1, variant: Variant::Plus }]
}
fn default_engine() -> Engine {
    Engine::Noisy
}
fn default_noise() -> NoiseConfig {
    NoiseConfig::depolarizing(0.0013, 0.013)
}
fn default_shots() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn yes() -> bool {
    true
}

/// A complete run description. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema")]
    pub schema_version: u32,
    #[serde(default = "default_n_sites")]
    pub n_sites: usize,
    /// Radians; `δ = tan α`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_depth")]
    pub depth_max: usize,
    /// Defaults to the Néel state.
    #[serde(default)]
    pub initial_state: Option<StateConfig>,
    #[serde(default = "default_charges")]
    pub charges: Vec<ChargeRequest>,
    #[serde(default = "default_engine")]
    pub engine: Engine,
    #[serde(default = "default_noise")]
    pub noise: NoiseConfig,
    #[serde(default = "default_shots")]
    pub shots_total: u64,
    /// Draw shots and estimate; otherwise only exact values are reported.
    #[serde(default = "yes")]
    pub sampling: bool,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "yes")]
    pub exact_reference: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub tomo: TomoConfig,
    #[serde(default)]
    pub mitigation: MitigationConfig,
    #[serde(default)]
    pub fit: FitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, RunError> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|source| RunError::Io { path: path.into(), source })?;
        let cfg: Self =
            serde_json::from_str(&text).map_err(|e| RunError::Parse { path: path.into(), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// SHA-256 of the resolved configuration (defaults filled in).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:x}", Sha256::digest(canonical.as_bytes()))
    }

    pub fn initial_spec(&self) -> Result<InitialStateSpec, RunError> {
        let spec = match &self.initial_state {
            Some(s) => s.to_spec()?,
            None => InitialStateSpec::neel(self.n_sites),
        };
        if spec.n_sites() != self.n_sites {
            return Err(RunError::Config(format!(
                "initial state has {} sites, n_sites is {}",
                spec.n_sites(),
                self.n_sites
            )));
        }
        Ok(spec)
    }

    pub fn charge_specs(&self) -> Result<Vec<ChargeSpec>, RunError> {
        Ok(self.charges.iter().map(|c| ChargeSpec::new(c.order, c.variant, self.n_sites)).collect::<Result<_, _>>()?)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(RunError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.n_sites < 4 || !self.n_sites.is_multiple_of(2) {
            return Err(RunError::Config(format!("n_sites must be even and at least 4, got {}", self.n_sites)));
        }
        if !self.alpha.is_finite() {
            return Err(RunError::Config("alpha must be finite".into()));
        }
        if self.charges.is_empty() {
            return Err(RunError::Config("no charges requested".into()));
        }
        self.initial_spec()?;
        let specs = self.charge_specs()?;
        self.noise.to_model()?;
        if self.engine == Engine::Pure && self.noise.kind != NoiseKind::None {
            return Err(RunError::Config("engine \"pure\" cannot apply gate noise; use engine \"noisy\"".into()));
        }
        if self.engine == Engine::Noisy && self.n_sites > DENSITY_MAX_SITES {
            return Err(RunError::Config(format!(
                "noisy engine supports at most {DENSITY_MAX_SITES} sites, got {}",
                self.n_sites
            )));
        }
        if self.sampling {
            for spec in &specs {
                let words = build_cover(&assemble(spec)?)?.len() as u64;
                if self.shots_total < words {
                    return Err(RunError::Config(format!(
                        "shots_total {} is below the {words} measured words of {}",
                        self.shots_total,
                        spec.label()
                    )));
                }
            }
        } else if !self.exact_reference {
            return Err(RunError::Config("sampling and exact_reference are both off; nothing to compute".into()));
        }
        if self.fit.early_points < 3 {
            return Err(RunError::Config("fit.early_points must be at least 3".into()));
        }
        Ok(())
    }

    fn stamp(&self) -> String {
        format!("# trotterlab {CODE_VERSION} config_sha256={}\n", self.hash())
    }
}

/// Wraps a report with the version and config hash.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stamped<T> {
    pub code_version: String,
    pub config_sha256: String,
    pub report: T,
}

fn stamped<T: Serialize>(cfg: &ExperimentConfig, report: &T) -> Result<String, RunError> {
    let s = Stamped { code_version: CODE_VERSION.to_string(), config_sha256: cfg.hash(), report };
    Ok(serde_json::to_string_pretty(&s)? + "\n")
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub d: usize,
    pub charge: String,
    pub variant: Variant,
    pub estimate: Option<f64>,
    pub s_q: Option<f64>,
    pub exact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayTable {
    pub rows: Vec<DecayRow>,
    pub warnings: Vec<String>,
}

impl DecayTable {
    pub const HEADER: &'static str = "d,charge,variant,estimate,s_q,exact";

    pub fn to_csv(&self) -> String {
        let mut s = format!("{}\n", Self::HEADER);
        for r in &self.rows {
            let _ =
                writeln!(s, "{},{},{},{},{},{}", r.d, r.charge, r.variant, opt(r.estimate), opt(r.s_q), opt(r.exact));
        }
        s
    }

    /// Parse the CSV written by [`DecayTable::to_csv`]; `#` lines are skipped.
    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim() == Self::HEADER => {}
            other => return Err(format!("expected header {:?}, found {other:?}", Self::HEADER)),
        }
        let num = |s: &str| -> Result<Option<f64>, String> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| format!("{s:?}: {e}"))
            }
        };
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(format!("row {}: expected 6 fields, found {}", i + 1, f.len()));
            }
            rows.push(DecayRow {
                d: f[0].parse().map_err(|e| format!("row {}: {e}", i + 1))?,
                charge: f[1].to_string(),
                variant: f[2].parse().map_err(|e: ChargeError| e.to_string())?,
                estimate: num(f[3])?,
                s_q: num(f[4])?,
                exact: num(f[5])?,
            });
        }
        Ok(Self { rows, warnings: Vec::new() })
    }

    /// Series for one charge label, from estimates when present else exact values.
    pub fn series(&self, charge: &str) -> Result<DecaySeries, AnalysisError> {
        let points = self
            .rows
            .iter()
            .filter(|r| r.charge == charge)
            .filter_map(|r| match (r.estimate, r.s_q, r.exact) {
                (Some(v), Some(s), _) => Some(Point { d: r.d, value: v, sigma: s }),
                (_, _, Some(v)) => Some(Point { d: r.d, value: v, sigma: 0.0 }),
                _ => None,
            })
            .collect();
        DecaySeries::new(points)
    }

    /// Distinct charge labels in first-seen order.
    pub fn charges(&self) -> Vec<(String, Variant)> {
        let mut out: Vec<(String, Variant)> = Vec::new();
        for r in &self.rows {
            if !out.iter().any(|(c, _)| *c == r.charge) {
                out.push((r.charge.clone(), r.variant));
            }
        }
        out
    }
}

enum Evolving {
    Pure(StateVector),
    Mixed(Box<(DensityMatrix, CompiledNoise)>),
}

/// Evolve step by step, estimating and/or computing exact values of every
/// charge at each depth.
pub fn run_decay(cfg: &ExperimentConfig) -> Result<DecayTable, RunError> {
    cfg.validate()?;
    let init = cfg.initial_spec()?;
    let delta = cfg.alpha.tan();
    let noise = cfg.noise.to_model()?;
    let charges: Vec<(ChargeSpec, PauliPolynomial)> =
        cfg.charge_specs()?.into_iter().map(|s| Ok((s, assemble(&s)?))).collect::<Result<_, RunError>>()?;
    let plans: Vec<Option<MeasurementPlan>> = charges
        .iter()
        .map(|(_, q)| {
            cfg.sampling.then(|| MeasurementPlan::with_total_shots(build_cover(q)?, cfg.shots_total)).transpose()
        })
        .collect::<Result<_, MeasureError>>()?;
    let step = build_step(cfg.n_sites, cfg.alpha)?;
    let mut state = match cfg.engine {
        Engine::Pure => Evolving::Pure(StateVector::prepared(&init)?),
        Engine::Noisy => {
            let compiled = CompiledNoise::new(&noise)?;
            let mut rho = DensityMatrix::zero(cfg.n_sites)?;
            compiled.apply_gates(&mut rho, &build_init(&init)?, true);
            Evolving::Mixed(Box::new((rho, compiled)))
        }
    };
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for d in 0..=cfg.depth_max {
        if d > 0 {
            match &mut state {
                Evolving::Pure(psi) => psi.apply_gates(&step),
                Evolving::Mixed(m) => m.1.apply_gates(&mut m.0, &step, false),
            }
        }
        for (ci, ((spec, q), plan)) in charges.iter().zip(&plans).enumerate() {
            let at = |e: RunError| RunError::At { d, charge: spec.label(), message: e.to_string() };
            let seed = derive_seed(cfg.seed, d as u64, ci as u64);
            let (estimate_value, s_q) = match plan {
                Some(plan) => {
                    let records = match &state {
                        Evolving::Pure(psi) => collect_pure(psi, plan, seed, noise.readout_flip),
                        Evolving::Mixed(m) => collect_noisy(&m.0, plan, &noise, seed),
                    }
                    .map_err(|e| at(e.into()))?;
                    let e = estimate(&records, q, delta).map_err(|e| at(e.into()))?;
                    warnings.extend(e.warnings.iter().map(|w| format!("d={d} {}: {w}", spec.label())));
                    (Some(e.value), Some(e.std_uncertainty))
                }
                None => (None, None),
            };
            let exact = if cfg.exact_reference {
                Some(
                    match &state {
                        Evolving::Pure(psi) => exact_expectation(psi, q, delta),
                        Evolving::Mixed(m) => exact_expectation(&m.0, q, delta),
                    }
                    .map_err(|e| at(e.into()))?,
                )
            } else {
                None
            };
            rows.push(DecayRow {
                d,
                charge: spec.label(),
                variant: spec.variant,
                estimate: estimate_value,
                s_q,
                exact,
            });
        }
    }
    Ok(DecayTable { rows, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub n_sites: usize,
    pub alpha: f64,
    /// `[re, im]`, by descending modulus.
    pub eigenvalues: Vec<[f64; 2]>,
    pub unit_multiplicity: usize,
    pub decay: DecayRate,
    pub fixed_point_purity: Option<f64>,
    pub fixed_point_min_eigenvalue: Option<f64>,
    /// Largest `| |λ| − 1 |` of the noiseless step.
    pub noiseless_max_deviation: f64,
}

impl SpectrumReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re,im,modulus\n");
        for (i, [re, im]) in self.eigenvalues.iter().enumerate() {
            let _ = writeln!(s, "{i},{re},{im},{}", re.hypot(*im));
        }
        s
    }
}

pub fn run_spectrum(cfg: &ExperimentConfig) -> Result<SpectrumReport, RunError> {
    let sc = &cfg.spectrum;
    let step = build_step(sc.n_sites, cfg.alpha)?;
    let op = vectorize_step(sc.n_sites, &step, &sc.noise.to_model()?)?;
    let ev = spectrum(&op)?;
    let unit = unit_multiplicity(&ev);
    let (purity, min_eig) = match fixed_point(&op) {
        Ok(rho) => (Some(rho.purity()), Some(rho.min_eigenvalue())),
        Err(SpectralError::MultipleSteadyStates(_)) | Err(SpectralError::NoFixedPoint(_)) => (None, None),
        Err(e) => return Err(e.into()),
    };
    let clean = spectrum(&vectorize_step(sc.n_sites, &step, &NoiseConfig::none().to_model()?)?)?;
    Ok(SpectrumReport {
        n_sites: sc.n_sites,
        alpha: cfg.alpha,
        eigenvalues: ev.iter().map(|l| [l.re, l.im]).collect(),
        unit_multiplicity: unit,
        decay: decay_rate(&ev),
        fixed_point_purity: purity,
        fixed_point_min_eigenvalue: min_eig,
        noiseless_max_deviation: clean.iter().map(|l| (l.norm() - 1.0).abs()).fold(0.0, f64::max),
    })
}

pub fn run_tomo(cfg: &ExperimentConfig) -> Result<TomographyReport, RunError> {
    let tc = &cfg.tomo;
    let states = tc
        .states
        .iter()
        .map(|s| {
            let spec = StateConfig { bits: s.bits.clone(), letters: s.letters.clone() }.to_spec()?;
            if spec.n_sites() != tc.n_sites {
                return Err(RunError::Config(format!("tomo state {} does not have {} sites", s.label, tc.n_sites)));
            }
            Ok((s.label.clone(), spec))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mode = match tc.shots {
        Some(shots) => TomoMode::Shots { shots, seed: cfg.seed },
        None => TomoMode::Exact,
    };
    Ok(fidelity_trajectories(&states, cfg.alpha, &tc.depths, &tc.noise.to_model()?, mode)?)
}

/// Pair-fidelity and self-fidelity tables in long form.
pub fn tomo_csv(r: &TomographyReport) -> String {
    let mut s = String::from("d,kind,a,b,fidelity\n");
    for (k, d) in r.depths.iter().enumerate() {
        for (label, v) in &r.self_fidelity {
            let _ = writeln!(s, "{d},self,{label},,{}", v[k]);
        }
        for p in &r.pair_fidelity {
            let _ = writeln!(s, "{d},pair,{},{},{}", p.a, p.b, p.values[k]);
        }
    }
    s
}

pub fn run_mitigation(cfg: &ExperimentConfig) -> Result<MitigationReport, RunError> {
    let mc = &cfg.mitigation;
    let init = match &mc.initial_state {
        Some(s) => s.to_spec()?,
        None => InitialStateSpec::neel(mc.n_sites),
    };
    let charge = assemble(&ChargeSpec::new(mc.charge.order, mc.charge.variant, mc.n_sites)?)?;
    let setup = MitigationSetup {
        init,
        alpha: cfg.alpha,
        charge,
        depths: (0..=mc.depth_max).collect(),
        noise: mc.noise.to_model()?,
        shots_total: mc.shots_total,
        calibration: match mc.calibration_shots {
            Some(shots) => CalibrationMode::Shots { shots, seed: derive_seed(cfg.seed, u64::MAX, 0) },
            None => CalibrationMode::Exact,
        },
        seed: cfg.seed,
    };
    Ok(mitigate_run(&setup)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeFit {
    pub charge: String,
    pub variant: Variant,
    pub exp: Option<ExpFit>,
    pub linear: Option<LinearFit>,
    pub benchmark: Option<BenchmarkRecord>,
    pub notes: Vec<String>,
}

/// Exponential and early-linear fits of every charge in a decay table.
pub fn run_fit(cfg: &ExperimentConfig, table: &DecayTable) -> Result<Vec<ChargeFit>, RunError> {
    let state = match &cfg.initial_state {
        Some(s) => format!("{}/{}", s.bits, s.letters.clone().unwrap_or_else(|| "Z".repeat(s.bits.len()))),
        None => format!("neel/{}", cfg.n_sites),
    };
    let mut out = Vec::new();
    for (label, variant) in table.charges() {
        let series = table.series(&label)?;
        let mut notes = Vec::new();
        let window = match cfg.fit.window {
            Some([lo, hi]) => series.window(lo, hi)?,
            None => series.clone(),
        };
        let exp = match fit_exp(&window) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("exponential fit skipped: {e}"));
                None
            }
        };
        let linear = match fit_early_linear(&series, cfg.fit.early_points) {
            Ok(f) => Some(f),
            Err(e) => {
                notes.push(format!("linear fit skipped: {e}"));
                None
            }
        };
        let order = label.trim_start_matches('Q').trim_end_matches(['+', '-']).trim_end_matches("dif");
        let benchmark = match (cfg.fit.beta_star, &linear) {
            (Some(beta_star), Some(l)) => Some(benchmark_verdict(
                l.beta,
                beta_star,
                BenchmarkContext {
                    w: cfg.n_sites,
                    d: series.points()[..cfg.fit.early_points].last().map_or(0, |p| p.d),
                    n: order.parse().unwrap_or(0),
                    variant: variant.to_string(),
                    initial_state: state.clone(),
                    delta: cfg.alpha.tan(),
                },
            )),
            _ => None,
        };
        out.push(ChargeFit { charge: label, variant, exp, linear, benchmark, notes });
    }
    Ok(out)
}

pub fn fits_csv(fits: &[ChargeFit]) -> String {
    let mut s = String::from("charge,variant,c1,gamma,c2,se_c1,se_gamma,se_c2,converged,beta,se_beta\n");
    for f in fits {
        let e = f.exp.as_ref();
        let l = f.linear.as_ref();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            f.charge,
            f.variant,
            opt(e.map(|x| x.c1)),
            opt(e.and_then(|x| x.rate())),
            opt(e.map(|x| x.c2)),
            opt(e.map(|x| x.se_c1)),
            opt(e.map(|x| x.se_gamma)),
            opt(e.map(|x| x.se_c2)),
            e.is_some_and(|x| x.converged),
            opt(l.map(|x| x.beta)),
            opt(l.map(|x| x.se_beta)),
        );
    }
    s
}

/// Export every requested charge as a JSON document.
pub fn export_charges(cfg: &ExperimentConfig) -> Result<Vec<(String, String)>, RunError> {
    cfg.charge_specs()?
        .iter()
        .map(|spec| {
            let doc = ChargeDocument::from_poly(&assemble(spec)?, spec.order, spec.variant);
            Ok((format!("charge_n{}_{}_N{}.json", spec.order, spec.variant, spec.n_sites), doc.to_json()? + "\n"))
        })
        .collect()
}

/// Files written by a verb, relative to the output directory.
pub type Artifacts = Vec<(String, String)>;

fn prepend(stamp: &str, body: String) -> String {
    format!("{stamp}{body}")
}

pub fn decay_artifacts(cfg: &ExperimentConfig, t: &DecayTable) -> Result<Artifacts, RunError> {
    Ok(vec![
        ("decay.csv".into(), prepend(&cfg.stamp(), t.to_csv())),
        ("decay_warnings.json".into(), stamped(cfg, &t.warnings)?),
    ])
}

pub fn spectrum_artifacts(cfg: &ExperimentConfig, r: &SpectrumReport) -> Result<Artifacts, RunError> {
    Ok(vec![("spectrum.csv".into(), prepend(&cfg.stamp(), r.to_csv())), ("spectrum.json".into(), stamped(cfg, r)?)])
}

pub fn tomo_artifacts(cfg: &ExperimentConfig, r: &TomographyReport) -> Result<Artifacts, RunError> {
    Ok(vec![("tomo.csv".into(), prepend(&cfg.stamp(), tomo_csv(r))), ("tomo.json".into(), stamped(cfg, r)?)])
}

pub fn mitigation_artifacts(cfg: &ExperimentConfig, r: &MitigationReport) -> Result<Artifacts, RunError> {
    let stamp = format!("{}# readout model: {}\n", cfg.stamp(), r.readout_model);
    Ok(vec![("mitigation.csv".into(), prepend(&stamp, r.to_csv())), ("mitigation.json".into(), stamped(cfg, r)?)])
}

pub fn fit_artifacts(cfg: &ExperimentConfig, fits: &[ChargeFit]) -> Result<Artifacts, RunError> {
    let mut out =
        vec![("fits.csv".into(), prepend(&cfg.stamp(), fits_csv(fits))), ("fits.json".into(), stamped(cfg, &fits)?)];
    let records: Vec<&BenchmarkRecord> = fits.iter().filter_map(|f| f.benchmark.as_ref()).collect();
    if !records.is_empty() {
        let mut lines = String::new();
        for r in records {
            let line = Stamped { code_version: CODE_VERSION.into(), config_sha256: cfg.hash(), report: r };
            lines.push_str(&serde_json::to_string(&line)?);
            lines.push('\n');
        }
        out.push(("benchmark.jsonl".into(), lines));
    }
    Ok(out)
}

pub fn charge_artifacts(cfg: &ExperimentConfig) -> Result<Artifacts, RunError> {
    export_charges(cfg)
}

/// Write artifacts under `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, files: &Artifacts) -> Result<Vec<PathBuf>, RunError> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.into(), source })?;
    files
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| RunError::Io { path: path.clone(), source })?;
            Ok(path)
        })
        .collect()
}

/// Noise block rates in a readable form for logs.
pub fn describe_noise(n: &NoiseConfig) -> String {
    let r = |x: Option<Rates>| match x {
        None => "-".to_string(),
        Some(Rates::Single(p)) => p.to_string(),
        Some(Rates::Pair([a, b])) => format!("[{a}, {b}]"),
    };
    format!("{:?} p1={} p2={} readout={}", n.kind, r(n.p1), r(n.p2), opt(n.readout_flip))
}
