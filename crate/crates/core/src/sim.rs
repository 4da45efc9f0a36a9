//! Statevector and density-matrix engines with in-place gate kernels,
//! Pauli expectations and shot sampling.
//!
//! A basis index stores site `j` in bit `j − 1`. The density matrix is kept
//! row-major, so entry `(r, c)` sits at `r·2^N + c`; viewed as a vector on
//! `2N` bits, row bits are the high half and column bits the low half.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charges::PauliPolynomial;
use crate::circuit::{build_measurement_rotation, Circuit, CircuitError, Gate, InitialStateSpec, Section};
use crate::noise::{NoiseError, NoiseModel};
use crate::pauli::{Letter, PauliString};

pub const STATEVECTOR_MAX_SITES: usize = 24;
pub const DENSITY_MAX_SITES: usize = 10;

/// Shots drawn per independent RNG stream.
pub const SHOT_BLOCK: u64 = 4096;

type C = Complex64;
const ZERO: C = C::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("state has {state} sites but the operation expects {expected}")]
    SizeMismatch { state: usize, expected: usize },
    #[error("{n_sites} sites exceeds the {engine} budget of {max}")]
    Budget { engine: &'static str, n_sites: usize, max: usize },
    #[error("expectation value has imaginary part {0:e}")]
    ImaginaryExpectation(f64),
    #[error("shot count must be positive")]
    NoShots,
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn mat2(g: &Gate) -> [[C; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::PauliX(_) => [[ZERO, c(1.0)], [c(1.0), ZERO]],
        Gate::Hadamard(_) => [[c(h), c(h)], [c(h), c(-h)]],
        Gate::PhaseS(_) => [[c(1.0), ZERO], [ZERO, C::i()]],
        Gate::PhaseSInverse(_) => [[c(1.0), ZERO], [ZERO, -C::i()]],
        Gate::RotZ { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[C::new(co, -s), ZERO], [ZERO, C::new(co, s)]]
        }
        Gate::ControlledNot { .. } => unreachable!("two-site gate"),
    }
}

fn conj2(m: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

fn kernel_1(v: &mut [C], bit: usize, m: &[[C; 2]; 2]) {
    let step = 1usize << bit;
    for chunk in v.chunks_exact_mut(2 * step) {
        let (lo, hi) = chunk.split_at_mut(step);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    }
}

/// Inserts zero bits at positions `lo < hi` into `k`.
#[inline]
fn insert_two_zeros(k: usize, lo: usize, hi: usize) -> usize {
    let low_mask = (1usize << lo) - 1;
    let k = (k & low_mask) | ((k & !low_mask) << 1);
    let high_mask = (1usize << hi) - 1;
    (k & high_mask) | ((k & !high_mask) << 1)
}

/// 4×4 matrix on bits `(first, second)`, local index `2·b_first + b_second`.
fn kernel_2(v: &mut [C], first: usize, second: usize, m: &[[C; 4]; 4]) {
    let (mf, ms) = (1usize << first, 1usize << second);
    let (lo, hi) = (first.min(second), first.max(second));
    for k in 0..v.len() / 4 {
        let base = insert_two_zeros(k, lo, hi);
        let idx = [base, base | ms, base | mf, base | mf | ms];
        let x = [v[idx[0]], v[idx[1]], v[idx[2]], v[idx[3]]];
        for (r, &i) in idx.iter().enumerate() {
            v[i] = m[r][0] * x[0] + m[r][1] * x[1] + m[r][2] * x[2] + m[r][3] * x[3];
        }
    }
}

/// Controlled-NOT as a permutation of amplitudes.
fn kernel_cx(v: &mut [C], control: usize, target: usize) {
    let (mc, mt) = (1usize << control, 1usize << target);
    let (lo, hi) = (control.min(target), control.max(target));
    for k in 0..v.len() / 4 {
        let base = insert_two_zeros(k, lo, hi) | mc;
        v.swap(base, base | mt);
    }
}

fn check_sites(n: usize, max: usize, engine: &'static str) -> Result<(), SimError> {
    if n == 0 || n > max {
        return Err(SimError::Budget { engine, n_sites: n, max });
    }
    Ok(())
}

/// Distribution of measurement outcomes over basis indices.
fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    for x in p.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|x| *x /= s);
    }
    p
}

/// Operations shared by both engines.
pub trait QuantumState: Clone + Send + Sync {
    fn n_sites(&self) -> usize;
    fn apply_gate(&mut self, gate: &Gate);
    /// `⟨P⟩` including the string's phase.
    fn pauli_expectation(&self, p: &PauliString) -> C;
    /// Computational-basis probabilities.
    fn probabilities(&self) -> Vec<f64>;

    fn apply_gates(&mut self, gates: &[Gate]) {
        for g in gates {
            self.apply_gate(g);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    amps: Vec<C>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_sites: usize) -> Result<Self, SimError> {
        check_sites(n_sites, STATEVECTOR_MAX_SITES, "statevector")?;
        let mut amps = vec![ZERO; 1 << n_sites];
        amps[0] = c(1.0);
        Ok(Self { n_sites, amps })
    }

    /// Product state prepared by the circuit's preparation gates.
    pub fn prepared(spec: &InitialStateSpec) -> Result<Self, SimError> {
        let mut s = Self::zero(spec.n_sites())?;
        s.apply_gates(&crate::circuit::build_init(spec)?);
        Ok(s)
    }

    /// Normalizes the given amplitudes.
    pub fn from_amplitudes(amps: Vec<C>) -> Result<Self, SimError> {
        let n_sites = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n_sites {
            return Err(SimError::SizeMismatch { state: amps.len(), expected: 1 << n_sites });
        }
        check_sites(n_sites, STATEVECTOR_MAX_SITES, "statevector")?;
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        Ok(Self { n_sites, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    pub fn amplitudes(&self) -> &[C] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }
}

impl QuantumState for StateVector {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn apply_gate(&mut self, gate: &Gate) {
        match *gate {
            Gate::ControlledNot { control, target } => kernel_cx(&mut self.amps, control - 1, target - 1),
            _ => kernel_1(&mut self.amps, gate.sites()[0] - 1, &mat2(gate)),
        }
    }

    fn pauli_expectation(&self, p: &PauliString) -> C {
        let mut acc = ZERO;
        for (i, a) in self.amps.iter().enumerate() {
            let (j, k) = p.apply_to_basis(i as u64);
            acc += self.amps[j as usize].conj() * crate::pauli::phase_to_complex(k) * a;
        }
        acc
    }

    fn probabilities(&self) -> Vec<f64> {
        normalized(self.amps.iter().map(|a| a.norm_sqr()).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_sites: usize,
    data: Vec<C>,
}

/// One-site superoperator in the layout of [`crate::noise::KrausChannel::site_superoperator`].
type SiteSuper = [[C; 4]; 4];

impl DensityMatrix {
    pub fn zero(n_sites: usize) -> Result<Self, SimError> {
        check_sites(n_sites, DENSITY_MAX_SITES, "density-matrix")?;
        let dim = 1usize << n_sites;
        let mut data = vec![ZERO; dim * dim];
        data[0] = c(1.0);
        Ok(Self { n_sites, data })
    }

    pub fn maximally_mixed(n_sites: usize) -> Result<Self, SimError> {
        check_sites(n_sites, DENSITY_MAX_SITES, "density-matrix")?;
        let dim = 1usize << n_sites;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = c(1.0 / dim as f64);
        }
        Ok(Self { n_sites, data })
    }

    pub fn from_pure(psi: &StateVector) -> Result<Self, SimError> {
        check_sites(psi.n_sites, DENSITY_MAX_SITES, "density-matrix")?;
        let a = &psi.amps;
        let data = a.iter().flat_map(|r| a.iter().map(move |col| r * col.conj())).collect();
        Ok(Self { n_sites: psi.n_sites, data })
    }

    /// Row-major entries; must hold `4^N` values.
    pub fn from_entries(n_sites: usize, data: Vec<C>) -> Result<Self, SimError> {
        check_sites(n_sites, DENSITY_MAX_SITES, "density-matrix")?;
        if data.len() != 1 << (2 * n_sites) {
            return Err(SimError::SizeMismatch { state: data.len(), expected: 1 << (2 * n_sites) });
        }
        Ok(Self { n_sites, data })
    }

    pub fn dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn entries(&self) -> &[C] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> C {
        self.data[row * self.dim() + col]
    }

    pub fn to_matrix(&self) -> nalgebra::DMatrix<C> {
        nalgebra::DMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn trace(&self) -> C {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for r in 0..d {
            for col in 0..d {
                s += (self.data[r * d + col] * self.data[col * d + r]).re;
            }
        }
        s
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut e: f64 = 0.0;
        for r in 0..d {
            for col in r..d {
                e = e.max((self.data[r * d + col] - self.data[col * d + r].conj()).norm());
            }
        }
        e
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_matrix();
        let herm = (&m + m.adjoint()) * c(0.5);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Conjugate by `U ⊗ 1` on the row bit and `U* ` on the column bit.
    fn conj_one(&mut self, site: usize, m: &[[C; 2]; 2]) {
        let n = self.n_sites;
        kernel_1(&mut self.data, n + site - 1, m);
        kernel_1(&mut self.data, site - 1, &conj2(m));
    }

    /// Applies a one-site superoperator.
    pub(crate) fn apply_site_super(&mut self, site: usize, s: &SiteSuper) {
        let n = self.n_sites;
        kernel_2(&mut self.data, n + site - 1, site - 1, s);
    }
}

impl QuantumState for DensityMatrix {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn apply_gate(&mut self, gate: &Gate) {
        let n = self.n_sites;
        match *gate {
            Gate::ControlledNot { control, target } => {
                kernel_cx(&mut self.data, n + control - 1, n + target - 1);
                kernel_cx(&mut self.data, control - 1, target - 1);
            }
            _ => self.conj_one(gate.sites()[0], &mat2(gate)),
        }
    }

    fn pauli_expectation(&self, p: &PauliString) -> C {
        let d = self.dim();
        let mut acc = ZERO;
        for i in 0..d {
            let (j, k) = p.apply_to_basis(i as u64);
            acc += crate::pauli::phase_to_complex(k) * self.data[i * d + j as usize];
        }
        acc
    }

    fn probabilities(&self) -> Vec<f64> {
        normalized((0..self.dim()).map(|i| self.get(i, i).re).collect())
    }
}

/// A noise model with its channels converted to superoperators.
#[derive(Debug, Clone)]
pub struct CompiledNoise {
    one: Option<SiteSuper>,
    two: Option<SiteSuper>,
    readout_flip: Option<f64>,
    noisy_init_measure: bool,
}

impl CompiledNoise {
    pub fn new(model: &NoiseModel) -> Result<Self, SimError> {
        model.validate()?;
        Ok(Self {
            one: model.after_one_qubit.as_ref().map(|ch| ch.site_superoperator()).transpose()?,
            two: model.after_two_qubit.as_ref().map(|ch| ch.site_superoperator()).transpose()?,
            readout_flip: model.readout_flip,
            noisy_init_measure: model.noisy_init_measure,
        })
    }

    pub fn readout_flip(&self) -> Option<f64> {
        self.readout_flip
    }

    /// Gate followed by its channel. `preparation` marks init and measurement gates.
    pub fn apply_gate(&self, rho: &mut DensityMatrix, gate: &Gate, preparation: bool) {
        rho.apply_gate(gate);
        if gate.is_two_site() {
            if let Some(s) = &self.two {
                for site in gate.sites() {
                    rho.apply_site_super(site, s);
                }
            }
        } else if let Some(s) = &self.one {
            if !preparation || self.noisy_init_measure {
                rho.apply_site_super(gate.sites()[0], s);
            }
        }
    }

    pub fn apply_gates(&self, rho: &mut DensityMatrix, gates: &[Gate], preparation: bool) {
        for g in gates {
            self.apply_gate(rho, g, preparation);
        }
    }
}

fn check_size(state: usize, expected: usize) -> Result<(), SimError> {
    if state != expected {
        return Err(SimError::SizeMismatch { state, expected });
    }
    Ok(())
}

/// Noiseless execution of every gate in order.
pub fn evolve_pure(circuit: &Circuit, mut init: StateVector) -> Result<StateVector, SimError> {
    check_size(init.n_sites, circuit.n_sites())?;
    init.apply_gates(circuit.gates());
    Ok(init)
}

/// Each gate followed by its configured channel.
pub fn evolve_noisy(circuit: &Circuit, mut init: DensityMatrix, noise: &NoiseModel) -> Result<DensityMatrix, SimError> {
    check_size(init.n_sites, circuit.n_sites())?;
    let compiled = CompiledNoise::new(noise)?;
    for (section, range) in circuit.sections() {
        let prep = matches!(section, Section::Init | Section::Measure);
        compiled.apply_gates(&mut init, &circuit.gates()[range.clone()], prep);
    }
    Ok(init)
}

/// `tr(ρ Q(δ))`, rejecting a non-negligible imaginary part.
///
/// The tolerance is `1e−10` per unit of total coefficient weight.
pub fn exact_expectation<S: QuantumState>(state: &S, charge: &PauliPolynomial, delta: f64) -> Result<f64, SimError> {
    check_size(state.n_sites(), charge.n_sites())?;
    let terms = charge.evaluate(delta);
    let weight: f64 = terms.iter().map(|(_, w)| w.abs()).sum();
    // Collected before summing so the result does not depend on work splitting.
    let parts: Vec<C> = terms.par_iter().map(|(p, w)| state.pauli_expectation(p) * *w).collect();
    let value: C = parts.iter().sum();
    if value.im.abs() > 1e-10 * weight.max(1.0) {
        return Err(SimError::ImaginaryExpectation(value.im));
    }
    Ok(value.re)
}

/// Outcome probabilities after rotating every site into the word's basis.
pub fn word_probabilities_pure(state: &StateVector, word: &[Letter]) -> Result<Vec<f64>, SimError> {
    check_size(state.n_sites, word.len())?;
    let mut s = state.clone();
    s.apply_gates(&build_measurement_rotation(word)?);
    Ok(s.probabilities())
}

/// As [`word_probabilities_pure`], with measurement-rotation noise when configured.
pub fn word_probabilities_noisy(
    rho: &DensityMatrix,
    word: &[Letter],
    noise: &CompiledNoise,
) -> Result<Vec<f64>, SimError> {
    check_size(rho.n_sites, word.len())?;
    let mut r = rho.clone();
    noise.apply_gates(&mut r, &build_measurement_rotation(word)?, true);
    Ok(r.probabilities())
}

/// Outcome counts keyed by basis index (site `j` in bit `j − 1`).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "CountsRepr", into = "CountsRepr")]
pub struct Counts {
    n_sites: usize,
    map: BTreeMap<u64, u64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CountsRepr {
    n_sites: usize,
    counts: BTreeMap<String, u64>,
}

impl From<Counts> for CountsRepr {
    fn from(c: Counts) -> Self {
        let counts = c.map.iter().map(|(k, v)| (bitstring(*k, c.n_sites), *v)).collect();
        CountsRepr { n_sites: c.n_sites, counts }
    }
}

impl TryFrom<CountsRepr> for Counts {
    type Error = String;
    fn try_from(r: CountsRepr) -> Result<Self, String> {
        let mut out = Counts::new(r.n_sites);
        for (k, v) in r.counts {
            out.add(parse_bitstring(&k, r.n_sites)?, v);
        }
        Ok(out)
    }
}

/// Site 1 first.
pub fn bitstring(index: u64, n_sites: usize) -> String {
    (0..n_sites).map(|j| if index >> j & 1 == 1 { '1' } else { '0' }).collect()
}

pub fn parse_bitstring(s: &str, n_sites: usize) -> Result<u64, String> {
    if s.len() != n_sites {
        return Err(format!("bitstring {s:?} should have {n_sites} characters"));
    }
    s.chars().enumerate().try_fold(0u64, |acc, (j, ch)| match ch {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        _ => Err(format!("invalid character {ch:?} in bitstring")),
    })
}

impl Counts {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, map: BTreeMap::new() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn add(&mut self, outcome: u64, k: u64) {
        if k > 0 {
            *self.map.entry(outcome).or_default() += k;
        }
    }

    pub fn merge(mut self, other: &Counts) -> Self {
        for (&k, &v) in &other.map {
            self.add(k, v);
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.map.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.map.iter().map(|(k, v)| (*k, *v))
    }

    pub fn get(&self, outcome: u64) -> u64 {
        self.map.get(&outcome).copied().unwrap_or(0)
    }

    /// Expected counts for an exact distribution, as real weights.
    pub fn frequencies(&self) -> Vec<(u64, f64)> {
        let t = self.total() as f64;
        self.iter().map(|(k, v)| (k, v as f64 / t)).collect()
    }
}

impl fmt::Display for Counts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.iter() {
            writeln!(f, "{} {v}", bitstring(k, self.n_sites))?;
        }
        Ok(())
    }
}

/// Reproducible, well-mixed seed for a labelled sub-run.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based stream for one shot block of one word.
pub fn shot_rng(seed: u64, word_index: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(word_index);
    rng.set_word_pos((block as u128) << 48);
    rng
}

/// Multinomial draw from `probs` by inverse CDF, with optional per-bit flips.
pub fn sample(
    probs: &[f64],
    n_sites: usize,
    shots: u64,
    seed: u64,
    word_index: u64,
    readout_flip: Option<f64>,
) -> Result<Counts, SimError> {
    if shots == 0 {
        return Err(SimError::NoShots);
    }
    check_size(probs.len().trailing_zeros() as usize, n_sites)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let blocks = shots.div_ceil(SHOT_BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = shot_rng(seed, word_index, b);
            let n = SHOT_BLOCK.min(shots - b * SHOT_BLOCK);
            let mut local = Counts::new(n_sites);
            for _ in 0..n {
                let u: f64 = rng.random::<f64>() * total;
                let mut k = cdf.partition_point(|&x| x <= u).min(probs.len() - 1) as u64;
                if let Some(q) = readout_flip {
                    for j in 0..n_sites {
                        if rng.random::<f64>() < q {
                            k ^= 1 << j;
                        }
                    }
                }
                local.add(k, 1);
            }
            local
        })
        .reduce(|| Counts::new(n_sites), |a, b| a.merge(&b));
    Ok(counts)
}

/// Probabilities after independent per-bit flips with probability `q`.
pub fn apply_readout_flip(probs: &[f64], n_sites: usize, q: f64) -> Vec<f64> {
    let mut v: Vec<C> = probs.iter().map(|p| c(*p)).collect();
    let m = [[c(1.0 - q), c(q)], [c(q), c(1.0 - q)]];
    for j in 0..n_sites {
        kernel_1(&mut v, j, &m);
    }
    v.iter().map(|x| x.re).collect()
}
