//! Pauli-word measurement: cover selection, shot records and the pooled
//! charge estimator with its pair-covariance variance estimate.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::charges::PauliPolynomial;
use crate::noise::NoiseModel;
use crate::pauli::{Letter, PauliString};
use crate::sim::{
    sample, word_probabilities_noisy, word_probabilities_pure, CompiledNoise, Counts, DensityMatrix, SimError,
    StateVector,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("word has {word} sites, operator has {op}")]
    LengthMismatch { word: usize, op: usize },
    #[error("Pauli words cannot contain the identity (site {0})")]
    IdentityLetter(usize),
    #[error("invalid Pauli word {0:?}")]
    Parse(String),
    #[error("charge has no terms")]
    EmptyCharge,
    #[error("term {0} is not contained in any measured word")]
    Uncovered(String),
    #[error("{total} shots cannot be split across {words} words")]
    TooFewShots { total: u64, words: usize },
    #[error("records for word {word} hold {got} shots, plan expects {expected}")]
    RecordMismatch { word: String, got: u64, expected: u64 },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// A measurement basis: one of X, Y, Z on every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliWord(Vec<Letter>);

impl PauliWord {
    pub fn new(letters: Vec<Letter>) -> Result<Self, MeasureError> {
        if let Some(i) = letters.iter().position(|l| *l == Letter::I) {
            return Err(MeasureError::IdentityLetter(i + 1));
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn n_sites(&self) -> usize {
        self.0.len()
    }

    /// True iff every non-identity letter of `term` matches the word.
    pub fn contains(&self, term: &PauliString) -> Result<bool, MeasureError> {
        if term.n_sites() != self.n_sites() {
            return Err(MeasureError::LengthMismatch { word: self.n_sites(), op: term.n_sites() });
        }
        Ok(self.0.iter().enumerate().all(|(j, w)| {
            let l = term.letter(j + 1);
            l == Letter::I || l == *w
        }))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|l| write!(f, "{}", l.as_char()))
    }
}

impl FromStr for PauliWord {
    type Err = MeasureError;
    fn from_str(s: &str) -> Result<Self, MeasureError> {
        let letters = s
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| MeasureError::Parse(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(letters)
    }
}

impl TryFrom<String> for PauliWord {
    type Error = MeasureError;
    fn try_from(s: String) -> Result<Self, MeasureError> {
        s.parse()
    }
}

impl From<PauliWord> for String {
    fn from(w: PauliWord) -> String {
        w.to_string()
    }
}

/// Words to measure and shots spent on each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementPlan {
    pub words: Vec<PauliWord>,
    pub shots_per_word: u64,
}

impl MeasurementPlan {
    /// Equal split of `total` shots, rounding down.
    pub fn with_total_shots(words: Vec<PauliWord>, total: u64) -> Result<Self, MeasureError> {
        let per = if words.is_empty() { 0 } else { total / words.len() as u64 };
        if per == 0 {
            return Err(MeasureError::TooFewShots { total, words: words.len() });
        }
        Ok(Self { words, shots_per_word: per })
    }

    /// Every term of `charge` sits in at least one word.
    pub fn covers(&self, charge: &PauliPolynomial) -> Result<(), MeasureError> {
        for (p, _) in charge.terms() {
            let mut hit = false;
            for w in &self.words {
                hit |= w.contains(p)?;
            }
            if !hit {
                return Err(MeasureError::Uncovered(p.to_string()));
            }
        }
        Ok(())
    }
}

/// Letter per constrained site as `(mask, x, z)` for quick compatibility tests.
#[derive(Clone, Copy)]
struct TermKey {
    support: u64,
    x: u64,
    z: u64,
}

impl TermKey {
    fn of(p: &PauliString) -> Self {
        Self { support: p.support(), x: p.x_mask(), z: p.z_mask() }
    }

    fn allows(&self, site_bit: u64, l: Letter) -> bool {
        if self.support & site_bit == 0 {
            return true;
        }
        let (x, z) = l.bits();
        (self.x & site_bit != 0) == x && (self.z & site_bit != 0) == z
    }
}

const LETTER_ORDER: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

/// Lexicographically first word covering the most of `pending`, by
/// depth-first search with the count of still-compatible terms as bound.
fn best_word(n: usize, terms: &[TermKey], pending: &[usize]) -> (Vec<Letter>, usize) {
    struct Search<'a> {
        n: usize,
        terms: &'a [TermKey],
        word: Vec<Letter>,
        best: Option<(Vec<Letter>, usize)>,
    }
    impl Search<'_> {
        fn go(&mut self, site: usize, alive: Vec<usize>) {
            let best = self.best.as_ref().map_or(0, |b| b.1);
            if alive.len() <= best && self.best.is_some() {
                return;
            }
            if site == self.n {
                self.best = Some((self.word.clone(), alive.len()));
                return;
            }
            let bit = 1u64 << site;
            for l in LETTER_ORDER {
                let next: Vec<usize> = alive.iter().copied().filter(|&t| self.terms[t].allows(bit, l)).collect();
                self.word.push(l);
                self.go(site + 1, next);
                self.word.pop();
            }
        }
    }
    let mut s = Search { n, terms, word: Vec::with_capacity(n), best: None };
    s.go(0, pending.to_vec());
    s.best.expect("search visits at least one leaf")
}

/// Greedy cover: repeatedly take the word covering the most uncovered
/// terms (ties to the lexicographically first), with sites that none of
/// its newly covered terms constrain set to Z.
pub fn build_cover(charge: &PauliPolynomial) -> Result<Vec<PauliWord>, MeasureError> {
    if charge.is_empty() {
        return Err(MeasureError::EmptyCharge);
    }
    let n = charge.n_sites();
    let keys: Vec<TermKey> = charge.terms().map(|(p, _)| TermKey::of(p)).collect();
    let mut pending: Vec<usize> = (0..keys.len()).collect();
    let mut words = Vec::new();
    while !pending.is_empty() {
        let (mut word, _) = best_word(n, &keys, &pending);
        let covered: Vec<usize> =
            pending.iter().copied().filter(|&t| (0..n).all(|j| keys[t].allows(1 << j, word[j]))).collect();
        let constrained = covered.iter().fold(0u64, |m, &t| m | keys[t].support);
        for (j, l) in word.iter_mut().enumerate() {
            if constrained >> j & 1 == 0 {
                *l = Letter::Z;
            }
        }
        let w = PauliWord::new(word)?;
        pending.retain(|&t| !w.contains(&key_string(n, &keys[t])).unwrap_or(false));
        words.push(w);
    }
    Ok(words)
}

fn key_string(n: usize, k: &TermKey) -> PauliString {
    PauliString::from_masks(n, k.x, k.z, 0).expect("masks come from a valid string")
}

/// Outcome counts per measured word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShotRecords {
    pub records: Vec<(PauliWord, Counts)>,
}

impl ShotRecords {
    /// Each word of the plan recorded with exactly `shots_per_word` outcomes.
    pub fn validate(&self, plan: &MeasurementPlan) -> Result<(), MeasureError> {
        for (w, (rw, counts)) in plan.words.iter().zip(&self.records) {
            if w != rw || counts.total() != plan.shots_per_word {
                return Err(MeasureError::RecordMismatch {
                    word: rw.to_string(),
                    got: counts.total(),
                    expected: plan.shots_per_word,
                });
            }
        }
        if plan.words.len() != self.records.len() {
            return Err(MeasureError::RecordMismatch {
                word: "<plan>".into(),
                got: self.records.len() as u64,
                expected: plan.words.len() as u64,
            });
        }
        Ok(())
    }
}

/// Sample every word of the plan from a pure state.
pub fn collect_pure(
    state: &StateVector,
    plan: &MeasurementPlan,
    seed: u64,
    readout_flip: Option<f64>,
) -> Result<ShotRecords, MeasureError> {
    let records = plan
        .words
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let probs = word_probabilities_pure(state, w.letters())?;
            Ok((w.clone(), sample(&probs, w.n_sites(), plan.shots_per_word, seed, i as u64, readout_flip)?))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(ShotRecords { records })
}

/// Sample every word of the plan from a density matrix, with rotation noise.
pub fn collect_noisy(
    rho: &DensityMatrix,
    plan: &MeasurementPlan,
    noise: &NoiseModel,
    seed: u64,
) -> Result<ShotRecords, MeasureError> {
    let compiled = CompiledNoise::new(noise)?;
    let records = plan
        .words
        .par_iter()
        .enumerate()
        .map(|(i, w)| {
            let probs = word_probabilities_noisy(rho, w.letters(), &compiled)?;
            let counts = sample(&probs, w.n_sites(), plan.shots_per_word, seed, i as u64, compiled.readout_flip())?;
            Ok((w.clone(), counts))
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(ShotRecords { records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDiagnostic {
    pub term: PauliString,
    pub n_p: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeEstimate {
    pub value: f64,
    /// `s_Q`, from the clamped variance estimate.
    pub std_uncertainty: f64,
    /// Variance estimate before clamping at zero.
    pub raw_variance: f64,
    pub terms: Vec<TermDiagnostic>,
    pub warnings: Vec<String>,
}

#[derive(Default, Clone, Copy)]
struct PairSums {
    n: u64,
    a: f64,
    b: f64,
    ab: f64,
}

/// Pooled estimator of `⟨Q(δ)⟩` and its unbiased variance estimate.
///
/// A term's average pools every word containing it. The variance sums,
/// for each pair of terms, the sample covariance over the shots of the
/// words containing both, weighted by `n_PP' / (n_P n_P')`.
pub fn estimate(records: &ShotRecords, charge: &PauliPolynomial, delta: f64) -> Result<ChargeEstimate, MeasureError> {
    let weighted: Vec<WeightedRecord> = records
        .records
        .iter()
        .map(|(w, counts)| WeightedRecord {
            word: w.clone(),
            shots: counts.total(),
            outcomes: counts.iter().map(|(b, k)| (b, k as f64)).collect(),
        })
        .collect();
    estimate_weighted(&weighted, charge, delta)
}

/// A word's outcomes as weights summing to its shot count; counts give
/// integer weights, a corrected distribution gives `shots · x_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedRecord {
    pub word: PauliWord,
    pub shots: u64,
    pub outcomes: Vec<(u64, f64)>,
}

impl WeightedRecord {
    /// Record from a probability vector over `2^N` outcomes.
    pub fn from_distribution(word: PauliWord, shots: u64, probs: &[f64]) -> Self {
        let outcomes =
            probs.iter().enumerate().filter(|(_, p)| **p != 0.0).map(|(b, p)| (b as u64, p * shots as f64)).collect();
        Self { word, shots, outcomes }
    }
}

/// [`estimate`] over weighted outcomes. With non-integer weights the
/// variance is the plug-in value for the given distribution.
pub fn estimate_weighted(
    records: &[WeightedRecord],
    charge: &PauliPolynomial,
    delta: f64,
) -> Result<ChargeEstimate, MeasureError> {
    let terms = charge.evaluate(delta);
    if terms.is_empty() {
        return Err(MeasureError::EmptyCharge);
    }
    let t = terms.len();
    // Per word: contained term indices, plus outcome list with counts.
    let mut inside: Vec<Vec<usize>> = Vec::with_capacity(records.len());
    for r in records {
        let mut v = Vec::new();
        for (i, (p, _)) in terms.iter().enumerate() {
            if r.word.contains(p)? {
                v.push(i);
            }
        }
        inside.push(v);
    }
    let supports: Vec<u64> = terms.iter().map(|(p, _)| p.support()).collect();
    let parity = |b: u64, s: u64| if (b & s).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };

    let mut n_p = vec![0u64; t];
    let mut sum_p = vec![0.0f64; t];
    let mut pairs: HashMap<(usize, usize), PairSums> = HashMap::new();
    for (r, idx) in records.iter().zip(&inside) {
        let shots = r.shots;
        let outcomes = &r.outcomes;
        let sums: Vec<f64> =
            idx.iter().map(|&i| outcomes.iter().map(|(b, k)| k * parity(*b, supports[i])).sum()).collect();
        for (a, &i) in idx.iter().enumerate() {
            n_p[i] += shots;
            sum_p[i] += sums[a];
            for (b, &j) in idx.iter().enumerate().skip(a) {
                let ab: f64 = outcomes.iter().map(|(o, k)| k * parity(*o, supports[i] ^ supports[j])).sum();
                let e = pairs.entry((i, j)).or_default();
                e.n += shots;
                e.a += sums[a];
                e.b += sums[b];
                e.ab += ab;
            }
        }
    }
    if let Some(i) = n_p.iter().position(|&n| n == 0) {
        return Err(MeasureError::Uncovered(terms[i].0.to_string()));
    }

    let value = (0..t).map(|i| terms[i].1 * sum_p[i] / n_p[i] as f64).sum::<f64>();
    let mut warnings = Vec::new();
    let mut variance = 0.0;
    let mut keys: Vec<_> = pairs.keys().copied().collect();
    keys.sort_unstable();
    let mut skipped = 0usize;
    for (i, j) in keys {
        let s = pairs[&(i, j)];
        if s.n <= 1 {
            skipped += 1;
            continue;
        }
        let n = s.n as f64;
        // Σ (Π_P − ā)(Π_P' − b̄) over the pooled shots.
        let cross = s.ab - s.a * s.b / n;
        let weight = n / (n_p[i] as f64 * n_p[j] as f64) / (n - 1.0);
        let contrib = terms[i].1 * terms[j].1 * weight * cross;
        variance += if i == j { contrib } else { 2.0 * contrib };
    }
    if skipped > 0 {
        warnings.push(format!("{skipped} term pairs with a single shared shot skipped in the variance"));
    }
    if variance < 0.0 {
        warnings.push(format!("negative variance estimate {variance:e} clamped to zero"));
    }
    Ok(ChargeEstimate {
        value,
        std_uncertainty: variance.max(0.0).sqrt(),
        raw_variance: variance,
        terms: terms.iter().zip(&n_p).map(|((p, _), &n)| TermDiagnostic { term: *p, n_p: n }).collect(),
        warnings,
    })
}
