//! Exact integer polynomials in δ and Pauli polynomials built on them.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ChargeError;
use crate::pauli::{phase_to_complex, PauliString};

/// Largest chain for which dense matrices are built.
pub const DENSE_MAX_SITES: usize = 14;

/// Polynomial in δ with integer coefficients, index m holding the δ^m term.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeltaPoly(Vec<i64>);

impl DeltaPoly {
    pub fn zero() -> Self {
        Self(Vec::new())
    }

    pub fn constant(c: i64) -> Self {
        Self::monomial(c, 0)
    }

    /// `c · δ^power`.
    pub fn monomial(c: i64, power: usize) -> Self {
        if c == 0 {
            return Self::zero();
        }
        let mut v = vec![0; power + 1];
        v[power] = c;
        Self(v)
    }

    pub fn from_coeffs(coeffs: Vec<i64>) -> Self {
        let mut p = Self(coeffs);
        p.trim();
        p
    }

    fn trim(&mut self) {
        while self.0.last() == Some(&0) {
            self.0.pop();
        }
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.0
    }

    pub fn coeff(&self, power: usize) -> i64 {
        self.0.get(power).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    pub fn eval(&self, delta: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * delta + c as f64)
    }

    pub fn scale(&self, k: i64) -> Self {
        Self::from_coeffs(self.0.iter().map(|c| c * k).collect())
    }

    /// Exact division by δ; `None` when the constant term is nonzero.
    pub fn div_delta(&self) -> Option<Self> {
        match self.0.first() {
            None => Some(Self::zero()),
            Some(0) => Some(Self(self.0[1..].to_vec())),
            Some(_) => None,
        }
    }

    /// The polynomial evaluated at −δ.
    pub fn flip_delta(&self) -> Self {
        Self(self.0.iter().enumerate().map(|(m, &c)| if m % 2 == 1 { -c } else { c }).collect())
    }
}

impl fmt::Debug for DeltaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for DeltaPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, &c) in self.0.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, " {} ", if c < 0 { '-' } else { '+' })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            match m {
                0 => write!(f, "{a}")?,
                1 if a == 1 => write!(f, "d")?,
                1 => write!(f, "{a}d")?,
                _ if a == 1 => write!(f, "d^{m}")?,
                _ => write!(f, "{a}d^{m}")?,
            }
        }
        Ok(())
    }
}

impl AddAssign<&DeltaPoly> for DeltaPoly {
    fn add_assign(&mut self, rhs: &DeltaPoly) {
        if self.0.len() < rhs.0.len() {
            self.0.resize(rhs.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a += b;
        }
        self.trim();
    }
}

impl SubAssign<&DeltaPoly> for DeltaPoly {
    fn sub_assign(&mut self, rhs: &DeltaPoly) {
        if self.0.len() < rhs.0.len() {
            self.0.resize(rhs.0.len(), 0);
        }
        for (a, b) in self.0.iter_mut().zip(&rhs.0) {
            *a -= b;
        }
        self.trim();
    }
}

impl Add for &DeltaPoly {
    type Output = DeltaPoly;
    fn add(self, rhs: &DeltaPoly) -> DeltaPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &DeltaPoly {
    type Output = DeltaPoly;
    fn sub(self, rhs: &DeltaPoly) -> DeltaPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Neg for &DeltaPoly {
    type Output = DeltaPoly;
    fn neg(self) -> DeltaPoly {
        DeltaPoly(self.0.iter().map(|c| -c).collect())
    }
}

impl Mul for &DeltaPoly {
    type Output = DeltaPoly;
    fn mul(self, rhs: &DeltaPoly) -> DeltaPoly {
        if self.is_zero() || rhs.is_zero() {
            return DeltaPoly::zero();
        }
        let mut out = vec![0i64; self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            if *a == 0 {
                continue;
            }
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        DeltaPoly::from_coeffs(out)
    }
}

/// A Hermitian operator `Σ_P c_P(δ) P` with phase-free Pauli keys.
#[derive(Clone, PartialEq, Eq)]
pub struct PauliPolynomial {
    n_sites: usize,
    terms: BTreeMap<PauliString, DeltaPoly>,
}

impl PauliPolynomial {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, terms: BTreeMap::new() }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &DeltaPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> DeltaPoly {
        self.terms.get(&p.without_phase()).cloned().unwrap_or_default()
    }

    /// Add `c · p`, folding a real phase of `p` into the coefficient.
    pub fn add_term(&mut self, p: PauliString, c: &DeltaPoly) -> Result<(), ChargeError> {
        if p.n_sites() != self.n_sites {
            return Err(ChargeError::Pauli(crate::pauli::PauliError::SizeMismatch {
                left: self.n_sites,
                right: p.n_sites(),
            }));
        }
        if p.is_identity() {
            return Err(ChargeError::IdentityTerm);
        }
        let negate = match p.phase_power() {
            0 => false,
            2 => true,
            _ => return Err(ChargeError::NonHermitianTerm(p.to_string())),
        };
        if c.is_zero() {
            return Ok(());
        }
        let key = p.without_phase();
        let slot = self.terms.entry(key).or_default();
        if negate {
            *slot -= c;
        } else {
            *slot += c;
        }
        if slot.is_zero() {
            self.terms.remove(&key);
        }
        Ok(())
    }

    /// `self += k · other`.
    pub fn add_scaled(&mut self, other: &PauliPolynomial, k: i64) -> Result<(), ChargeError> {
        for (p, c) in other.terms() {
            self.add_term(*p, &c.scale(k))?;
        }
        Ok(())
    }

    pub fn map_coeffs(&self, f: impl Fn(&DeltaPoly) -> DeltaPoly) -> Self {
        let terms = self.terms.iter().map(|(p, c)| (*p, f(c))).filter(|(_, c)| !c.is_zero()).collect();
        Self { n_sites: self.n_sites, terms }
    }

    /// Every coefficient evaluated at −δ.
    pub fn flip_delta(&self) -> Self {
        self.map_coeffs(DeltaPoly::flip_delta)
    }

    /// Exact division of every coefficient by δ.
    pub fn div_delta(&self) -> Result<Self, ChargeError> {
        let mut terms = BTreeMap::new();
        for (p, c) in &self.terms {
            let q = c.div_delta().ok_or_else(|| ChargeError::DivisionRemainder(p.to_string()))?;
            if !q.is_zero() {
                terms.insert(*p, q);
            }
        }
        Ok(Self { n_sites: self.n_sites, terms })
    }

    /// Relabel every term onto a longer periodic chain, site 1 going to `offset + 1`.
    pub fn embed(&self, n_target: usize, offset: usize) -> Result<Self, ChargeError> {
        let mut out = Self::new(n_target);
        for (p, c) in &self.terms {
            out.add_term(p.embed(n_target, offset)?, c)?;
        }
        Ok(out)
    }

    pub fn translate(&self, k: i64) -> Self {
        let terms = self.terms.iter().map(|(p, c)| (p.translate(k), c.clone())).collect();
        Self { n_sites: self.n_sites, terms }
    }

    /// Numeric coefficients at a fixed δ.
    pub fn evaluate(&self, delta: f64) -> Vec<(PauliString, f64)> {
        self.terms.iter().map(|(p, c)| (*p, c.eval(delta))).collect()
    }

    /// Largest δ power present.
    pub fn max_degree(&self) -> usize {
        self.terms.values().filter_map(DeltaPoly::degree).max().unwrap_or(0)
    }

    /// Dense matrix at a fixed δ; row and column index bit `j - 1` is site `j`.
    pub fn to_matrix(&self, delta: f64) -> Result<DMatrix<Complex64>, ChargeError> {
        if self.n_sites > DENSE_MAX_SITES {
            return Err(ChargeError::TooLarge { n_sites: self.n_sites, max: DENSE_MAX_SITES });
        }
        let dim = 1usize << self.n_sites;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (p, c) in &self.terms {
            let v = c.eval(delta);
            for col in 0..dim {
                let (row, k) = p.apply_to_basis(col as u64);
                m[(row as usize, col)] += phase_to_complex(k) * v;
            }
        }
        Ok(m)
    }
}

impl fmt::Debug for PauliPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "PauliPolynomial on {} sites, {} terms", self.n_sites, self.terms.len())?;
        for (p, c) in &self.terms {
            writeln!(f, "  {p}: {c}")?;
        }
        Ok(())
    }
}
