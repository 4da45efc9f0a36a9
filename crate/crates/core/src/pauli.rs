//! Bit-packed Pauli strings with exact phase tracking.
//!
//! A string on `n` sites stores one X bit and one Z bit per site. Site `j`
//! (1-based, as in the chain labels) lives in bit `j - 1` of each mask, so
//! site 1 is the lowest-order bit. The same convention is used by the
//! statevector index in [`crate::sim`]: bit `j - 1` of a basis index is the
//! state of site `j`.
//!
//! The operator represented is `i^phase * L_1 ⊗ L_2 ⊗ ... ⊗ L_n`, where each
//! letter `L_j` is the Hermitian Pauli matrix selected by the bit pair
//! (`Y` means the true Pauli Y, not `XZ`).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest chain the packed representation supports.
pub const MAX_SITES: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("size mismatch: {left} sites vs {right} sites")]
    SizeMismatch { left: usize, right: usize },
    #[error("chain of {0} sites exceeds the packed limit of {MAX_SITES}")]
    TooManySites(usize),
    #[error("a Pauli string needs at least one site")]
    Empty,
    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("cannot parse Pauli string {0:?}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PauliError>;

/// Single-site Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub const NON_IDENTITY: [Letter; 3] = [Letter::X, Letter::Y, Letter::Z];

    /// `(x, z)` bit pair.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Letter {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        match c {
            'I' | 'i' | '_' => Some(Letter::I),
            'X' | 'x' => Some(Letter::X),
            'Y' | 'y' => Some(Letter::Y),
            'Z' | 'z' => Some(Letter::Z),
            _ => None,
        }
    }

    /// Index of the vector component (X=0, Y=1, Z=2); `None` for identity.
    pub fn component(self) -> Option<usize> {
        match self {
            Letter::I => None,
            Letter::X => Some(0),
            Letter::Y => Some(1),
            Letter::Z => Some(2),
        }
    }
}

/// `i^k` for `k` mod 4.
pub fn phase_to_complex(k: u8) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// One tensor product of single-site Paulis with a global factor `i^phase`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n_sites: u8,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    fn check_size(n_sites: usize) -> Result<()> {
        if n_sites == 0 {
            return Err(PauliError::Empty);
        }
        if n_sites > MAX_SITES {
            return Err(PauliError::TooManySites(n_sites));
        }
        Ok(())
    }

    pub fn identity(n_sites: usize) -> Result<Self> {
        Self::check_size(n_sites)?;
        Ok(Self { n_sites: n_sites as u8, x: 0, z: 0, phase: 0 })
    }

    /// Build from raw masks; bits above `n_sites` are rejected.
    pub fn from_masks(n_sites: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        Self::check_size(n_sites)?;
        let m = low_mask(n_sites);
        if x & !m != 0 || z & !m != 0 {
            return Err(PauliError::Parse(format!("mask bits beyond site {n_sites}")));
        }
        Ok(Self { n_sites: n_sites as u8, x, z, phase: phase & 3 })
    }

    pub fn from_letters(letters: &[Letter]) -> Result<Self> {
        Self::check_size(letters.len())?;
        let (mut x, mut z) = (0u64, 0u64);
        for (j, l) in letters.iter().enumerate() {
            let (bx, bz) = l.bits();
            x |= (bx as u64) << j;
            z |= (bz as u64) << j;
        }
        Ok(Self { n_sites: letters.len() as u8, x, z, phase: 0 })
    }

    /// A product of letters on chosen sites (1-based), identity elsewhere.
    pub fn from_sites(n_sites: usize, placed: &[(usize, Letter)]) -> Result<Self> {
        let mut p = Self::identity(n_sites)?;
        for &(site, l) in placed {
            p = p.with_letter(site, l)?;
        }
        Ok(p)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Sites carrying a non-identity letter, as a bit mask.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn phase_power(&self) -> u8 {
        self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Same letters with phase reset to zero (the canonical polynomial key).
    pub fn without_phase(&self) -> Self {
        Self { phase: 0, ..*self }
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        Self { phase: phase & 3, ..*self }
    }

    /// Hermitian iff the global factor is real.
    pub fn is_hermitian(&self) -> bool {
        self.phase & 1 == 0
    }

    pub fn letter(&self, site: usize) -> Letter {
        let b = site - 1;
        Letter::from_bits((self.x >> b) & 1 == 1, (self.z >> b) & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Letter> {
        (1..=self.n_sites()).map(|s| self.letter(s)).collect()
    }

    pub fn with_letter(&self, site: usize, l: Letter) -> Result<Self> {
        if site == 0 || site > self.n_sites() {
            return Err(PauliError::SiteOutOfRange { site, n_sites: self.n_sites() });
        }
        let b = 1u64 << (site - 1);
        let (bx, bz) = l.bits();
        let x = if bx { self.x | b } else { self.x & !b };
        let z = if bz { self.z | b } else { self.z & !b };
        Ok(Self { x, z, ..*self })
    }

    fn same_size(&self, other: &Self) -> Result<()> {
        if self.n_sites != other.n_sites {
            return Err(PauliError::SizeMismatch { left: self.n_sites(), right: other.n_sites() });
        }
        Ok(())
    }

    /// Exact operator product `self · rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        self.same_size(rhs)?;
        Ok(self.mul_unchecked(rhs))
    }

    pub(crate) fn mul_unchecked(&self, rhs: &Self) -> Self {
        // Each Y carries an i relative to XZ: L(x,z) = i^{|x&z|} X^x Z^z.
        let ya = (self.x & self.z).count_ones();
        let yb = (rhs.x & rhs.z).count_ones();
        let swap = (self.z & rhs.x).count_ones();
        let x = self.x ^ rhs.x;
        let z = self.z ^ rhs.z;
        let yc = (x & z).count_ones();
        let k = self.phase as u32 + rhs.phase as u32 + ya + yb + 2 * swap + 4 - (yc & 3);
        Self { n_sites: self.n_sites, x, z, phase: (k & 3) as u8 }
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.same_size(other)?;
        Ok(self.commutes_unchecked(other))
    }

    pub(crate) fn commutes_unchecked(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()).is_multiple_of(2)
    }

    /// `tr(a·b) / 2^N`.
    pub fn trace_pair(&self, other: &Self) -> Result<Complex64> {
        self.same_size(other)?;
        if self.x != other.x || self.z != other.z {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(phase_to_complex(self.mul_unchecked(other).phase))
    }

    /// Cyclic relabelling `site j -> site j + k` (mod N).
    pub fn translate(&self, k: i64) -> Self {
        let n = self.n_sites() as i64;
        let s = k.rem_euclid(n) as u32;
        if s == 0 {
            return *self;
        }
        let m = low_mask(self.n_sites());
        let rot = |v: u64| ((v << s) | (v >> (n as u32 - s))) & m;
        Self { x: rot(self.x), z: rot(self.z), ..*self }
    }

    /// Place this string into a longer chain, site 1 landing on `offset + 1`.
    /// Sites past the end wrap around cyclically.
    pub fn embed(&self, n_target: usize, offset: usize) -> Result<Self> {
        if n_target < self.n_sites() {
            return Err(PauliError::SizeMismatch { left: self.n_sites(), right: n_target });
        }
        let wide = Self::from_masks(n_target, self.x, self.z, self.phase)?;
        Ok(wide.translate(offset as i64))
    }

    /// Action on a computational basis state: `P|i> = i^k |j>`, returns `(j, k)`.
    #[inline]
    pub fn apply_to_basis(&self, index: u64) -> (u64, u8) {
        let y = (self.x & self.z).count_ones();
        let sign = (index & self.z).count_ones() & 1;
        let k = (self.phase as u32 + y + 2 * sign) & 3;
        (index ^ self.x, k as u8)
    }

    /// Letters only, site 1 leftmost.
    pub fn letters_string(&self) -> String {
        (1..=self.n_sites()).map(|s| self.letter(s).as_char()).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "",
            1 => "i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{prefix}{}", self.letters_string())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Accepts an optional phase prefix (`+`, `-`, `i`, `-i`, `+i`) followed by
    /// one letter per site.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if s.len() > 1 && s.starts_with('i') && s[1..].chars().all(|c| "IXYZ".contains(c)) {
            (1, &s[1..])
        } else {
            (0, s)
        };
        let letters = rest
            .chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| PauliError::Parse(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(&letters)?.with_phase(phase))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
