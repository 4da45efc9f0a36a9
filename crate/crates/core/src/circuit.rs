//! Gate lists for state preparation, brickwork evolution and measurement.
//!
//! Sites are 1-based. Global phases are dropped everywhere except where a
//! gate's matrix is given explicitly. `RotZ(θ)` is `exp(−iθZ/2)`.

use std::fmt;
use std::fmt::Write as _;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pauli::Letter;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("site {site} out of range 1..={n_sites}")]
    SiteOutOfRange { site: usize, n_sites: usize },
    #[error("two-site gate acts twice on site {0}")]
    SameSite(usize),
    #[error("brickwork evolution needs an even chain of at least 2 sites, got {0}")]
    OddChain(usize),
    #[error("measurement word has an identity letter at site {0}")]
    IdentityLetter(usize),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid bit {0}; expected 0 or 1")]
    InvalidBit(u8),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    PauliX(usize),
    Hadamard(usize),
    PhaseS(usize),
    PhaseSInverse(usize),
    RotZ { site: usize, angle: f64 },
    ControlledNot { control: usize, target: usize },
}

impl Gate {
    /// Sites in matrix order (control first for CNOT).
    pub fn sites(&self) -> Vec<usize> {
        match *self {
            Gate::PauliX(s) | Gate::Hadamard(s) | Gate::PhaseS(s) | Gate::PhaseSInverse(s) => vec![s],
            Gate::RotZ { site, .. } => vec![site],
            Gate::ControlledNot { control, target } => vec![control, target],
        }
    }

    pub fn is_two_site(&self) -> bool {
        matches!(self, Gate::ControlledNot { .. })
    }

    fn validate(&self, n_sites: usize) -> Result<(), CircuitError> {
        for s in self.sites() {
            if s == 0 || s > n_sites {
                return Err(CircuitError::SiteOutOfRange { site: s, n_sites });
            }
        }
        if let Gate::ControlledNot { control, target } = *self {
            if control == target {
                return Err(CircuitError::SameSite(control));
            }
        }
        Ok(())
    }

    /// 2×2 matrix, or 4×4 with local index `2·bit_control + bit_target`.
    pub fn local_matrix(&self) -> DMatrix<Complex64> {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match *self {
            Gate::PauliX(_) => DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]),
            Gate::Hadamard(_) => DMatrix::from_row_slice(2, 2, &[c(h, 0.), c(h, 0.), c(h, 0.), c(-h, 0.)]),
            Gate::PhaseS(_) => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 1.)]),
            Gate::PhaseSInverse(_) => DMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., -1.)]),
            Gate::RotZ { angle, .. } => {
                let (s, co) = (angle / 2.0).sin_cos();
                DMatrix::from_row_slice(2, 2, &[c(co, -s), c(0., 0.), c(0., 0.), c(co, s)])
            }
            Gate::ControlledNot { .. } => {
                let mut m = DMatrix::<Complex64>::zeros(4, 4);
                m[(0, 0)] = c(1., 0.);
                m[(1, 1)] = c(1., 0.);
                m[(3, 2)] = c(1., 0.);
                m[(2, 3)] = c(1., 0.);
                m
            }
        }
    }

    fn mnemonic(&self) -> &'static str {
        match self {
            Gate::PauliX(_) => "X",
            Gate::Hadamard(_) => "H",
            Gate::PhaseS(_) => "S",
            Gate::PhaseSInverse(_) => "SDG",
            Gate::RotZ { .. } => "RZ",
            Gate::ControlledNot { .. } => "CX",
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.mnemonic())?;
        for s in self.sites() {
            write!(f, " {s}")?;
        }
        if let Gate::RotZ { angle, .. } = self {
            write!(f, " {angle:.12}")?;
        }
        Ok(())
    }
}

/// Product state `|s_1 s_2 ...⟩` in the eigenbases of letters `P_1 P_2 ...`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialStateSpec {
    pub letters: Vec<Letter>,
    pub bits: Vec<u8>,
}

impl InitialStateSpec {
    pub fn new(letters: Vec<Letter>, bits: Vec<u8>) -> Result<Self, CircuitError> {
        let s = Self { letters, bits };
        s.validate()?;
        Ok(s)
    }

    /// Parse from bit and letter strings, e.g. `("0101", "YZXY")`.
    pub fn parse(bits: &str, letters: &str) -> Result<Self, CircuitError> {
        let b = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(CircuitError::InvalidBit(c as u8)),
            })
            .collect::<Result<Vec<u8>, _>>()?;
        let l = letters
            .chars()
            .enumerate()
            .map(|(i, c)| match Letter::from_char(c) {
                Some(Letter::I) | None => Err(CircuitError::IdentityLetter(i + 1)),
                Some(l) => Ok(l),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(l, b)
    }

    /// `|0101...⟩` in the Z basis.
    pub fn neel(n_sites: usize) -> Self {
        Self { letters: vec![Letter::Z; n_sites], bits: (0..n_sites).map(|j| (j % 2) as u8).collect() }
    }

    pub fn all_zero(n_sites: usize) -> Self {
        Self { letters: vec![Letter::Z; n_sites], bits: vec![0; n_sites] }
    }

    pub fn n_sites(&self) -> usize {
        self.letters.len()
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.letters.len() != self.bits.len() {
            return Err(CircuitError::LengthMismatch { expected: self.letters.len(), got: self.bits.len() });
        }
        if let Some(i) = self.letters.iter().position(|l| *l == Letter::I) {
            return Err(CircuitError::IdentityLetter(i + 1));
        }
        if let Some(b) = self.bits.iter().find(|b| **b > 1) {
            return Err(CircuitError::InvalidBit(*b));
        }
        Ok(())
    }
}

impl fmt::Display for InitialStateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bits: String = self.bits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect();
        let letters: String = self.letters.iter().map(|l| l.as_char()).collect();
        write!(f, "|{bits}>_{letters}")
    }
}

/// Preparation gates: `X^{s_j}`, then `H` for X, `H` then `S` for Y.
pub fn build_init(spec: &InitialStateSpec) -> Result<Vec<Gate>, CircuitError> {
    spec.validate()?;
    let mut gates = Vec::new();
    for (j, (&l, &b)) in spec.letters.iter().zip(&spec.bits).enumerate() {
        let s = j + 1;
        if b == 1 {
            gates.push(Gate::PauliX(s));
        }
        match l {
            Letter::X => gates.push(Gate::Hadamard(s)),
            Letter::Y => {
                gates.push(Gate::Hadamard(s));
                gates.push(Gate::PhaseS(s));
            }
            _ => {}
        }
    }
    Ok(gates)
}

/// Four-CNOT block equal to `exp(iα/2 (XX+YY+ZZ))` on `(a, b)`, which is the
/// R-matrix at `δ = tan α` times `e^{iα/2}`.
pub fn build_rcheck(a: usize, b: usize, alpha: f64) -> Vec<Gate> {
    let cx = Gate::ControlledNot { control: a, target: b };
    vec![
        cx,
        Gate::Hadamard(a),
        cx,
        Gate::RotZ { site: a, angle: -alpha },
        Gate::RotZ { site: b, angle: alpha },
        cx,
        Gate::Hadamard(a),
        Gate::RotZ { site: b, angle: -alpha },
        cx,
    ]
}

/// One evolution step: bonds `(2j, 2j+1)` first (with `(N, 1)`), then `(2j-1, 2j)`.
pub fn build_step(n_sites: usize, alpha: f64) -> Result<Vec<Gate>, CircuitError> {
    if n_sites < 2 || !n_sites.is_multiple_of(2) {
        return Err(CircuitError::OddChain(n_sites));
    }
    let mut gates = Vec::new();
    for j in 1..=n_sites / 2 {
        gates.extend(build_rcheck(2 * j, (2 * j) % n_sites + 1, alpha));
    }
    for j in 1..=n_sites / 2 {
        gates.extend(build_rcheck(2 * j - 1, 2 * j, alpha));
    }
    Ok(gates)
}

/// `d` repetitions of [`build_step`].
pub fn build_evolution(n_sites: usize, alpha: f64, depth: usize) -> Result<Vec<Gate>, CircuitError> {
    let step = build_step(n_sites, alpha)?;
    Ok(step.iter().copied().cycle().take(step.len() * depth).collect())
}

/// Basis change taking each word letter to Z: `H` for X, `S†` then `H` for Y.
pub fn build_measurement_rotation(word: &[Letter]) -> Result<Vec<Gate>, CircuitError> {
    let mut gates = Vec::new();
    for (j, &l) in word.iter().enumerate() {
        let s = j + 1;
        match l {
            Letter::I => return Err(CircuitError::IdentityLetter(s)),
            Letter::X => gates.push(Gate::Hadamard(s)),
            Letter::Y => {
                gates.push(Gate::PhaseSInverse(s));
                gates.push(Gate::Hadamard(s));
            }
            Letter::Z => {}
        }
    }
    Ok(gates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Init,
    Step(usize),
    Measure,
}

/// Ordered gate list with labelled, contiguous sections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_sites: usize,
    gates: Vec<Gate>,
    sections: Vec<(Section, Range<usize>)>,
}

impl Circuit {
    pub fn new(n_sites: usize) -> Self {
        Self { n_sites, gates: Vec::new(), sections: Vec::new() }
    }

    /// Append gates as a new section.
    pub fn push_section(&mut self, section: Section, gates: Vec<Gate>) -> Result<(), CircuitError> {
        for g in &gates {
            g.validate(self.n_sites)?;
        }
        let start = self.gates.len();
        self.gates.extend(gates);
        self.sections.push((section, start..self.gates.len()));
        Ok(())
    }

    /// Preparation, `depth` evolution steps, and an optional measurement rotation.
    pub fn experiment(
        init: &InitialStateSpec,
        alpha: f64,
        depth: usize,
        word: Option<&[Letter]>,
    ) -> Result<Self, CircuitError> {
        let n = init.n_sites();
        let mut c = Self::new(n);
        c.push_section(Section::Init, build_init(init)?)?;
        let step = build_step(n, alpha)?;
        for k in 1..=depth {
            c.push_section(Section::Step(k), step.clone())?;
        }
        if let Some(w) = word {
            if w.len() != n {
                return Err(CircuitError::LengthMismatch { expected: n, got: w.len() });
            }
            c.push_section(Section::Measure, build_measurement_rotation(w)?)?;
        }
        Ok(c)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn sections(&self) -> &[(Section, Range<usize>)] {
        &self.sections
    }

    pub fn section_gates(&self, section: Section) -> Option<&[Gate]> {
        self.sections.iter().find(|(s, _)| *s == section).map(|(_, r)| &self.gates[r.clone()])
    }

    pub fn cnot_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_site()).count()
    }

    /// Replace every gate by a list of gates, keeping section boundaries.
    pub fn map_gates(&self, f: impl Fn(&Gate) -> Vec<Gate>) -> Self {
        let mut out = Self::new(self.n_sites);
        for (sec, r) in &self.sections {
            let gates = self.gates[r.clone()].iter().flat_map(&f).collect();
            out.push_section(*sec, gates).expect("mapped gates keep their sites");
        }
        out
    }

    /// One gate per line; sections introduced by `#` lines.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# sites {}", self.n_sites);
        for (sec, r) in &self.sections {
            let label = match sec {
                Section::Init => "init".to_string(),
                Section::Step(k) => format!("step {k}"),
                Section::Measure => "measure".to_string(),
            };
            let _ = writeln!(s, "# {label}");
            for g in &self.gates[r.clone()] {
                let _ = writeln!(s, "{g}");
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_zero_z_state_needs_no_gates() {
        assert!(build_init(&InitialStateSpec::all_zero(5)).unwrap().is_empty());
    }

    #[test]
    fn init_gate_order() {
        let spec = InitialStateSpec::parse("0101", "YZXY").unwrap();
        let g = build_init(&spec).unwrap();
        assert_eq!(
            g,
            vec![
                Gate::Hadamard(1),
                Gate::PhaseS(1),
                Gate::PauliX(2),
                Gate::Hadamard(3),
                Gate::PauliX(4),
                Gate::Hadamard(4),
                Gate::PhaseS(4),
            ]
        );
    }

    #[test]
    fn measurement_rotation_layout() {
        let w: Vec<Letter> = "ZXXY".chars().map(|c| Letter::from_char(c).unwrap()).collect();
        let g = build_measurement_rotation(&w).unwrap();
        assert_eq!(g, vec![Gate::Hadamard(2), Gate::Hadamard(3), Gate::PhaseSInverse(4), Gate::Hadamard(4)]);
        assert!(build_measurement_rotation(&[Letter::Z; 3]).unwrap().is_empty());
        assert_eq!(build_measurement_rotation(&[Letter::Z, Letter::I]), Err(CircuitError::IdentityLetter(2)));
    }

    #[test]
    fn evolution_counts() {
        assert!(build_evolution(4, 0.3, 0).unwrap().is_empty());
        let step = build_step(4, 0.3).unwrap();
        assert_eq!(step.len(), 4 * 9);
        assert_eq!(step.iter().filter(|g| g.is_two_site()).count(), 16);
        assert_eq!(step[0], Gate::ControlledNot { control: 2, target: 3 });
        assert_eq!(step[9], Gate::ControlledNot { control: 4, target: 1 });
        assert_eq!(step[18], Gate::ControlledNot { control: 1, target: 2 });
        assert!(build_step(5, 0.3).is_err());
    }

    #[test]
    fn experiment_sections_partition_gates() {
        let init = InitialStateSpec::neel(4);
        let word = [Letter::X; 4];
        let c = Circuit::experiment(&init, 0.3, 3, Some(&word)).unwrap();
        let mut next = 0;
        for (_, r) in c.sections() {
            assert_eq!(r.start, next);
            next = r.end;
        }
        assert_eq!(next, c.gates().len());
        assert_eq!(c.cnot_count(), 3 * 16);
        assert_eq!(c.section_gates(Section::Step(2)), c.section_gates(Section::Step(3)));
    }

    #[test]
    fn invalid_sites_rejected() {
        let mut c = Circuit::new(2);
        assert!(c.push_section(Section::Init, vec![Gate::PauliX(3)]).is_err());
        assert!(c.push_section(Section::Init, vec![Gate::ControlledNot { control: 1, target: 1 }]).is_err());
    }

    #[test]
    fn dump_format() {
        let c = Circuit::experiment(&InitialStateSpec::parse("10", "XZ").unwrap(), 0.25, 0, None).unwrap();
        assert_eq!(c.dump(), "# sites 2\n# init\nX 1\nH 1\n");
    }
}
