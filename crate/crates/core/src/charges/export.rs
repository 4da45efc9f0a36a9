//! JSON charge documents and an on-disk density cache.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::poly::{DeltaPoly, PauliPolynomial};
use super::{generate_density, Branch, ChargeError, Variant};
use crate::pauli::PauliString;

/// Name of the density gauge, part of every cache key.
pub const GAUGE_TAG: &str = "tail2";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeTerm {
    pub pauli: String,
    pub coeffs: Vec<i64>,
}

/// Serialized charge or density; coefficients by ascending δ power.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeDocument {
    pub n_sites: usize,
    pub order: usize,
    pub variant: Variant,
    pub terms: Vec<ChargeTerm>,
}

impl ChargeDocument {
    /// Terms are listed in lexicographic order of their letter strings.
    pub fn from_poly(poly: &PauliPolynomial, order: usize, variant: Variant) -> Self {
        let mut terms: Vec<ChargeTerm> =
            poly.terms().map(|(p, c)| ChargeTerm { pauli: p.letters_string(), coeffs: c.coeffs().to_vec() }).collect();
        terms.sort_by(|a, b| a.pauli.cmp(&b.pauli));
        Self { n_sites: poly.n_sites(), order, variant, terms }
    }

    pub fn to_poly(&self) -> Result<PauliPolynomial, ChargeError> {
        let mut poly = PauliPolynomial::new(self.n_sites);
        for t in &self.terms {
            let p: PauliString = t.pauli.parse()?;
            if p.n_sites() != self.n_sites {
                return Err(ChargeError::InvalidSpec(format!("term {} does not have {} sites", t.pauli, self.n_sites)));
            }
            poly.add_term(p, &DeltaPoly::from_coeffs(t.coeffs.clone()))?;
        }
        Ok(poly)
    }

    pub fn to_json(&self) -> Result<String, ChargeError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self, ChargeError> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Directory of generated densities keyed by (order, branch, gauge, version).
#[derive(Debug, Clone)]
pub struct ChargeCache {
    dir: PathBuf,
}

impl ChargeCache {
    pub fn new(dir: impl AsRef<Path>) -> Self {
        Self { dir: dir.as_ref().to_path_buf() }
    }

    pub fn path_for(&self, order: usize, branch: Branch) -> PathBuf {
        let b = match branch {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        };
        self.dir.join(format!("density_n{order}_{b}_{GAUGE_TAG}_v{}.json", env!("CARGO_PKG_VERSION")))
    }

    /// Load a cached density or generate and store it.
    pub fn density(&self, order: usize, branch: Branch) -> Result<PauliPolynomial, ChargeError> {
        let path = self.path_for(order, branch);
        if let Ok(text) = fs::read_to_string(&path) {
            let doc = ChargeDocument::from_json(&text)?;
            if doc.n_sites == 2 * order + 1 && doc.order == order {
                return doc.to_poly();
            }
        }
        let q = generate_density(order, branch)?;
        let variant = match branch {
            Branch::Plus => Variant::Plus,
            Branch::Minus => Variant::Minus,
        };
        fs::create_dir_all(&self.dir)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, ChargeDocument::from_poly(&q, order, variant).to_json()?)?;
        fs::rename(&tmp, &path)?;
        Ok(q)
    }
}
