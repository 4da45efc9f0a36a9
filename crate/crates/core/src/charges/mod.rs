//! Conserved charges of the Trotterized XXX chain.
//!
//! Densities are exact Pauli polynomials in δ. Orders 1 and 2 are written
//! out by hand; higher orders come from the boost recursion. Charges on a
//! periodic chain are sums of translated densities.

mod boost;
mod density;
mod export;
mod poly;
mod transfer;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use boost::{boost_step, generate_density, MAX_BOOST_ORDER};
pub use density::{density, nested_product, SpinExpr};
pub use export::{ChargeCache, ChargeDocument, ChargeTerm, GAUGE_TAG};
pub use poly::{DeltaPoly, PauliPolynomial, DENSE_MAX_SITES};
pub use transfer::{brickwork_unitary, rcheck_matrix, transfer_matrix, TRANSFER_MAX_SITES};

use crate::pauli::PauliError;

#[derive(Debug, Error)]
pub enum ChargeError {
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error("invalid charge specification: {0}")]
    InvalidSpec(String),
    #[error("identity term in a traceless operator")]
    IdentityTerm,
    #[error("term {0} has an imaginary coefficient")]
    NonHermitianTerm(String),
    #[error("internal consistency failure: {0}")]
    Consistency(String),
    #[error("division by delta leaves a remainder on term {0}")]
    DivisionRemainder(String),
    #[error("{n_sites} sites exceeds the dense limit of {max}")]
    TooLarge { n_sites: usize, max: usize },
    #[error("spectral parameter {0} sits on a pole of the R-matrix")]
    Pole(String),
    #[error("matrix is singular")]
    Singular,
    #[error("charge cache i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("charge document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Sign branch of a density: plus windows start on even sites, minus on odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// `+1` for plus, `-1` for minus.
    pub fn sign(self) -> i64 {
        match self {
            Branch::Plus => 1,
            Branch::Minus => -1,
        }
    }
}

/// Which charge of order n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plus,
    Minus,
    Dif,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Plus => "plus",
            Variant::Minus => "minus",
            Variant::Dif => "dif",
        })
    }
}

impl FromStr for Variant {
    type Err = ChargeError;
    fn from_str(s: &str) -> Result<Self, ChargeError> {
        match s {
            "plus" | "+" => Ok(Variant::Plus),
            "minus" | "-" => Ok(Variant::Minus),
            "dif" | "diff" => Ok(Variant::Dif),
            _ => Err(ChargeError::InvalidSpec(format!("unknown variant {s:?}"))),
        }
    }
}

/// A charge `Q_n` of a given variant on an `N`-site periodic chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChargeSpec {
    pub order: usize,
    pub variant: Variant,
    pub n_sites: usize,
}

impl ChargeSpec {
    pub fn new(order: usize, variant: Variant, n_sites: usize) -> Result<Self, ChargeError> {
        let s = Self { order, variant, n_sites };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ChargeError> {
        if self.order == 0 {
            return Err(ChargeError::InvalidSpec("charge order starts at 1".into()));
        }
        if !self.n_sites.is_multiple_of(2) {
            return Err(ChargeError::InvalidSpec(format!("chain length {} is odd", self.n_sites)));
        }
        if self.n_sites <= 2 * self.order + 1 {
            return Err(ChargeError::InvalidSpec(format!(
                "order {} needs more than {} sites, got {}",
                self.order,
                2 * self.order + 1,
                self.n_sites
            )));
        }
        if self.n_sites > crate::pauli::MAX_SITES {
            return Err(ChargeError::Pauli(PauliError::TooManySites(self.n_sites)));
        }
        Ok(())
    }

    /// Short label such as `Q1+`, `Q2-`, `Q1dif`.
    pub fn label(&self) -> String {
        let v = match self.variant {
            Variant::Plus => "+",
            Variant::Minus => "-",
            Variant::Dif => "dif",
        };
        format!("Q{}{}", self.order, v)
    }
}

/// Sum of translated copies of one window density over the periodic chain.
///
/// Plus windows start at sites `N, 2, 4, ..., N-2`; minus windows at
/// `1, 3, ..., N-1` (1-based, wrapping cyclically).
pub fn place_density(q: &PauliPolynomial, n_sites: usize, branch: Branch) -> Result<PauliPolynomial, ChargeError> {
    if q.n_sites() >= n_sites {
        return Err(ChargeError::InvalidSpec(format!(
            "window of {} sites does not fit a {}-site chain",
            q.n_sites(),
            n_sites
        )));
    }
    let mut out = PauliPolynomial::new(n_sites);
    for j in 1..=n_sites / 2 {
        let start = match branch {
            Branch::Plus => 2 * j - 2,
            Branch::Minus => 2 * j - 1,
        };
        // 1-based start site s maps window site 1 to chain site s, offset s-1.
        let offset = (start + n_sites - 1) % n_sites;
        out.add_scaled(&q.embed(n_sites, offset)?, 1)?;
    }
    Ok(out)
}

/// Assemble the charge on the periodic chain from freshly generated densities.
pub fn assemble(spec: &ChargeSpec) -> Result<PauliPolynomial, ChargeError> {
    assemble_with(spec, generate_density)
}

/// Assemble using a caller-supplied density source (for caching).
pub fn assemble_with(
    spec: &ChargeSpec,
    mut source: impl FnMut(usize, Branch) -> Result<PauliPolynomial, ChargeError>,
) -> Result<PauliPolynomial, ChargeError> {
    spec.validate()?;
    let n = spec.n_sites;
    match spec.variant {
        Variant::Plus => place_density(&source(spec.order, Branch::Plus)?, n, Branch::Plus),
        Variant::Minus => place_density(&source(spec.order, Branch::Minus)?, n, Branch::Minus),
        Variant::Dif => {
            let mut d = place_density(&source(spec.order, Branch::Plus)?, n, Branch::Plus)?;
            d.add_scaled(&place_density(&source(spec.order, Branch::Minus)?, n, Branch::Minus)?, -1)?;
            d.div_delta()
        }
    }
}
