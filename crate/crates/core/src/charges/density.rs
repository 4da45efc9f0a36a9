//! Expansion of spin-vector expressions into Pauli strings, and the two
//! lowest-order densities written in that notation.

use super::poly::{DeltaPoly, PauliPolynomial};
use super::{Branch, ChargeError};
use crate::pauli::{Letter, PauliString};

/// Nested product `σ_{s0} · (σ_{s1} × (σ_{s2} × ... × σ_{sk}))` on distinct
/// sites (1-based). Two sites give the dot product `σ_a · σ_b`.
///
/// Returns `(string, ±1)` pairs. Every string has one letter per listed site.
pub fn nested_product(n_sites: usize, sites: &[usize]) -> Result<Vec<(PauliString, i64)>, ChargeError> {
    if sites.len() < 2 {
        return Err(ChargeError::InvalidSpec("a spin product needs at least two sites".into()));
    }
    for (i, a) in sites.iter().enumerate() {
        if sites[i + 1..].contains(a) {
            return Err(ChargeError::InvalidSpec(format!("site {a} repeated in spin product")));
        }
    }
    // vector[c] lists (letters per site, coefficient) for component c.
    type Comp = Vec<(Vec<(usize, Letter)>, i64)>;
    let last = *sites.last().unwrap();
    let mut vector: [Comp; 3] = std::array::from_fn(|c| vec![(vec![(last, Letter::NON_IDENTITY[c])], 1)]);
    for &s in sites[1..sites.len() - 1].iter().rev() {
        let mut next: [Comp; 3] = Default::default();
        for (d, slot) in next.iter_mut().enumerate() {
            for e in 0..3 {
                for (a, comp) in vector.iter().enumerate() {
                    let eps = levi_civita(d, e, a);
                    if eps == 0 {
                        continue;
                    }
                    for (letters, c) in comp {
                        let mut l = letters.clone();
                        l.push((s, Letter::NON_IDENTITY[e]));
                        slot.push((l, eps * c));
                    }
                }
            }
        }
        vector = next;
    }
    let first = sites[0];
    let mut out = Vec::new();
    for (d, comp) in vector.iter().enumerate() {
        for (letters, c) in comp {
            let mut l = letters.clone();
            l.push((first, Letter::NON_IDENTITY[d]));
            out.push((PauliString::from_sites(n_sites, &l)?, *c));
        }
    }
    Ok(out)
}

fn levi_civita(a: usize, b: usize, c: usize) -> i64 {
    match (a, b, c) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// Accumulates `coefficient · nested_product(sites)` terms.
pub struct SpinExpr {
    poly: PauliPolynomial,
}

impl SpinExpr {
    pub fn new(n_sites: usize) -> Self {
        Self { poly: PauliPolynomial::new(n_sites) }
    }

    pub fn add(&mut self, coeff: &DeltaPoly, sites: &[usize]) -> Result<&mut Self, ChargeError> {
        for (p, s) in nested_product(self.poly.n_sites(), sites)? {
            self.poly.add_term(p, &coeff.scale(s))?;
        }
        Ok(self)
    }

    /// Shorthand for a monomial coefficient `c · δ^power`.
    pub fn mono(&mut self, c: i64, power: usize, sites: &[usize]) -> Result<&mut Self, ChargeError> {
        self.add(&DeltaPoly::monomial(c, power), sites)
    }

    pub fn finish(self) -> PauliPolynomial {
        self.poly
    }
}

/// Hard-coded densities of order 1 and 2 on their `2·order + 1` site window.
///
/// The order-1 δ² term couples the two outer sites, `δ² σ₁·σ₃`. This is the
/// form that commutes with the one-step unitary and whose boost yields the
/// order-2 density.
pub fn density(order: usize, branch: Branch) -> Result<PauliPolynomial, ChargeError> {
    let s = branch.sign();
    match order {
        1 => {
            let mut e = SpinExpr::new(3);
            e.mono(1, 0, &[1, 2])?.mono(1, 0, &[2, 3])?.mono(-s, 1, &[1, 2, 3])?.mono(1, 2, &[1, 3])?;
            Ok(e.finish())
        }
        2 => {
            let mut e = SpinExpr::new(5);
            e.mono(-2 * s, 1, &[3, 4])?
                .mono(-2 * s, 1, &[4, 5])?
                .mono(2 * s, 1, &[3, 5])?
                .add(&DeltaPoly::from_coeffs(vec![-1, 0, 1]), &[3, 4, 5])?
                .mono(-1, 0, &[2, 3, 4])?
                .mono(-1, 2, &[2, 3, 5])?
                .mono(-1, 2, &[1, 3, 4])?
                .mono(-1, 4, &[1, 3, 5])?
                .mono(s, 1, &[2, 3, 4, 5])?
                .mono(s, 1, &[1, 2, 3, 4])?
                .mono(s, 3, &[1, 3, 4, 5])?
                .mono(s, 3, &[1, 2, 3, 5])?
                .mono(-1, 2, &[1, 2, 3, 4, 5])?;
            Ok(e.finish())
        }
        _ => Err(ChargeError::InvalidSpec(format!("no printed density of order {order}"))),
    }
}
