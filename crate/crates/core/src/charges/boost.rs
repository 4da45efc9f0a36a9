//! Boost recursion: the density of order n+1 from the density of order n.
//!
//! Both sums of the commutator (boost generator and charge) run over all
//! integers. They are realised on a finite stretch of an open chain that is
//! long enough for every contribution landing in one target window. The
//! density is then read off as the set of strings whose rightmost
//! non-identity site is one of the last two sites of that window: every
//! translation class (shifts by two sites) has exactly one such
//! representative, which is the gauge in which no density term carries
//! identity on both of its last two sites.

use super::density::SpinExpr;
use super::poly::{DeltaPoly, PauliPolynomial};
use super::{Branch, ChargeError};
use crate::pauli::{PauliString, MAX_SITES};

/// Highest order whose boost fits into a packed 64-site segment.
pub const MAX_BOOST_ORDER: usize = 7;

/// Four-site generator block `R'` placed at positions 1..4.
fn generator_block() -> Result<Vec<(PauliString, DeltaPoly)>, ChargeError> {
    let mut e = SpinExpr::new(4);
    e.mono(1, 0, &[1, 2])?
        .mono(1, 0, &[3, 4])?
        .mono(2, 0, &[2, 3])?
        .mono(1, 2, &[2, 4])?
        .mono(1, 2, &[1, 3])?
        .mono(1, 1, &[1, 2, 3])?
        .mono(-1, 1, &[2, 3, 4])?;
    Ok(e.finish().terms().map(|(p, c)| (*p, c.clone())).collect())
}

/// One boost step for the plus branch, reading the result off the window
/// that starts at segment position `2 * anchor`.
fn boost_plus_at(
    q: &[(PauliString, DeltaPoly)],
    block: &[(PauliString, DeltaPoly)],
    order: usize,
    anchor: usize,
) -> Result<PauliPolynomial, ChargeError> {
    let n = order;
    let lo = 2 * anchor;
    let hi = lo + 2 * n + 2;
    let window: u64 = ((1u64 << (2 * n + 3)) - 1) << lo;
    let tail: u64 = (1u64 << (hi - 1)) | (1u64 << hi);
    let beyond: u64 = !((1u64 << (hi + 1)) - 1);

    let mut acc = PauliPolynomial::new(MAX_SITES);
    let k_lo = anchor - n - 1;
    let k_hi = anchor + n + 2;
    for k in k_lo..=k_hi {
        let placed: Vec<(PauliString, &DeltaPoly)> =
            q.iter().map(|(p, c)| Ok((p.embed(MAX_SITES, 2 * k)?, c))).collect::<Result<_, ChargeError>>()?;
        let q_support = placed.iter().fold(0u64, |m, (p, _)| m | p.support());
        for l in (k - 1)..=(k + n + 2) {
            let offset = 2 * l - 3;
            let weight = l as i64;
            for (r, rc) in block {
                let r = r.embed(MAX_SITES, offset)?;
                if r.support() & q_support == 0 {
                    continue;
                }
                let coeff_r = rc.scale(weight);
                for (p, c) in &placed {
                    if r.commutes_unchecked(p) {
                        continue;
                    }
                    // (i/2)[r, p] = i·r·p for anticommuting strings.
                    let prod = r.mul_unchecked(p);
                    let s = prod.support();
                    if s & tail == 0 || s & beyond != 0 {
                        continue;
                    }
                    if s & !window != 0 {
                        return Err(ChargeError::Consistency(format!(
                            "boosted term of order {} wider than its {}-site window",
                            n + 1,
                            2 * n + 3
                        )));
                    }
                    let term = prod.with_phase(prod.phase_power() + 1);
                    acc.add_term(term, &(&coeff_r * c))?;
                }
            }
        }
    }
    let mut out = PauliPolynomial::new(2 * n + 3);
    for (p, c) in acc.terms() {
        let x = (p.x_mask() >> lo) & ((1u64 << (2 * n + 3)) - 1);
        let z = (p.z_mask() >> lo) & ((1u64 << (2 * n + 3)) - 1);
        out.add_term(PauliString::from_masks(2 * n + 3, x, z, 0)?, c)?;
    }
    Ok(out)
}

/// Order-(n+1) density from the order-n density of the given branch.
///
/// The result is computed for two different window placements; a mismatch
/// means the input was not a conserved density.
pub fn boost_step(q: &PauliPolynomial, order: usize, branch: Branch) -> Result<PauliPolynomial, ChargeError> {
    if order == 0 || order > MAX_BOOST_ORDER {
        return Err(ChargeError::InvalidSpec(format!("boost order must be in 1..={MAX_BOOST_ORDER}, got {order}")));
    }
    if q.n_sites() != 2 * order + 1 {
        return Err(ChargeError::InvalidSpec(format!(
            "density of order {order} must span {} sites, got {}",
            2 * order + 1,
            q.n_sites()
        )));
    }
    let input = match branch {
        Branch::Plus => q.clone(),
        Branch::Minus => q.flip_delta(),
    };
    let terms: Vec<(PauliString, DeltaPoly)> = input.terms().map(|(p, c)| (*p, c.clone())).collect();
    let block = generator_block()?;
    let anchor = order + 4;
    let first = boost_plus_at(&terms, &block, order, anchor)?;
    let second = boost_plus_at(&terms, &block, order, anchor + 1)?;
    if first != second {
        return Err(ChargeError::Consistency(format!(
            "boost of order {order} depends on window placement; input is not conserved"
        )));
    }
    Ok(match branch {
        Branch::Plus => first,
        Branch::Minus => first.flip_delta(),
    })
}

/// Density of any order: printed forms up to order 2, boosted beyond.
pub fn generate_density(order: usize, branch: Branch) -> Result<PauliPolynomial, ChargeError> {
    if order == 0 {
        return Err(ChargeError::InvalidSpec("charge order starts at 1".into()));
    }
    let mut q = super::density::density(order.min(2), branch)?;
    for m in 2..order {
        q = boost_step(&q, m, branch)?;
    }
    Ok(q)
}
