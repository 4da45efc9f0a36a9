//! Dense R-matrix, one-step brickwork unitary and transfer matrix.
//!
//! All matrices use the chain basis in which bit `j - 1` of an index is the
//! state of site `j`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::poly::DENSE_MAX_SITES;
use super::ChargeError;

/// Largest chain for the transfer-matrix construction.
pub const TRANSFER_MAX_SITES: usize = 10;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `(1 + iλP)/(1 + iλ)` on two qubits; local index `2·bit_first + bit_second`.
pub fn rcheck_matrix(lambda: f64) -> DMatrix<Complex64> {
    let norm = ONE / (ONE + I * lambda);
    let mut m = DMatrix::<Complex64>::zeros(4, 4);
    for col in 0..4usize {
        let swapped = ((col & 1) << 1) | (col >> 1);
        m[(col, col)] += norm;
        m[(swapped, col)] += I * lambda * norm;
    }
    m
}

fn swap_bits(i: usize, a: usize, b: usize) -> usize {
    let ba = (i >> a) & 1;
    let bb = (i >> b) & 1;
    if ba == bb {
        i
    } else {
        i ^ ((1 << a) | (1 << b))
    }
}

/// `M ← Ř_{ab}(δ) · M` for 1-based sites `a`, `b`.
fn apply_rcheck_left(m: &mut DMatrix<Complex64>, a: usize, b: usize, delta: f64) {
    let norm = ONE / (ONE + I * delta);
    let dim = m.nrows();
    let orig = m.clone();
    for col in 0..dim {
        for row in 0..dim {
            let partner = swap_bits(row, a - 1, b - 1);
            m[(row, col)] = (orig[(row, col)] + I * delta * orig[(partner, col)]) * norm;
        }
    }
}

/// One evolution step: the bonds `(2j, 2j+1)` act first, then `(2j-1, 2j)`.
pub fn brickwork_unitary(n_sites: usize, delta: f64) -> Result<DMatrix<Complex64>, ChargeError> {
    if n_sites < 2 || !n_sites.is_multiple_of(2) {
        return Err(ChargeError::InvalidSpec(format!("brickwork needs an even chain, got {n_sites}")));
    }
    if n_sites > DENSE_MAX_SITES {
        return Err(ChargeError::TooLarge { n_sites, max: DENSE_MAX_SITES });
    }
    let dim = 1usize << n_sites;
    let mut m = DMatrix::<Complex64>::identity(dim, dim);
    for j in 1..=n_sites / 2 {
        let a = 2 * j;
        let b = (2 * j) % n_sites + 1;
        apply_rcheck_left(&mut m, a, b, delta);
    }
    for j in 1..=n_sites / 2 {
        apply_rcheck_left(&mut m, 2 * j - 1, 2 * j, delta);
    }
    Ok(m)
}

/// `T(λ) = tr_0(R_{0N} ⋯ R_{01})` with `R_{0j} = (P + iμ_j)/(1 + iμ_j)` and
/// staggered `μ_j = λ − (−1)^j δ/2`.
pub fn transfer_matrix(lambda: Complex64, delta: f64, n_sites: usize) -> Result<DMatrix<Complex64>, ChargeError> {
    if n_sites == 0 || n_sites > TRANSFER_MAX_SITES {
        return Err(ChargeError::TooLarge { n_sites, max: TRANSFER_MAX_SITES });
    }
    let mus: Vec<Complex64> =
        (1..=n_sites).map(|j| lambda - if j % 2 == 0 { delta / 2.0 } else { -delta / 2.0 }).collect();
    let mut norms = Vec::with_capacity(n_sites);
    for mu in &mus {
        let d = ONE + I * mu;
        if d.norm() < 1e-12 {
            return Err(ChargeError::Pole(format!("{lambda}")));
        }
        norms.push(ONE / d);
    }
    let dim = 1usize << n_sites;
    let mut t = DMatrix::<Complex64>::zeros(dim, dim);
    for col in 0..dim {
        for row in 0..dim {
            // Auxiliary 2×2 product, site 1 acting first.
            let mut acc = [[ONE, Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), ONE]];
            let mut zero = false;
            for j in 0..n_sites {
                let s_out = (row >> j) & 1;
                let s_in = (col >> j) & 1;
                let mut mj = [[Complex64::new(0.0, 0.0); 2]; 2];
                // Permutation part: aux_out = s_in, site_out = aux_in.
                mj[s_in][s_out] += norms[j];
                if s_out == s_in {
                    mj[0][0] += I * mus[j] * norms[j];
                    mj[1][1] += I * mus[j] * norms[j];
                }
                let prod = mat2_mul(&mj, &acc);
                if prod.iter().flatten().all(|v| *v == Complex64::new(0.0, 0.0)) {
                    zero = true;
                    break;
                }
                acc = prod;
            }
            if !zero {
                t[(row, col)] = acc[0][0] + acc[1][1];
            }
        }
    }
    Ok(t)
}

fn mat2_mul(a: &[[Complex64; 2]; 2], b: &[[Complex64; 2]; 2]) -> [[Complex64; 2]; 2] {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}
