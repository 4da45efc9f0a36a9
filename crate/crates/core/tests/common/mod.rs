#![allow(dead_code)]

pub mod dense;

use trotterlab::charges::{PauliPolynomial, SpinExpr};

/// `(coefficient, δ power, sites of the nested spin product)`.
pub type Entry = (i64, usize, &'static [usize]);

/// Order-3 plus density on seven sites, as published.
pub const ORDER_THREE_PLUS: &[Entry] = &[
    (-4, 0, &[6, 7]),
    (2, 0, &[5, 7]),
    (-4, 0, &[5, 6]),
    (2, 0, &[4, 6]),
    (2, 0, &[4, 5, 6, 7]),
    (2, 0, &[3, 4, 5, 6]),
    (10, 1, &[5, 6, 7]),
    (-2, 1, &[4, 6, 7]),
    (-4, 1, &[4, 5, 7]),
    (8, 1, &[4, 5, 6]),
    (-4, 1, &[3, 5, 6]),
    (-2, 1, &[3, 4, 6]),
    (-4, 1, &[3, 4, 5, 6, 7]),
    (-2, 1, &[2, 3, 4, 5, 6]),
    (2, 2, &[6, 7]),
    (-10, 2, &[5, 7]),
    (2, 2, &[5, 6]),
    (2, 2, &[4, 7]),
    (2, 2, &[4, 6]),
    (2, 2, &[3, 6]),
    (-6, 2, &[4, 5, 6, 7]),
    (6, 2, &[3, 5, 6, 7]),
    (2, 2, &[3, 4, 6, 7]),
    (6, 2, &[3, 4, 5, 7]),
    (-6, 2, &[3, 4, 5, 6]),
    (2, 2, &[2, 3, 5, 6]),
    (2, 2, &[2, 3, 4, 5, 6, 7]),
    (2, 2, &[1, 2, 3, 4, 5, 6]),
    (6, 3, &[5, 6, 7]),
    (-2, 3, &[4, 6, 7]),
    (4, 3, &[4, 5, 7]),
    (-2, 3, &[3, 6, 7]),
    (-8, 3, &[3, 5, 7]),
    (-2, 3, &[3, 4, 6]),
    (4, 3, &[3, 5, 6]),
    (-2, 3, &[3, 4, 7]),
    (4, 3, &[3, 4, 5, 6, 7]),
    (-2, 3, &[2, 3, 5, 6, 7]),
    (-2, 3, &[2, 3, 4, 5, 7]),
    (-2, 3, &[1, 3, 4, 5, 6]),
    (-2, 3, &[1, 2, 3, 5, 6]),
    (-2, 3, &[1, 2, 3, 4, 5, 6, 7]),
    (-2, 4, &[6, 7]),
    (-8, 4, &[5, 7]),
    (-2, 4, &[5, 6]),
    (2, 4, &[4, 7]),
    (2, 4, &[3, 6]),
    (2, 4, &[3, 7]),
    (-2, 4, &[3, 5, 6, 7]),
    (2, 4, &[3, 4, 6, 7]),
    (-2, 4, &[3, 4, 5, 7]),
    (2, 4, &[2, 3, 5, 7]),
    (2, 4, &[1, 3, 5, 6]),
    (2, 4, &[1, 3, 4, 5, 6, 7]),
    (2, 4, &[1, 2, 3, 5, 6, 7]),
    (2, 4, &[1, 2, 3, 4, 5, 7]),
    (4, 5, &[5, 6, 7]),
    (-2, 5, &[3, 6, 7]),
    (-2, 5, &[3, 4, 7]),
    (-2, 5, &[1, 3, 5, 6, 7]),
    (-2, 5, &[1, 3, 4, 5, 7]),
    (-2, 5, &[1, 2, 3, 5, 7]),
    (-4, 6, &[5, 7]),
    (2, 6, &[3, 7]),
    (2, 6, &[1, 3, 5, 7]),
];

/// Order-2 density (both branches via `sign`), as published.
pub fn order_two(sign: i64) -> Vec<(i64, usize, Vec<usize>)> {
    let s = sign;
    vec![
        (-2 * s, 1, vec![3, 4]),
        (-2 * s, 1, vec![4, 5]),
        (2 * s, 1, vec![3, 5]),
        (-1, 0, vec![3, 4, 5]),
        (1, 2, vec![3, 4, 5]),
        (-1, 0, vec![2, 3, 4]),
        (-1, 2, vec![2, 3, 5]),
        (-1, 2, vec![1, 3, 4]),
        (-1, 4, vec![1, 3, 5]),
        (s, 1, vec![2, 3, 4, 5]),
        (s, 1, vec![1, 2, 3, 4]),
        (s, 3, vec![1, 3, 4, 5]),
        (s, 3, vec![1, 2, 3, 5]),
        (-1, 2, vec![1, 2, 3, 4, 5]),
    ]
}

pub fn build(n_sites: usize, entries: impl IntoIterator<Item = (i64, usize, Vec<usize>)>) -> PauliPolynomial {
    let mut e = SpinExpr::new(n_sites);
    for (c, m, sites) in entries {
        e.mono(c, m, &sites).unwrap();
    }
    e.finish()
}

pub fn order_three_plus() -> PauliPolynomial {
    build(7, ORDER_THREE_PLUS.iter().map(|&(c, m, s)| (c, m, s.to_vec())))
}
