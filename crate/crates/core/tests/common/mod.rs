//! Independent reference computations shared by the integration tests.
//!
//! The oracle reads only raw structure constants and action matrices. It
//! builds each coboundary matrix straight from the alternating-sum formula
//! and ranks it with its own sparse Gaussian elimination, pivoting from the
//! last column backwards and taking the bottom-most candidate row.

#![allow(dead_code)]

use std::collections::BTreeMap;

use hochschild::algebra::{
    dual_bimodule, dual_numbers, matrix_algebra, regular_bimodule, upper_triangular, zero_bimodule,
};
use hochschild::{Algebra, Bimodule};
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Q = Complex<BigRational>;
type Row = BTreeMap<usize, Q>;

fn q(num: i64, den: i64) -> Q {
    Complex::new(BigRational::new(num.into(), den.into()), BigRational::zero())
}

fn digits(mut t: usize, len: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in (0..len).rev() {
        out[slot] = t % d;
        t /= d;
    }
    out
}

fn index(ds: &[usize], d: usize) -> usize {
    ds.iter().fold(0, |acc, &x| acc * d + x)
}

fn add_to(row: &mut Row, col: usize, v: Q) {
    if v.is_zero() {
        return;
    }
    let slot = row.entry(col).or_insert_with(Q::zero);
    *slot = slot.clone() + v;
    if slot.is_zero() {
        row.remove(&col);
    }
}

/// Rows of the matrix of `delta^n`, one per (output tuple, module coordinate).
pub fn coboundary_rows(n: usize, alg: &Algebra, module: &Bimodule) -> (Vec<Row>, usize) {
    let d = alg.dim();
    let dx = module.dim();
    let c = alg.structure();
    let left = module.left_actions();
    let right = module.right_actions();
    let out_tuples = d.pow(n as u32 + 1);
    let mut rows = Vec::with_capacity(out_tuples * dx);
    for s in 0..out_tuples {
        let s = digits(s, n + 1, d);
        for r in 0..dx {
            let mut row = Row::new();
            // e_{s0} . f(s1..sn)
            let t = index(&s[1..], d);
            for col in 0..dx {
                add_to(&mut row, t * dx + col, left[s[0] * dx * dx + r * dx + col].clone());
            }
            // sum_j (-1)^j f(.., e_{s(j-1)} e_{sj}, ..)
            for j in 1..=n {
                let sign = if j.is_multiple_of(2) { q(1, 1) } else { q(-1, 1) };
                for k in 0..d {
                    let coeff = &c[(s[j - 1] * d + s[j]) * d + k];
                    if coeff.is_zero() {
                        continue;
                    }
                    let mut merged: Vec<usize> = s[..j - 1].to_vec();
                    merged.push(k);
                    merged.extend_from_slice(&s[j + 1..]);
                    add_to(&mut row, index(&merged, d) * dx + r, sign.clone() * coeff.clone());
                }
            }
            // (-1)^{n+1} f(s0..s(n-1)) . e_{sn}
            let sign = if (n + 1).is_multiple_of(2) { q(1, 1) } else { q(-1, 1) };
            let t = index(&s[..n], d);
            for col in 0..dx {
                add_to(
                    &mut row,
                    t * dx + col,
                    sign.clone() * right[s[n] * dx * dx + r * dx + col].clone(),
                );
            }
            rows.push(row);
        }
    }
    (rows, d.pow(n as u32) * dx)
}

/// Rank by forward elimination, pivot columns visited last to first.
pub fn rank(rows: Vec<Row>, ncols: usize) -> usize {
    let mut pending: Vec<Row> = rows.into_iter().filter(|r| !r.is_empty()).collect();
    let mut rank = 0;
    for col in (0..ncols).rev() {
        let Some(p) = pending.iter().rposition(|r| r.contains_key(&col)) else {
            continue;
        };
        let pivot_row = pending.swap_remove(p);
        let inv = Q::one() / pivot_row[&col].clone();
        for row in pending.iter_mut() {
            if let Some(f) = row.get(&col).cloned() {
                let factor = f * inv.clone();
                for (k, v) in &pivot_row {
                    add_to(row, *k, -(factor.clone() * v.clone()));
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn coboundary_rank(n: usize, alg: &Algebra, module: &Bimodule) -> usize {
    let (rows, ncols) = coboundary_rows(n, alg, module);
    rank(rows, ncols)
}

/// `dim H^n` by brute-force elimination.
pub fn cohomology_dim(n: usize, alg: &Algebra, module: &Bimodule) -> usize {
    let cochains = alg.dim().pow(n as u32) * module.dim();
    let below = if n == 0 { 0 } else { coboundary_rank(n - 1, alg, module) };
    cochains - coboundary_rank(n, alg, module) - below
}

/// Whether the flat cochain `values` lies in the image of `delta^{n-1}`.
pub fn in_coboundaries(n: usize, alg: &Algebra, module: &Bimodule, values: &[Q]) -> bool {
    assert!(n >= 1);
    let (mut rows, ncols) = coboundary_rows(n - 1, alg, module);
    let base = rank(rows.clone(), ncols);
    for (row, v) in rows.iter_mut().zip(values) {
        add_to(row, ncols, v.clone());
    }
    rank(rows, ncols + 1) == base
}

/// The builtin grid used across the suites: three algebras, each with its
/// regular, dual and one-dimensional zero module.
pub fn grid() -> Vec<(&'static str, Algebra, Vec<Bimodule>)> {
    [
        ("M2", matrix_algebra(2).unwrap()),
        ("dual-numbers", dual_numbers().unwrap()),
        ("T2", upper_triangular(2).unwrap()),
    ]
    .into_iter()
    .map(|(name, a)| {
        let reg = regular_bimodule(&a);
        let modules = vec![reg.clone(), dual_bimodule(&reg), zero_bimodule(&a, 1)];
        (name, a, modules)
    })
    .collect()
}

/// Random rational `p/q` with `|p| <= 8` and `1 <= q <= 4`.
pub fn small_rational(rng: &mut impl Rng) -> Q {
    q(rng.gen_range(-8..=8), rng.gen_range(1..=4))
}

pub fn random_exact(len: usize, seed: u64) -> Vec<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| small_rational(&mut rng)).collect()
}
