//! Exact sparse linear algebra.
//!
//! Ranks, kernels and images are computed by fraction-free row reduction
//! over the Gaussian integers: every incoming row is cleared of
//! denominators, combined with existing pivot rows by cross-multiplication,
//! and divided by the integer content of its coordinates. No floating
//! tolerance is involved anywhere.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Exact, Scalar};

type GaussInt = Complex<BigInt>;

/// A sparse row: strictly increasing column indices, no stored zeros.
pub type SparseRow<T> = Vec<(usize, T)>;

/// Row-major sparse matrix with exact entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    rows: Vec<SparseRow<Exact>>,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        SparseMatrix {
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    /// Builds a matrix from rows given as column -> value maps.
    pub fn from_row_maps(ncols: usize, rows: Vec<BTreeMap<usize, Exact>>) -> Self {
        let nrows = rows.len();
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().filter(|(_, v)| !v.is_zero()).collect())
            .collect();
        SparseMatrix { nrows, ncols, rows }
    }

    pub fn from_dense(nrows: usize, ncols: usize, data: &[Exact]) -> Self {
        assert_eq!(data.len(), nrows * ncols);
        let rows = (0..nrows)
            .map(|i| {
                (0..ncols)
                    .filter(|&j| !data[i * ncols + j].is_zero())
                    .map(|j| (j, data[i * ncols + j].clone()))
                    .collect()
            })
            .collect();
        SparseMatrix { nrows, ncols, rows }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[SparseRow<Exact>] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    pub fn get(&self, i: usize, j: usize) -> Exact {
        self.rows[i]
            .binary_search_by_key(&j, |(c, _)| *c)
            .map(|k| self.rows[i][k].1.clone())
            .unwrap_or_else(|_| Exact::zero())
    }

    pub fn to_dense(&self) -> Vec<Exact> {
        let mut out = vec![Exact::zero(); self.nrows * self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                out[i * self.ncols + j] = v.clone();
            }
        }
        out
    }

    /// Matrix-vector product in either flavor.
    pub fn apply<S: Scalar>(&self, v: &[S]) -> Result<Vec<S>> {
        if v.len() != self.ncols {
            return Err(Error::dim(format!(
                "vector of length {} against {} columns",
                v.len(),
                self.ncols
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| {
                row.iter().fold(S::zero(), |acc, (j, a)| {
                    acc + S::from_exact(a) * v[*j].clone()
                })
            })
            .collect())
    }

    /// Column `j` as a dense vector.
    pub fn column(&self, j: usize) -> Vec<Exact> {
        (0..self.nrows).map(|i| self.get(i, j)).collect()
    }

    /// Sparse product `self * rhs`.
    pub fn mul(&self, rhs: &SparseMatrix) -> Result<SparseMatrix> {
        if self.ncols != rhs.nrows {
            return Err(Error::dim(format!(
                "product of {}x{} and {}x{}",
                self.nrows, self.ncols, rhs.nrows, rhs.ncols
            )));
        }
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Exact> = BTreeMap::new();
                for (k, a) in row {
                    for (j, b) in &rhs.rows[*k] {
                        let e = acc.entry(*j).or_insert_with(Exact::zero);
                        *e = e.clone() + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect();
        Ok(SparseMatrix::from_row_maps(rhs.ncols, rows))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut rows: Vec<SparseRow<Exact>> = vec![Vec::new(); self.ncols];
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row {
                rows[*j].push((i, v.clone()));
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            rows,
        }
    }

    pub fn rank(&self) -> usize {
        Echelon::from_rows(self.ncols, self.rows.iter()).rank()
    }
}

fn gauss_mul(a: &GaussInt, b: &GaussInt) -> GaussInt {
    Complex::new(
        &a.re * &b.re - &a.im * &b.im,
        &a.re * &b.im + &a.im * &b.re,
    )
}

/// Clears denominators: returns the row scaled by the lcm of all
/// denominators, as Gaussian integers.
fn to_gaussian(row: &[(usize, Exact)]) -> SparseRow<GaussInt> {
    let mut l = BigInt::one();
    for (_, v) in row {
        l = l.lcm(v.re.denom());
        l = l.lcm(v.im.denom());
    }
    let lr = BigRational::from_integer(l);
    row.iter()
        .map(|(j, v)| {
            let re = &v.re * &lr;
            let im = &v.im * &lr;
            (*j, Complex::new(re.to_integer(), im.to_integer()))
        })
        .collect()
}

/// Divides out the rational-integer content and fixes the sign so the
/// leading entry has positive real part (or positive imaginary part when
/// the real part vanishes).
fn make_primitive(row: &mut SparseRow<GaussInt>) {
    let mut g = BigInt::zero();
    for (_, v) in row.iter() {
        g = g.gcd(&v.re);
        g = g.gcd(&v.im);
        if g.is_one() {
            break;
        }
    }
    let flip = match row.first() {
        Some((_, lead)) => lead.re.is_negative() || (lead.re.is_zero() && lead.im.is_negative()),
        None => false,
    };
    if g.is_zero() {
        return;
    }
    if flip {
        g = -g;
    }
    if !g.is_one() {
        for (_, v) in row.iter_mut() {
            v.re = &v.re / &g;
            v.im = &v.im / &g;
        }
    }
}

/// `lead_p * row - lead_r * pivot`, which cancels the shared leading column.
fn cross_eliminate(row: &SparseRow<GaussInt>, pivot: &SparseRow<GaussInt>) -> SparseRow<GaussInt> {
    let p = &pivot[0].1;
    let r = &row[0].1;
    let mut out = Vec::with_capacity(row.len() + pivot.len());
    let (mut a, mut b) = (1usize, 1usize);
    while a < row.len() || b < pivot.len() {
        let ca = row.get(a).map(|e| e.0).unwrap_or(usize::MAX);
        let cb = pivot.get(b).map(|e| e.0).unwrap_or(usize::MAX);
        let (col, val) = if ca < cb {
            let v = gauss_mul(p, &row[a].1);
            a += 1;
            (ca, v)
        } else if cb < ca {
            let v = -gauss_mul(r, &pivot[b].1);
            b += 1;
            (cb, v)
        } else {
            let v = gauss_mul(p, &row[a].1) - gauss_mul(r, &pivot[b].1);
            a += 1;
            b += 1;
            (ca, v)
        };
        if !val.is_zero() {
            out.push((col, val));
        }
    }
    out
}

/// Row-echelon basis of a row space, built incrementally.
#[derive(Debug, Clone)]
pub struct Echelon {
    ncols: usize,
    pivots: BTreeMap<usize, SparseRow<GaussInt>>,
}

impl Echelon {
    pub fn new(ncols: usize) -> Self {
        Echelon {
            ncols,
            pivots: BTreeMap::new(),
        }
    }

    pub fn from_rows<'a, I>(ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = &'a SparseRow<Exact>>,
    {
        let mut e = Echelon::new(ncols);
        for row in rows {
            e.insert(row);
        }
        e
    }

    /// Reduces `row` against the current basis; returns `true` when it was
    /// independent and has been added.
    pub fn insert(&mut self, row: &[(usize, Exact)]) -> bool {
        let mut row = to_gaussian(row);
        make_primitive(&mut row);
        loop {
            let Some(lead) = row.first().map(|e| e.0) else {
                return false;
            };
            match self.pivots.get(&lead) {
                Some(pivot) => {
                    row = cross_eliminate(&row, pivot);
                    make_primitive(&mut row);
                }
                None => {
                    self.pivots.insert(lead, row);
                    return true;
                }
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Leading columns in increasing order.
    pub fn pivot_columns(&self) -> Vec<usize> {
        self.pivots.keys().copied().collect()
    }

    /// Whether `row` lies in the current row space.
    pub fn contains(&self, row: &[(usize, Exact)]) -> bool {
        let mut probe = self.clone();
        !probe.insert(row)
    }

    /// Reduced row-echelon form with unit pivots, keyed by pivot column.
    pub fn reduced(&self) -> BTreeMap<usize, BTreeMap<usize, Exact>> {
        let mut rref: BTreeMap<usize, BTreeMap<usize, Exact>> = BTreeMap::new();
        for (&lead, row) in &self.pivots {
            let lead_val = Exact::new(
                BigRational::from_integer(row[0].1.re.clone()),
                BigRational::from_integer(row[0].1.im.clone()),
            );
            let inv = Exact::one() / lead_val;
            let map = row
                .iter()
                .map(|(j, v)| {
                    let e = Exact::new(
                        BigRational::from_integer(v.re.clone()),
                        BigRational::from_integer(v.im.clone()),
                    );
                    (*j, e * inv.clone())
                })
                .collect();
            rref.insert(lead, map);
        }
        // back substitution, highest pivot first
        let leads: Vec<usize> = rref.keys().copied().collect();
        for (idx, &lead) in leads.iter().enumerate().rev() {
            let pivot_row = rref[&lead].clone();
            for &upper in &leads[..idx] {
                let row = rref.get_mut(&upper).expect("pivot row");
                let Some(factor) = row.get(&lead).cloned() else {
                    continue;
                };
                for (j, v) in &pivot_row {
                    let e = row.entry(*j).or_insert_with(Exact::zero);
                    *e = e.clone() - factor.clone() * v.clone();
                }
                row.retain(|_, v| !v.is_zero());
            }
        }
        rref
    }

    /// Exact basis of the right kernel `{v : M v = 0}` of the matrix whose
    /// rows were inserted. One vector per free column, with a `1` there.
    pub fn kernel_basis(&self) -> Vec<Vec<Exact>> {
        let rref = self.reduced();
        (0..self.ncols)
            .filter(|c| !rref.contains_key(c))
            .map(|free| {
                let mut v = vec![Exact::zero(); self.ncols];
                v[free] = Exact::one();
                for (&lead, row) in &rref {
                    if let Some(x) = row.get(&free) {
                        v[lead] = -x.clone();
                    }
                }
                v
            })
            .collect()
    }
}

/// Dense solve of `m x = b` (square, row-major) by Gaussian elimination with
/// largest-modulus pivoting.
pub fn solve_dense<S: Scalar>(n: usize, m: &[S], b: &[S]) -> Result<Vec<S>> {
    if m.len() != n * n || b.len() != n {
        return Err(Error::dim("dense solve shape"));
    }
    let mut a = m.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| {
                a[i * n + col]
                    .pivot_weight()
                    .total_cmp(&a[j * n + col].pivot_weight())
            })
            .unwrap_or(col);
        if a[piv * n + col].is_negligible() {
            return Err(Error::Singular);
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            x.swap(col, piv);
        }
        let p = a[col * n + col].clone();
        for i in col + 1..n {
            let f = a[i * n + col].checked_div(&p).ok_or(Error::Singular)?;
            if f.is_zero() {
                continue;
            }
            for k in col..n {
                let t = a[col * n + k].clone();
                a[i * n + k] = a[i * n + k].clone() - f.clone() * t;
            }
            let t = x[col].clone();
            x[i] = x[i].clone() - f * t;
        }
    }
    for col in (0..n).rev() {
        let mut acc = x[col].clone();
        for k in col + 1..n {
            acc = acc - a[col * n + k].clone() * x[k].clone();
        }
        x[col] = acc
            .checked_div(&a[col * n + col])
            .ok_or(Error::Singular)?;
    }
    Ok(x)
}

/// Exact inverse of a square row-major matrix.
pub fn invert_exact(n: usize, m: &[Exact]) -> Result<Vec<Exact>> {
    let mut inv = vec![Exact::zero(); n * n];
    for col in 0..n {
        let mut e = vec![Exact::zero(); n];
        e[col] = Exact::one();
        let x = solve_dense(n, m, &e)?;
        for (row, v) in x.into_iter().enumerate() {
            inv[row * n + col] = v;
        }
    }
    Ok(inv)
}

/// Least-squares projection of `target` onto the span of `columns`
/// (assumed linearly independent) via the normal equations
/// `(B^H B) y = B^H target`. Returns the coefficients `y`.
pub fn project_onto<S: Scalar>(columns: &[Vec<S>], target: &[S]) -> Result<Vec<S>> {
    let k = columns.len();
    if k == 0 {
        return Ok(Vec::new());
    }
    let dot = |u: &[S], v: &[S]| {
        u.iter()
            .zip(v)
            .fold(S::zero(), |acc, (a, b)| acc + a.conj() * b.clone())
    };
    let mut gram = vec![S::zero(); k * k];
    for i in 0..k {
        for j in i..k {
            let g = dot(&columns[i], &columns[j]);
            gram[j * k + i] = g.conj();
            gram[i * k + j] = g;
        }
    }
    let rhs: Vec<S> = columns.iter().map(|c| dot(c, target)).collect();
    solve_dense(k, &gram, &rhs)
}
