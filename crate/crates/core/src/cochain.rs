//! Hochschild cochains and the coboundary operator.
//!
//! An `n`-cochain is stored by its values on basis tuples: a flat tensor of
//! `d_A^n * d_X` scalars, row-major over `(i_1, ..., i_n)` and then the module
//! coordinate. Every multilinear map on a finite-dimensional space is
//! bounded, so the whole tensor space is the cochain space.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::algebra::{check_bimodule, Algebra, Bimodule};
use crate::error::{Error, Result};
use crate::linalg::{Echelon, SparseMatrix};
use crate::scalar::{format_rational, Exact, Scalar, C64};

/// Anything that can be evaluated as a (not necessarily linear) map
/// `A^n -> X` at coordinate tuples.
pub trait MultiMap<S: Scalar>: Sync {
    fn degree(&self) -> usize;
    fn eval(&self, args: &[Vec<S>]) -> Vec<S>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cochain<S> {
    degree: usize,
    dim_a: usize,
    dim_x: usize,
    values: Vec<S>,
}

impl Serialize for Cochain<C64> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let values: Vec<[f64; 2]> = self.values.iter().map(|z| [z.re, z.im]).collect();
        let mut st = ser.serialize_struct("Cochain", 4)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("dim_a", &self.dim_a)?;
        st.serialize_field("dim_x", &self.dim_x)?;
        st.serialize_field("values", &values)?;
        st.end()
    }
}

impl Serialize for Cochain<Exact> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        let values: Vec<[String; 2]> = self
            .values
            .iter()
            .map(|z| [format_rational(&z.re), format_rational(&z.im)])
            .collect();
        let mut st = ser.serialize_struct("Cochain", 4)?;
        st.serialize_field("degree", &self.degree)?;
        st.serialize_field("dim_a", &self.dim_a)?;
        st.serialize_field("dim_x", &self.dim_x)?;
        st.serialize_field("values", &values)?;
        st.end()
    }
}

/// Mixed-radix digits of a flat tuple index, most significant first.
pub fn tuple_digits(mut t: usize, n: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for slot in (0..n).rev() {
        out[slot] = t % d;
        t /= d;
    }
    out
}

pub fn tuple_index(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

impl<S: Scalar> Cochain<S> {
    pub fn zeros(degree: usize, dim_a: usize, dim_x: usize) -> Self {
        Cochain {
            degree,
            dim_a,
            dim_x,
            values: vec![S::zero(); dim_a.pow(degree as u32) * dim_x],
        }
    }

    pub fn from_values(degree: usize, dim_a: usize, dim_x: usize, values: Vec<S>) -> Result<Self> {
        let expect = dim_a.pow(degree as u32) * dim_x;
        if values.len() != expect {
            return Err(Error::dim(format!(
                "{degree}-cochain over dims ({dim_a}, {dim_x}) needs {expect} values, got {}",
                values.len()
            )));
        }
        Ok(Cochain {
            degree,
            dim_a,
            dim_x,
            values,
        })
    }

    /// The cochain whose only nonzero coordinate is flat index `idx`.
    pub fn unit(degree: usize, dim_a: usize, dim_x: usize, idx: usize) -> Self {
        let mut c = Self::zeros(degree, dim_a, dim_x);
        c.values[idx] = S::one();
        c
    }

    /// Builds a cochain from its values on basis tuples.
    pub fn from_basis_fn(
        degree: usize,
        dim_a: usize,
        dim_x: usize,
        mut f: impl FnMut(&[usize]) -> Vec<S>,
    ) -> Self {
        let count = dim_a.pow(degree as u32);
        let mut values = Vec::with_capacity(count * dim_x);
        for t in 0..count {
            let v = f(&tuple_digits(t, degree, dim_a));
            debug_assert_eq!(v.len(), dim_x);
            values.extend(v);
        }
        Cochain {
            degree,
            dim_a,
            dim_x,
            values,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn into_values(self) -> Vec<S> {
        self.values
    }

    pub fn tuple_count(&self) -> usize {
        self.dim_a.pow(self.degree as u32)
    }

    /// Value at a basis tuple given by its flat index.
    pub fn at(&self, t: usize) -> &[S] {
        &self.values[t * self.dim_x..(t + 1) * self.dim_x]
    }

    pub fn at_tuple(&self, digits: &[usize]) -> &[S] {
        self.at(tuple_index(digits, self.dim_a))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Zero::is_zero)
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.degree != other.degree || self.dim_a != other.dim_a || self.dim_x != other.dim_x {
            return Err(Error::dim("cochains of different shapes"));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(S, S) -> S) -> Self {
        Cochain {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a.clone(), b.clone()))
                .collect(),
            ..self.clone_shape()
        }
    }

    fn clone_shape(&self) -> Self {
        Cochain {
            degree: self.degree,
            dim_a: self.dim_a,
            dim_x: self.dim_x,
            values: Vec::new(),
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        Cochain {
            values: self.values.iter().map(|v| c.clone() * v.clone()).collect(),
            ..self.clone_shape()
        }
    }

    pub fn to_float(&self) -> Cochain<C64> {
        Cochain {
            degree: self.degree,
            dim_a: self.dim_a,
            dim_x: self.dim_x,
            values: self.values.iter().map(Scalar::to_c64).collect(),
        }
    }

    /// Evaluates the multilinear extension at arbitrary coordinates.
    pub fn evaluate(&self, args: &[Vec<S>]) -> Vec<S> {
        assert_eq!(args.len(), self.degree, "cochain arity");
        let mut out = vec![S::zero(); self.dim_x];
        self.expand(args, 0, 0, S::one(), &mut out);
        out
    }

    fn expand(&self, args: &[Vec<S>], slot: usize, prefix: usize, coef: S, out: &mut [S]) {
        if slot == args.len() {
            for (o, v) in out.iter_mut().zip(self.at(prefix)) {
                if !v.is_zero() {
                    *o = o.clone() + coef.clone() * v.clone();
                }
            }
            return;
        }
        for (i, a) in args[slot].iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            self.expand(
                args,
                slot + 1,
                prefix * self.dim_a + i,
                coef.clone() * a.clone(),
                out,
            );
        }
    }
}

impl<S: Scalar> MultiMap<S> for Cochain<S> {
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval(&self, args: &[Vec<S>]) -> Vec<S> {
        self.evaluate(args)
    }
}

fn check_pair(alg: &Algebra, module: &Bimodule) -> Result<()> {
    if module.algebra_dim() != alg.dim() {
        return Err(Error::dim(format!(
            "module over a {}-dimensional algebra paired with dimension {}",
            module.algebra_dim(),
            alg.dim()
        )));
    }
    Ok(())
}

fn sign<S: Scalar>(odd: bool, v: S) -> S {
    if odd {
        -v
    } else {
        v
    }
}

/// `delta^n f` on basis tuples:
/// `a_1 f(a_2..) + sum_j (-1)^j f(.., a_j a_{j+1}, ..) + (-1)^{n+1} f(a_1..a_n) a_{n+1}`.
pub fn coboundary<S: Scalar>(f: &Cochain<S>, alg: &Algebra, module: &Bimodule) -> Result<Cochain<S>> {
    check_pair(alg, module)?;
    if f.dim_a() != alg.dim() || f.dim_x() != module.dim() {
        return Err(Error::dim("cochain does not match algebra/module dimensions"));
    }
    let n = f.degree();
    let d = alg.dim();
    let dx = module.dim();
    Ok(Cochain::from_basis_fn(n + 1, d, dx, |t| {
        let mut out = module.left_basis(t[0], f.at_tuple(&t[1..]));
        let mut merged = vec![0usize; n];
        for j in 1..=n {
            let (i, l) = (t[j - 1], t[j]);
            merged[..j - 1].copy_from_slice(&t[..j - 1]);
            merged[j..].copy_from_slice(&t[j + 1..]);
            for &k in alg.product_support(i, l) {
                merged[j - 1] = k;
                let c = sign(j % 2 == 1, alg.constant::<S>(i, l, k).clone());
                for (o, v) in out.iter_mut().zip(f.at_tuple(&merged)) {
                    if !v.is_zero() {
                        *o = o.clone() + c.clone() * v.clone();
                    }
                }
            }
        }
        let last = module.right_basis(t[n], f.at_tuple(&t[..n]));
        let odd = (n + 1) % 2 == 1;
        for (o, v) in out.iter_mut().zip(last) {
            *o = o.clone() + sign(odd, v);
        }
        out
    }))
}

/// The Pexider coboundary `delta^n[f1, f2, f3]` at one point
/// `(a_1, ..., a_{n+1})`; for `f1 = f2 = f3` it is `delta^n f`.
pub fn pexider_coboundary<S: Scalar>(
    alg: &Algebra,
    module: &Bimodule,
    f1: &dyn MultiMap<S>,
    f2: &dyn MultiMap<S>,
    f3: &dyn MultiMap<S>,
    args: &[Vec<S>],
) -> Result<Vec<S>> {
    check_pair(alg, module)?;
    let n = f1.degree();
    if f2.degree() != n || f3.degree() != n {
        return Err(Error::dim("Pexider triple with unequal degrees"));
    }
    if args.len() != n + 1 {
        return Err(Error::dim(format!(
            "delta^{n} takes {} arguments, got {}",
            n + 1,
            args.len()
        )));
    }
    if args.iter().any(|a| a.len() != alg.dim()) {
        return Err(Error::dim("argument length differs from algebra dimension"));
    }
    let mut out = module.act_left(&args[0], &f1.eval(&args[1..]));
    for j in 1..=n {
        let mut merged: Vec<Vec<S>> = Vec::with_capacity(n);
        merged.extend_from_slice(&args[..j - 1]);
        merged.push(alg.mul(&args[j - 1], &args[j]));
        merged.extend_from_slice(&args[j + 1..]);
        let v = f2.eval(&merged);
        let odd = j % 2 == 1;
        for (o, x) in out.iter_mut().zip(v) {
            *o = o.clone() + sign(odd, x);
        }
    }
    let last = module.act_right(&f3.eval(&args[..n]), &args[n]);
    let odd = (n + 1) % 2 == 1;
    for (o, x) in out.iter_mut().zip(last) {
        *o = o.clone() + sign(odd, x);
    }
    Ok(out)
}

/// Matrix of `delta^n : C^n -> C^{n+1}` in flattened cochain coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    pub degree: usize,
    pub matrix: SparseMatrix,
}

impl LinearizedOperator {
    pub fn apply<S: Scalar>(&self, f: &Cochain<S>) -> Result<Cochain<S>> {
        let v = self.matrix.apply(f.values())?;
        Cochain::from_values(f.degree() + 1, f.dim_a(), f.dim_x(), v)
    }
}

pub fn linearize_coboundary(n: usize, alg: &Algebra, module: &Bimodule) -> Result<LinearizedOperator> {
    check_pair(alg, module)?;
    let d = alg.dim();
    let dx = module.dim();
    let in_tuples = d.pow(n as u32);
    let out_tuples = d * in_tuples;
    let mut rows = Vec::with_capacity(out_tuples * dx);
    let odd_last = (n + 1) % 2 == 1;
    for t in 0..out_tuples {
        let digits = tuple_digits(t, n + 1, d);
        let tail = tuple_index(&digits[1..], d);
        let head = tuple_index(&digits[..n], d);
        let l = module.left_matrix::<Exact>(digits[0]);
        let r = module.right_matrix::<Exact>(digits[n]);
        for c in 0..dx {
            let mut row: BTreeMap<usize, Exact> = BTreeMap::new();
            let mut add = |col: usize, v: Exact| {
                let e = row.entry(col).or_insert_with(Exact::zero);
                *e = e.clone() + v;
            };
            for y in 0..dx {
                let v = &l[c * dx + y];
                if !v.is_zero() {
                    add(tail * dx + y, v.clone());
                }
            }
            let mut merged = vec![0usize; n];
            for j in 1..=n {
                let (i, ll) = (digits[j - 1], digits[j]);
                merged[..j - 1].copy_from_slice(&digits[..j - 1]);
                merged[j..].copy_from_slice(&digits[j + 1..]);
                for &k in alg.product_support(i, ll) {
                    merged[j - 1] = k;
                    let v = sign(j % 2 == 1, alg.constant::<Exact>(i, ll, k).clone());
                    add(tuple_index(&merged, d) * dx + c, v);
                }
            }
            for y in 0..dx {
                let v = &r[c * dx + y];
                if !v.is_zero() {
                    add(head * dx + y, sign(odd_last, v.clone()));
                }
            }
            rows.push(row);
        }
    }
    Ok(LinearizedOperator {
        degree: n,
        matrix: SparseMatrix::from_row_maps(in_tuples * dx, rows),
    })
}

/// Dimensions of the degree-`n` cochain, cocycle, coboundary and cohomology
/// spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct CohomologyDims {
    pub degree: usize,
    pub cochains: usize,
    pub cocycles: usize,
    pub coboundaries: usize,
    pub cohomology: usize,
}

fn rank_of(n: usize, alg: &Algebra, module: &Bimodule) -> Result<usize> {
    Ok(linearize_coboundary(n, alg, module)?.matrix.rank())
}

pub fn cohomology_dims(n: usize, alg: &Algebra, module: &Bimodule) -> Result<CohomologyDims> {
    check_pair(alg, module)?;
    let cochains = alg.dim().pow(n as u32) * module.dim();
    let cocycles = cochains - rank_of(n, alg, module)?;
    let coboundaries = if n == 0 { 0 } else { rank_of(n - 1, alg, module)? };
    if coboundaries > cocycles {
        return Err(Error::Inconsistent(format!(
            "dim B^{n} = {coboundaries} exceeds dim Z^{n} = {cocycles}"
        )));
    }
    Ok(CohomologyDims {
        degree: n,
        cochains,
        cocycles,
        coboundaries,
        cohomology: cocycles - coboundaries,
    })
}

pub fn cohomology_dim(n: usize, alg: &Algebra, module: &Bimodule) -> Result<usize> {
    Ok(cohomology_dims(n, alg, module)?.cohomology)
}

/// Exact basis of `Z^n = ker delta^n`.
pub fn cocycle_space(n: usize, alg: &Algebra, module: &Bimodule) -> Result<Vec<Cochain<Exact>>> {
    let op = linearize_coboundary(n, alg, module)?;
    let ech = Echelon::from_rows(op.matrix.ncols(), op.matrix.rows());
    ech.kernel_basis()
        .into_iter()
        .map(|v| Cochain::from_values(n, alg.dim(), module.dim(), v))
        .collect()
}

/// Exact basis of `B^n = im delta^{n-1}` (empty for `n = 0`): the images of
/// the unit cochains at the pivot columns of `delta^{n-1}`.
pub fn coboundary_space(n: usize, alg: &Algebra, module: &Bimodule) -> Result<Vec<Cochain<Exact>>> {
    Ok(coboundary_space_with_preimages(n, alg, module)?
        .into_iter()
        .map(|(_, b)| b)
        .collect())
}

/// Like [`coboundary_space`], also returning for each basis vector the
/// unit `(n-1)`-cochain it is the coboundary of.
pub fn coboundary_space_with_preimages(
    n: usize,
    alg: &Algebra,
    module: &Bimodule,
) -> Result<Vec<(Cochain<Exact>, Cochain<Exact>)>> {
    check_pair(alg, module)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let op = linearize_coboundary(n - 1, alg, module)?;
    let ech = Echelon::from_rows(op.matrix.ncols(), op.matrix.rows());
    let (d, dx) = (alg.dim(), module.dim());
    ech.pivot_columns()
        .into_iter()
        .map(|j| {
            let pre = Cochain::unit(n - 1, d, dx, j);
            let img = Cochain::from_values(n, d, dx, op.matrix.column(j))?;
            Ok((pre, img))
        })
        .collect()
}

/// Checks exactly that every coboundary basis vector is a cocycle.
pub fn verify_coboundaries_are_cocycles(n: usize, alg: &Algebra, module: &Bimodule) -> Result<bool> {
    let op = linearize_coboundary(n, alg, module)?;
    for b in coboundary_space(n, alg, module)? {
        if !op.apply(&b)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exact check that `delta^{n+1} delta^n = 0` as a matrix identity.
pub fn complex_property_holds(n: usize, alg: &Algebra, module: &Bimodule) -> Result<bool> {
    let a = linearize_coboundary(n, alg, module)?;
    let b = linearize_coboundary(n + 1, alg, module)?;
    Ok(b.matrix.mul(&a.matrix)?.is_zero())
}

/// Validates the algebra/module pair, as every complex computation assumes.
pub fn validate_pair(alg: &Algebra, module: &Bimodule) -> Result<()> {
    check_pair(alg, module)?;
    check_bimodule(alg, module)?.into_result()
}
