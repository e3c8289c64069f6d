//! Finite-dimensional associative algebras and their bimodules.
//!
//! An algebra is given by structure constants `c[i][j][k]` with
//! `e_i e_j = sum_k c[i][j][k] e_k`. A bimodule is given by one left and one
//! right action matrix per basis element, acting on column vectors:
//! `e_i . x = L[i] x` and `x . e_i = R[i] x`.
//!
//! Norm model: the algebra carries `nu(a) = kappa * sum_i |a_i|` with
//! `kappa = max(1, max_ij ||e_i e_j||_1)`, which is submultiplicative, and
//! modules carry the max-norm over coordinates.

use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::invert_exact;
use crate::scalar::{exact_int, taxicab, Exact, Scalar, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct Algebra {
    dim: usize,
    labels: Vec<String>,
    structure: Table,
    kappa: BigRational,
    kappa_f64: f64,
    /// For each ordered basis pair `(i, j)`, the nonzero `k` of `e_i e_j`.
    products: Vec<Vec<usize>>,
}

/// Outcome of an exact axiom check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    Pass,
    Fail(Violation),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Associativity { i: usize, j: usize, l: usize },
    Bimodule { axiom: &'static str, i: usize, j: usize },
}

impl Certificate {
    pub fn passed(&self) -> bool {
        matches!(self, Certificate::Pass)
    }

    pub fn into_result(self) -> Result<()> {
        match self {
            Certificate::Pass => Ok(()),
            Certificate::Fail(Violation::Associativity { i, j, l }) => {
                Err(Error::NotAssociative(i, j, l))
            }
            Certificate::Fail(Violation::Bimodule { axiom, i, j }) => {
                Err(Error::NotBimodule { axiom, i, j })
            }
        }
    }
}

impl Algebra {
    /// Builds an algebra from a flat `d x d x d` structure tensor, checking
    /// the shape but not associativity (see [`check_associativity`]).
    pub fn from_structure(labels: Vec<String>, structure: Vec<Exact>) -> Result<Self> {
        let dim = labels.len();
        if dim == 0 {
            return Err(Error::dim("algebra dimension must be positive"));
        }
        if structure.len() != dim * dim * dim {
            return Err(Error::dim(format!(
                "structure tensor has {} entries, expected {}^3 = {}",
                structure.len(),
                dim,
                dim * dim * dim
            )));
        }
        let mut kappa = BigRational::one();
        let mut products = Vec::with_capacity(dim * dim);
        for ij in 0..dim * dim {
            let row = &structure[ij * dim..(ij + 1) * dim];
            let l1 = row.iter().fold(BigRational::zero(), |acc, c| acc + taxicab(c));
            if l1 > kappa {
                kappa = l1;
            }
            products.push((0..dim).filter(|&k| !row[k].is_zero()).collect());
        }
        let kappa_f64 = kappa.to_f64().unwrap_or(f64::INFINITY);
        Ok(Algebra {
            dim,
            labels,
            structure: Table::new(structure),
            kappa,
            kappa_f64,
            products,
        })
    }

    /// Like [`Algebra::from_structure`] but also requires associativity.
    pub fn new(labels: Vec<String>, structure: Vec<Exact>) -> Result<Self> {
        let alg = Self::from_structure(labels, structure)?;
        check_associativity(&alg).into_result()?;
        Ok(alg)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The norm scale `kappa`.
    pub fn norm_scale(&self) -> &BigRational {
        &self.kappa
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_f64
    }

    pub fn structure(&self) -> &[Exact] {
        self.structure.exact()
    }

    /// `c[i][j][k]` in the requested flavor.
    pub fn constant<S: Scalar>(&self, i: usize, j: usize, k: usize) -> &S {
        &S::pick(&self.structure)[(i * self.dim + j) * self.dim + k]
    }

    /// Indices `k` with `c[i][j][k] != 0`.
    pub fn product_support(&self, i: usize, j: usize) -> &[usize] {
        &self.products[i * self.dim + j]
    }

    pub fn basis_element<S: Scalar>(&self, i: usize) -> Vec<S> {
        let mut v = vec![S::zero(); self.dim];
        v[i] = S::one();
        v
    }

    /// `e_i e_j` as a coordinate vector.
    pub fn basis_product<S: Scalar>(&self, i: usize, j: usize) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for &k in self.product_support(i, j) {
            out[k] = self.constant::<S>(i, j, k).clone();
        }
        out
    }

    /// Product of two elements, expanded through the structure constants.
    pub fn mul<S: Scalar>(&self, a: &[S], b: &[S]) -> Vec<S> {
        debug_assert_eq!(a.len(), self.dim);
        debug_assert_eq!(b.len(), self.dim);
        let consts = S::pick(&self.structure);
        let mut out = vec![S::zero(); self.dim];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let ab = ai.clone() * bj.clone();
                for &k in &self.products[i * self.dim + j] {
                    let c = consts[(i * self.dim + j) * self.dim + k].clone();
                    out[k] = out[k].clone() + ab.clone() * c;
                }
            }
        }
        out
    }

    /// `nu(a) = kappa * sum_i |a_i|`.
    pub fn norm<S: Scalar>(&self, a: &[S]) -> f64 {
        self.kappa_f64 * a.iter().map(Scalar::modulus).sum::<f64>()
    }

    /// Rewrites the algebra in the basis `f_i = sum_j p[j][i] e_j`
    /// (columns of `p` are the new basis vectors in old coordinates).
    pub fn change_basis(&self, p: &[Exact]) -> Result<Algebra> {
        let d = self.dim;
        if p.len() != d * d {
            return Err(Error::dim("change-of-basis matrix must be d x d"));
        }
        let q = invert_exact(d, p)?;
        let mut out = vec![Exact::zero(); d * d * d];
        for i in 0..d {
            for j in 0..d {
                // (f_i f_j) in old coordinates
                let fi: Vec<Exact> = (0..d).map(|r| p[r * d + i].clone()).collect();
                let fj: Vec<Exact> = (0..d).map(|r| p[r * d + j].clone()).collect();
                let prod = self.mul(&fi, &fj);
                for r in 0..d {
                    let mut acc = Exact::zero();
                    for (m, pm) in prod.iter().enumerate() {
                        if !pm.is_zero() {
                            acc += q[r * d + m].clone() * pm.clone();
                        }
                    }
                    out[(i * d + j) * d + r] = acc;
                }
            }
        }
        let labels = (0..d).map(|i| format!("f{}", i + 1)).collect();
        Algebra::new(labels, out)
    }
}

/// Exact associativity check over all basis triples, in lexicographic order.
pub fn check_associativity(alg: &Algebra) -> Certificate {
    let d = alg.dim();
    for i in 0..d {
        for j in 0..d {
            let eij = alg.basis_product::<Exact>(i, j);
            for l in 0..d {
                let left = alg.mul(&eij, &alg.basis_element(l));
                let ejl = alg.basis_product::<Exact>(j, l);
                let right = alg.mul(&alg.basis_element(i), &ejl);
                if left != right {
                    return Certificate::Fail(Violation::Associativity { i, j, l });
                }
            }
        }
    }
    Certificate::Pass
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bimodule {
    dim: usize,
    algebra_dim: usize,
    label: String,
    left: Table,
    right: Table,
}

impl Bimodule {
    /// `left` and `right` are `d_A` row-major `d_X x d_X` matrices, stacked.
    pub fn new(
        label: impl Into<String>,
        algebra_dim: usize,
        dim: usize,
        left: Vec<Exact>,
        right: Vec<Exact>,
    ) -> Result<Self> {
        let expect = algebra_dim * dim * dim;
        if left.len() != expect || right.len() != expect {
            return Err(Error::dim(format!(
                "action matrices need {} entries ({} x {} x {}), got {} / {}",
                expect,
                algebra_dim,
                dim,
                dim,
                left.len(),
                right.len()
            )));
        }
        Ok(Bimodule {
            dim,
            algebra_dim,
            label: label.into(),
            left: Table::new(left),
            right: Table::new(right),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra_dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn left_actions(&self) -> &[Exact] {
        self.left.exact()
    }

    pub fn right_actions(&self) -> &[Exact] {
        self.right.exact()
    }

    fn matrix<'a, S: Scalar>(&self, table: &'a Table, i: usize) -> &'a [S] {
        let n = self.dim * self.dim;
        &S::pick(table)[i * n..(i + 1) * n]
    }

    pub fn left_matrix<S: Scalar>(&self, i: usize) -> &[S] {
        self.matrix(&self.left, i)
    }

    pub fn right_matrix<S: Scalar>(&self, i: usize) -> &[S] {
        self.matrix(&self.right, i)
    }

    fn mat_vec<S: Scalar>(&self, m: &[S], x: &[S]) -> Vec<S> {
        (0..self.dim)
            .map(|r| {
                m[r * self.dim..(r + 1) * self.dim]
                    .iter()
                    .zip(x)
                    .fold(S::zero(), |acc, (a, b)| {
                        if a.is_zero() {
                            acc
                        } else {
                            acc + a.clone() * b.clone()
                        }
                    })
            })
            .collect()
    }

    /// `e_i . x`
    pub fn left_basis<S: Scalar>(&self, i: usize, x: &[S]) -> Vec<S> {
        self.mat_vec(self.left_matrix(i), x)
    }

    /// `x . e_i`
    pub fn right_basis<S: Scalar>(&self, i: usize, x: &[S]) -> Vec<S> {
        self.mat_vec(self.right_matrix(i), x)
    }

    /// `a . x`
    pub fn act_left<S: Scalar>(&self, a: &[S], x: &[S]) -> Vec<S> {
        self.act(a, x, true)
    }

    /// `x . a`
    pub fn act_right<S: Scalar>(&self, x: &[S], a: &[S]) -> Vec<S> {
        self.act(a, x, false)
    }

    fn act<S: Scalar>(&self, a: &[S], x: &[S], left: bool) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            let y = if left {
                self.left_basis(i, x)
            } else {
                self.right_basis(i, x)
            };
            for (o, v) in out.iter_mut().zip(y) {
                *o = o.clone() + ai.clone() * v;
            }
        }
        out
    }
}

fn mat_mul(n: usize, a: &[Exact], b: &[Exact]) -> Vec<Exact> {
    let mut out = vec![Exact::zero(); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = &a[i * n + k];
            if aik.is_zero() {
                continue;
            }
            for j in 0..n {
                let bkj = &b[k * n + j];
                if !bkj.is_zero() {
                    out[i * n + j] = out[i * n + j].clone() + aik.clone() * bkj.clone();
                }
            }
        }
    }
    out
}

fn transpose(n: usize, a: &[Exact]) -> Vec<Exact> {
    let mut out = a.to_vec();
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].clone();
        }
    }
    out
}

/// Matrix of the action of `e_i e_j` (extended linearly) from per-basis
/// matrices.
fn linear_action(alg: &Algebra, mats: &[Exact], n: usize, i: usize, j: usize) -> Vec<Exact> {
    let mut out = vec![Exact::zero(); n * n];
    for &k in alg.product_support(i, j) {
        let c = alg.constant::<Exact>(i, j, k);
        for (o, m) in out.iter_mut().zip(&mats[k * n * n..(k + 1) * n * n]) {
            if !m.is_zero() {
                *o = o.clone() + c.clone() * m.clone();
            }
        }
    }
    out
}

/// Exact check of the three bimodule axioms on all basis pairs:
/// `L(e_i e_j) = L_i L_j`, `R(e_i e_j) = R_j R_i`, `L_i R_j = R_j L_i`.
pub fn check_bimodule(alg: &Algebra, module: &Bimodule) -> Result<Certificate> {
    if module.algebra_dim() != alg.dim() {
        return Err(Error::dim(format!(
            "module built over a {}-dimensional algebra, algebra has dimension {}",
            module.algebra_dim(),
            alg.dim()
        )));
    }
    let n = module.dim();
    let d = alg.dim();
    let left = module.left_actions();
    let right = module.right_actions();
    let block = |m: &[Exact], i: usize| m[i * n * n..(i + 1) * n * n].to_vec();
    for i in 0..d {
        for j in 0..d {
            let (li, lj) = (block(left, i), block(left, j));
            let (ri, rj) = (block(right, i), block(right, j));
            if linear_action(alg, left, n, i, j) != mat_mul(n, &li, &lj) {
                return Ok(Certificate::Fail(Violation::Bimodule {
                    axiom: "left",
                    i,
                    j,
                }));
            }
            if linear_action(alg, right, n, i, j) != mat_mul(n, &rj, &ri) {
                return Ok(Certificate::Fail(Violation::Bimodule {
                    axiom: "right",
                    i,
                    j,
                }));
            }
            if mat_mul(n, &li, &rj) != mat_mul(n, &rj, &li) {
                return Ok(Certificate::Fail(Violation::Bimodule {
                    axiom: "commuting",
                    i,
                    j,
                }));
            }
        }
    }
    Ok(Certificate::Pass)
}

/// Full matrix algebra `M_k` on matrix units `e_pq` (index `p * k + q`).
pub fn matrix_algebra(k: usize) -> Result<Algebra> {
    if k == 0 {
        return Err(Error::arg("matrix algebra size must be at least 1"));
    }
    let d = k * k;
    let mut c = vec![Exact::zero(); d * d * d];
    for p in 0..k {
        for q in 0..k {
            for s in 0..k {
                // e_pq e_qs = e_ps
                let (i, j, out) = (p * k + q, q * k + s, p * k + s);
                c[(i * d + j) * d + out] = exact_int(1);
            }
        }
    }
    let labels = (0..k)
        .flat_map(|p| (0..k).map(move |q| format!("e{}{}", p + 1, q + 1)))
        .collect();
    Algebra::new(labels, c)
}

/// `C[t]/(t^2)` on the basis `{1, t}`.
pub fn dual_numbers() -> Result<Algebra> {
    let mut c = vec![Exact::zero(); 8];
    c[0] = exact_int(1); // 1*1 = 1
    // index (i * 2 + j) * 2 + k
    c[3] = exact_int(1); // 1*t = t
    c[5] = exact_int(1); // t*1 = t
    Algebra::new(vec!["1".into(), "t".into()], c)
}

/// Upper-triangular `k x k` matrices on the units `e_pq`, `p <= q`, ordered
/// row by row.
pub fn upper_triangular(k: usize) -> Result<Algebra> {
    if k == 0 {
        return Err(Error::arg("triangular algebra size must be at least 1"));
    }
    let units: Vec<(usize, usize)> = (0..k)
        .flat_map(|p| (p..k).map(move |q| (p, q)))
        .collect();
    let d = units.len();
    let index = |p: usize, q: usize| units.iter().position(|&u| u == (p, q));
    let mut c = vec![Exact::zero(); d * d * d];
    for (i, &(p, q)) in units.iter().enumerate() {
        for (j, &(r, s)) in units.iter().enumerate() {
            if q == r {
                let out = index(p, s).expect("upper-triangular unit");
                c[(i * d + j) * d + out] = exact_int(1);
            }
        }
    }
    let labels = units
        .iter()
        .map(|(p, q)| format!("e{}{}", p + 1, q + 1))
        .collect();
    Algebra::new(labels, c)
}

/// Block-diagonal direct sum `A_1 (+) ... (+) A_r`.
pub fn direct_sum(parts: &[Algebra]) -> Result<Algebra> {
    if parts.is_empty() {
        return Err(Error::arg("direct sum of zero algebras"));
    }
    let d: usize = parts.iter().map(Algebra::dim).sum();
    let mut c = vec![Exact::zero(); d * d * d];
    let mut labels = Vec::with_capacity(d);
    let mut offset = 0;
    for (idx, part) in parts.iter().enumerate() {
        let m = part.dim();
        for i in 0..m {
            for j in 0..m {
                for &k in part.product_support(i, j) {
                    c[((offset + i) * d + offset + j) * d + offset + k] =
                        part.constant::<Exact>(i, j, k).clone();
                }
            }
        }
        labels.extend(part.labels().iter().map(|l| format!("{l}@{}", idx + 1)));
        offset += m;
    }
    Algebra::new(labels, c)
}

/// The algebra acting on itself by left and right multiplication.
pub fn regular_bimodule(alg: &Algebra) -> Bimodule {
    let d = alg.dim();
    let mut left = vec![Exact::zero(); d * d * d];
    let mut right = vec![Exact::zero(); d * d * d];
    for i in 0..d {
        for j in 0..d {
            for &k in alg.product_support(i, j) {
                let c = alg.constant::<Exact>(i, j, k).clone();
                // (L_i)_{k, j} = c_ijk and (R_j)_{k, i} = c_ijk
                left[i * d * d + k * d + j] = c.clone();
                right[j * d * d + k * d + i] = c;
            }
        }
    }
    Bimodule::new("regular", d, d, left, right).expect("shapes agree")
}

/// Module of dimension `dim` on which the algebra acts by zero on both sides.
pub fn zero_bimodule(alg: &Algebra, dim: usize) -> Bimodule {
    let n = alg.dim() * dim * dim;
    Bimodule::new("zero", alg.dim(), dim, vec![Exact::zero(); n], vec![Exact::zero(); n])
        .expect("shapes agree")
}

/// Finite-dimensional dual `X*` with `<a.phi, x> = <phi, x.a>` and
/// `<phi.a, x> = <phi, a.x>`, i.e. `L*_i = R_i^T`, `R*_i = L_i^T`.
pub fn dual_bimodule(module: &Bimodule) -> Bimodule {
    let n = module.dim();
    let d = module.algebra_dim();
    let mut left = Vec::with_capacity(d * n * n);
    let mut right = Vec::with_capacity(d * n * n);
    for i in 0..d {
        left.extend(transpose(n, module.right_matrix::<Exact>(i)));
        right.extend(transpose(n, module.left_matrix::<Exact>(i)));
    }
    let label = match module.label().strip_prefix("dual(") {
        Some(inner) => inner.strip_suffix(')').unwrap_or(inner).to_string(),
        None => format!("dual({})", module.label()),
    };
    Bimodule::new(label, d, n, left, right).expect("shapes agree")
}

/// `max_i |x_i|`
pub fn module_norm<S: Scalar>(x: &[S]) -> f64 {
    x.iter().map(Scalar::modulus).fold(0.0, f64::max)
}

/// Smallest `M` with `|a.x| <= M nu(a) |x|` and `|x.a| <= M nu(a) |x|`.
/// Under the max-norm each action matrix contributes its largest absolute
/// row sum; the supremum over the `nu`-unit ball is attained at `e_i / kappa`.
pub fn action_norm_constant(alg: &Algebra, module: &Bimodule) -> f64 {
    let n = module.dim();
    let mut best: f64 = 0.0;
    for i in 0..alg.dim() {
        for m in [module.left_matrix::<Exact>(i), module.right_matrix::<Exact>(i)] {
            for r in 0..n {
                let row: f64 = m[r * n..(r + 1) * n].iter().map(Scalar::modulus).sum();
                best = best.max(row);
            }
        }
    }
    best / alg.kappa()
}

/// Exact `l1` norm of a real rational vector; `None` if any entry is complex.
pub fn exact_l1_real(v: &[Exact]) -> Option<BigRational> {
    v.iter().try_fold(BigRational::zero(), |acc, x| {
        x.im.is_zero().then(|| acc + x.re.abs())
    })
}
