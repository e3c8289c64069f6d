//! Defect measurements for Pexider triples of pointwise maps.
//!
//! Suprema over the whole algebra are estimated by seeded sampling (a lower
//! bound); suprema over a finite spanning set are exhaustive. Perturbations
//! built here also carry an analytic pointwise cap, which is what the bound
//! checks downstream rely on.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{module_norm, Algebra, Bimodule};
use crate::cochain::{pexider_coboundary, tuple_digits, Cochain, MultiMap};
use crate::error::{Error, Result};
use crate::linalg::Echelon;
use crate::scalar::{Exact, Scalar, C64};

type Evaluator = dyn Fn(&[Vec<C64>]) -> Vec<C64> + Send + Sync;

/// Multilinear part plus a pointwise cap on the deviation from it:
/// `|f(a) - core(a)| <= cap` for every `a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub core: Cochain<C64>,
    pub cap: f64,
}

/// A black-box map `A^n -> X`, possibly nonlinear.
#[derive(Clone)]
pub struct PointwiseMap {
    degree: usize,
    dim_a: usize,
    dim_x: usize,
    eval: Arc<Evaluator>,
    vanishes_on_zero_slices: bool,
    descriptor: String,
    envelope: Option<Envelope>,
}

impl fmt::Debug for PointwiseMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PointwiseMap")
            .field("degree", &self.degree)
            .field("descriptor", &self.descriptor)
            .field("vanishes_on_zero_slices", &self.vanishes_on_zero_slices)
            .finish()
    }
}

impl PointwiseMap {
    pub fn new(
        degree: usize,
        dim_a: usize,
        dim_x: usize,
        descriptor: impl Into<String>,
        vanishes_on_zero_slices: bool,
        f: impl Fn(&[Vec<C64>]) -> Vec<C64> + Send + Sync + 'static,
    ) -> Self {
        PointwiseMap {
            degree,
            dim_a,
            dim_x,
            eval: Arc::new(f),
            vanishes_on_zero_slices,
            descriptor: descriptor.into(),
            envelope: None,
        }
    }

    pub fn from_cochain(c: &Cochain<C64>) -> Self {
        let core = c.clone();
        let inner = c.clone();
        PointwiseMap {
            degree: c.degree(),
            dim_a: c.dim_a(),
            dim_x: c.dim_x(),
            eval: Arc::new(move |args| inner.evaluate(args)),
            vanishes_on_zero_slices: c.degree() > 0,
            descriptor: "multilinear".into(),
            envelope: Some(Envelope { core, cap: 0.0 }),
        }
    }

    pub fn from_exact(c: &Cochain<Exact>) -> Self {
        Self::from_cochain(&c.to_float())
    }

    pub fn zero(degree: usize, dim_a: usize, dim_x: usize) -> Self {
        let mut z = Self::from_cochain(&Cochain::zeros(degree, dim_a, dim_x));
        z.descriptor = "zero".into();
        z
    }

    /// Pointwise sum. The envelope survives when both sides carry one.
    pub fn plus(&self, other: &PointwiseMap) -> Result<PointwiseMap> {
        if (self.degree, self.dim_a, self.dim_x) != (other.degree, other.dim_a, other.dim_x) {
            return Err(Error::dim("sum of pointwise maps with different shapes"));
        }
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let envelope = match (&self.envelope, &other.envelope) {
            (Some(a), Some(b)) => Some(Envelope {
                core: a.core.add(&b.core)?,
                cap: a.cap + b.cap,
            }),
            _ => None,
        };
        Ok(PointwiseMap {
            degree: self.degree,
            dim_a: self.dim_a,
            dim_x: self.dim_x,
            eval: Arc::new(move |args| {
                f(args).into_iter().zip(g(args)).map(|(a, b)| a + b).collect()
            }),
            vanishes_on_zero_slices: self.vanishes_on_zero_slices && other.vanishes_on_zero_slices,
            descriptor: format!("{} + {}", self.descriptor, other.descriptor),
            envelope,
        })
    }

    /// `core + p`, the usual planted approximate cocycle.
    pub fn planted(core: &Cochain<C64>, p: &PointwiseMap) -> Result<PointwiseMap> {
        Self::from_cochain(core).plus(p)
    }

    pub fn with_descriptor(mut self, d: impl Into<String>) -> Self {
        self.descriptor = d.into();
        self
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

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn vanishes_on_zero_slices(&self) -> bool {
        self.vanishes_on_zero_slices
    }

    pub fn envelope(&self) -> Option<&Envelope> {
        self.envelope.as_ref()
    }

    pub fn call(&self, args: &[Vec<C64>]) -> Vec<C64> {
        (self.eval)(args)
    }

    /// Spot-checks the zero-slice claim at `count` seeded tuples, each with
    /// one slot set to zero. Returns `true` when the claim is not made.
    pub fn audit_zero_slices(&self, count: usize, seed: u64) -> bool {
        if !self.vanishes_on_zero_slices || self.degree == 0 {
            return true;
        }
        let plan = SamplingPlan::new(count, seed);
        (0..count).all(|s| {
            let mut rng = plan.rng(s);
            let mut args = random_tuple(&mut rng, self.degree, self.dim_a);
            let slot = rng.gen_range(0..self.degree);
            args[slot] = vec![C64::new(0.0, 0.0); self.dim_a];
            self.call(&args).iter().all(|v| *v == C64::new(0.0, 0.0))
        })
    }
}

impl MultiMap<C64> for PointwiseMap {
    fn degree(&self) -> usize {
        self.degree
    }
    fn eval(&self, args: &[Vec<C64>]) -> Vec<C64> {
        self.call(args)
    }
}

/// Three maps of equal degree entering the Pexiderized equations.
#[derive(Debug, Clone)]
pub struct PexiderTriple {
    pub f1: PointwiseMap,
    pub f2: PointwiseMap,
    pub f3: PointwiseMap,
}

impl PexiderTriple {
    pub fn new(f1: PointwiseMap, f2: PointwiseMap, f3: PointwiseMap) -> Result<Self> {
        let n = f1.degree();
        if f2.degree() != n || f3.degree() != n {
            return Err(Error::dim("Pexider triple with unequal degrees"));
        }
        if f2.dim_a() != f1.dim_a() || f3.dim_a() != f1.dim_a() || f2.dim_x() != f1.dim_x() || f3.dim_x() != f1.dim_x() {
            return Err(Error::dim("Pexider triple with unequal dimensions"));
        }
        Ok(PexiderTriple { f1, f2, f3 })
    }

    pub fn uniform(f: PointwiseMap) -> Self {
        PexiderTriple {
            f1: f.clone(),
            f2: f.clone(),
            f3: f,
        }
    }

    pub fn degree(&self) -> usize {
        self.f1.degree()
    }

    pub fn maps(&self) -> [&PointwiseMap; 3] {
        [&self.f1, &self.f2, &self.f3]
    }

    /// Analytic cap on the D-defect when all three maps share one
    /// multilinear core: `n (c1 + r (c2 + c3))` for `|lambda| <= r`.
    pub fn alpha_cap(&self, lambda_bound: f64) -> Option<f64> {
        let (e1, e2, e3) = (
            self.f1.envelope()?,
            self.f2.envelope()?,
            self.f3.envelope()?,
        );
        if e1.core != e2.core || e1.core != e3.core {
            return None;
        }
        Some(self.degree() as f64 * (e1.cap + lambda_bound * (e2.cap + e3.cap)))
    }

    /// Shared multilinear core, when there is one.
    pub fn core(&self) -> Option<&Cochain<C64>> {
        let c = &self.f1.envelope()?.core;
        (self.f2.envelope()?.core == *c && self.f3.envelope()?.core == *c).then_some(c)
    }
}

/// Admissible scalars in the D-defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LambdaSet {
    /// `count` uniform draws from the unit circle per point.
    UnitCircle { count: usize },
    /// Every choice of `lambda_j` in `{1, i}`.
    OneAndI,
    /// `count` uniform draws from the closed disk of the given radius.
    ComplexBall { count: usize, radius: f64 },
    /// `lambda_j = 1`.
    Singleton,
}

impl LambdaSet {
    /// `sup |lambda|` over the set.
    pub fn bound(&self) -> f64 {
        match self {
            LambdaSet::ComplexBall { radius, .. } => *radius,
            _ => 1.0,
        }
    }

    fn vectors(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<C64>> {
        match *self {
            LambdaSet::Singleton => vec![vec![C64::new(1.0, 0.0); n]],
            LambdaSet::OneAndI => (0..1usize << n)
                .map(|mask| {
                    (0..n)
                        .map(|j| {
                            if mask >> j & 1 == 1 {
                                C64::new(0.0, 1.0)
                            } else {
                                C64::new(1.0, 0.0)
                            }
                        })
                        .collect()
                })
                .collect(),
            LambdaSet::UnitCircle { count } => (0..count)
                .map(|_| {
                    (0..n)
                        .map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
                        .collect()
                })
                .collect(),
            LambdaSet::ComplexBall { count, radius } => (0..count)
                .map(|_| {
                    (0..n)
                        .map(|_| {
                            let r = rng.gen::<f64>().sqrt();
                            let t = rng.gen_range(0.0..std::f64::consts::TAU);
                            C64::from_polar(radius * r, t)
                        })
                        .collect()
                })
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LambdaSet::UnitCircle { count } | LambdaSet::ComplexBall { count, .. } if count == 0 => {
                Err(Error::arg("lambda set needs at least one draw"))
            }
            LambdaSet::ComplexBall { radius, .. } if !(radius.is_finite() && radius >= 0.0) => {
                Err(Error::arg("ball radius must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }
}

impl FromStr for LambdaSet {
    type Err = Error;

    /// `tcircle:COUNT`, `one-i`, `ball:COUNT:RADIUS`, or `one`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.parse::<usize>()
                .map_err(|_| Error::arg(format!("bad count in lambda set {s:?}")))
        };
        let set = match parts.as_slice() {
            ["one-i"] => LambdaSet::OneAndI,
            ["one"] => LambdaSet::Singleton,
            ["tcircle", c] => LambdaSet::UnitCircle { count: num(c)? },
            ["ball", c, r] => LambdaSet::ComplexBall {
                count: num(c)?,
                radius: r
                    .parse()
                    .map_err(|_| Error::arg(format!("bad radius in lambda set {s:?}")))?,
            },
            _ => return Err(Error::arg(format!("unknown lambda set {s:?}"))),
        };
        set.validate()?;
        Ok(set)
    }
}

impl fmt::Display for LambdaSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LambdaSet::UnitCircle { count } => write!(f, "tcircle:{count}"),
            LambdaSet::OneAndI => write!(f, "one-i"),
            LambdaSet::ComplexBall { count, radius } => write!(f, "ball:{count}:{radius}"),
            LambdaSet::Singleton => write!(f, "one"),
        }
    }
}

/// Seeded sampling plan. Sample `k` draws from its own ChaCha stream, so
/// results do not depend on evaluation order or thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SamplingPlan {
    pub count: usize,
    pub seed: u64,
}

impl SamplingPlan {
    pub const DEFAULT_COUNT: usize = 2048;

    pub fn new(count: usize, seed: u64) -> Self {
        SamplingPlan { count, seed }
    }

    pub fn with_seed(seed: u64) -> Self {
        Self::new(Self::DEFAULT_COUNT, seed)
    }

    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// The `index`-th tuple of `slots` algebra elements.
    pub fn tuple(&self, index: usize, slots: usize, dim: usize) -> Vec<Vec<C64>> {
        random_tuple(&mut self.rng(index), slots, dim)
    }
}

fn random_tuple(rng: &mut ChaCha8Rng, slots: usize, dim: usize) -> Vec<Vec<C64>> {
    (0..slots).map(|_| random_element(rng, dim)).collect()
}

/// Coordinates uniform in `[-1, 1]^2`.
pub fn random_element(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub sample: usize,
    pub points: Vec<Vec<[f64; 2]>>,
    pub lambdas: Vec<[f64; 2]>,
}

fn pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

/// Maximum of a measured defect together with where it was attained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectReport {
    pub value: f64,
    pub sample_count: usize,
    pub witness: Option<Witness>,
}

impl DefectReport {
    fn reduce(mut parts: Vec<(f64, Witness)>, sample_count: usize) -> Self {
        // order-free maximum; ties go to the lowest sample index
        parts.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.sample.cmp(&b.1.sample)));
        let best = parts.into_iter().next();
        DefectReport {
            value: best.as_ref().map(|b| b.0).unwrap_or(0.0),
            sample_count,
            witness: best.map(|b| b.1),
        }
    }
}

/// `D^n_lambda[f1, f2, f3](a_1, b_1, ..., a_n, b_n)`.
pub fn d_value(
    f1: &dyn MultiMap<C64>,
    f2: &dyn MultiMap<C64>,
    f3: &dyn MultiMap<C64>,
    a: &[Vec<C64>],
    b: &[Vec<C64>],
    lambdas: &[C64],
) -> Vec<C64> {
    let n = a.len();
    let mut total: Vec<C64> = Vec::new();
    for j in 0..n {
        let lam = lambdas[j];
        let mut mixed = a.to_vec();
        mixed[j] = a[j].iter().zip(&b[j]).map(|(x, y)| lam * x + lam * y).collect();
        let mut with_b = a.to_vec();
        with_b[j] = b[j].clone();
        let t1 = f1.eval(&mixed);
        let t2 = f2.eval(a);
        let t3 = f3.eval(&with_b);
        if total.is_empty() {
            total = vec![C64::new(0.0, 0.0); t1.len()];
        }
        for (k, o) in total.iter_mut().enumerate() {
            *o += t1[k] - lam * t2[k] - lam * t3[k];
        }
    }
    total
}

/// Sampled supremum of the multilinearity defect.
pub fn d_defect(
    alg: &Algebra,
    triple: &PexiderTriple,
    lambdas: &LambdaSet,
    plan: &SamplingPlan,
) -> Result<DefectReport> {
    let n = triple.degree();
    if n == 0 {
        return Err(Error::arg("the D-defect needs degree at least 1"));
    }
    if plan.count == 0 {
        return Err(Error::arg("empty sampling plan"));
    }
    lambdas.validate()?;
    let d = alg.dim();
    let parts: Vec<(f64, Witness)> = (0..plan.count)
        .into_par_iter()
        .map(|s| {
            let mut rng = plan.rng(s);
            let a = random_tuple(&mut rng, n, d);
            let b = random_tuple(&mut rng, n, d);
            let mut best = (f64::NEG_INFINITY, Vec::new());
            for lam in lambdas.vectors(n, &mut rng) {
                let v = module_norm(&d_value(&triple.f1, &triple.f2, &triple.f3, &a, &b, &lam));
                if v > best.0 || best.1.is_empty() {
                    best = (v, lam);
                }
            }
            let mut points: Vec<Vec<[f64; 2]>> = a.iter().map(|x| pairs(x)).collect();
            points.extend(b.iter().map(|x| pairs(x)));
            (
                best.0,
                Witness {
                    sample: s,
                    points,
                    lambdas: pairs(&best.1),
                },
            )
        })
        .collect();
    let count = plan.count
        * match lambdas {
            LambdaSet::Singleton => 1,
            LambdaSet::OneAndI => 1 << n,
            LambdaSet::UnitCircle { count } | LambdaSet::ComplexBall { count, .. } => *count,
        };
    Ok(DefectReport::reduce(parts, count))
}

/// A finite subset of the algebra whose linear span is everything.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningSet {
    elements: Vec<Vec<Exact>>,
}

impl SpanningSet {
    pub fn new(alg: &Algebra, elements: Vec<Vec<Exact>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::NotSpanning {
                rank: 0,
                dim: alg.dim(),
            });
        }
        if elements.iter().any(|e| e.len() != alg.dim()) {
            return Err(Error::dim("spanning-set element of wrong length"));
        }
        let rows: Vec<Vec<(usize, Exact)>> = elements
            .iter()
            .map(|e| {
                e.iter()
                    .enumerate()
                    .filter(|(_, v)| !num_traits::Zero::is_zero(*v))
                    .map(|(i, v)| (i, v.clone()))
                    .collect()
            })
            .collect();
        let rank = Echelon::from_rows(alg.dim(), rows.iter()).rank();
        if rank < alg.dim() {
            return Err(Error::NotSpanning {
                rank,
                dim: alg.dim(),
            });
        }
        Ok(SpanningSet { elements })
    }

    pub fn basis(alg: &Algebra) -> Self {
        SpanningSet {
            elements: (0..alg.dim()).map(|i| alg.basis_element(i)).collect(),
        }
    }

    pub fn from_indices(alg: &Algebra, indices: &[usize]) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= alg.dim()) {
            return Err(Error::arg(format!("basis index {bad} out of range")));
        }
        Self::new(alg, indices.iter().map(|&i| alg.basis_element(i)).collect())
    }

    pub fn elements(&self) -> &[Vec<Exact>] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// `max nu(s)` over the set.
    pub fn max_norm(&self, alg: &Algebra) -> f64 {
        self.elements.iter().map(|e| alg.norm(e)).fold(0.0, f64::max)
    }

    pub fn as_flavor<S: Scalar>(&self) -> Vec<Vec<S>> {
        self.elements
            .iter()
            .map(|e| e.iter().map(S::from_exact).collect())
            .collect()
    }
}

/// Exhaustive maximum of `|delta^n[f1, f2, f3]|` over all `(n+1)`-tuples
/// from the spanning set. Exact inputs give an exact zero test.
pub fn cocycle_defect_spanning<S: Scalar>(
    alg: &Algebra,
    module: &Bimodule,
    f1: &dyn MultiMap<S>,
    f2: &dyn MultiMap<S>,
    f3: &dyn MultiMap<S>,
    span: &SpanningSet,
) -> Result<DefectReport> {
    let n = f1.degree();
    let elems = span.as_flavor::<S>();
    let total = elems.len().pow(n as u32 + 1);
    let parts: Vec<(f64, Witness)> = (0..total)
        .into_par_iter()
        .map(|t| {
            let digits = tuple_digits(t, n + 1, elems.len());
            let args: Vec<Vec<S>> = digits.iter().map(|&i| elems[i].clone()).collect();
            let v = pexider_coboundary(alg, module, f1, f2, f3, &args)?;
            Ok((
                module_norm(&v),
                Witness {
                    sample: t,
                    points: args
                        .iter()
                        .map(|a| a.iter().map(|z| [z.to_c64().re, z.to_c64().im]).collect())
                        .collect(),
                    lambdas: Vec::new(),
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(DefectReport::reduce(parts, total))
}

/// Sampled maximum of `|delta^n[f1, f2, f3]|` over seeded tuples.
pub fn cocycle_defect_sampled(
    alg: &Algebra,
    module: &Bimodule,
    triple: &PexiderTriple,
    plan: &SamplingPlan,
) -> Result<DefectReport> {
    if plan.count == 0 {
        return Err(Error::arg("empty sampling plan"));
    }
    let n = triple.degree();
    let parts: Vec<(f64, Witness)> = (0..plan.count)
        .into_par_iter()
        .map(|s| {
            let args = plan.tuple(s, n + 1, alg.dim());
            let v = pexider_coboundary(alg, module, &triple.f1, &triple.f2, &triple.f3, &args)?;
            Ok((
                module_norm(&v),
                Witness {
                    sample: s,
                    points: args.iter().map(|a| pairs(a)).collect(),
                    lambdas: Vec::new(),
                },
            ))
        })
        .collect::<Result<_>>()?;
    Ok(DefectReport::reduce(parts, plan.count))
}

/// Where to measure the cocycle defect.
#[derive(Debug, Clone)]
pub enum CocycleMode {
    Spanning(SpanningSet),
    Sampled(SamplingPlan),
}

pub fn cocycle_defect(
    alg: &Algebra,
    module: &Bimodule,
    triple: &PexiderTriple,
    mode: &CocycleMode,
) -> Result<DefectReport> {
    match mode {
        CocycleMode::Spanning(span) => {
            cocycle_defect_spanning(alg, module, &triple.f1, &triple.f2, &triple.f3, span)
        }
        CocycleMode::Sampled(plan) => cocycle_defect_sampled(alg, module, triple, plan),
    }
}

/// Operator norm `sup |f(a_1..a_n)|` over `nu(a_i) <= 1`; under the declared
/// norms it is attained at the vertices `e_i / kappa`.
pub fn multilinear_norm<S: Scalar>(f: &Cochain<S>, alg: &Algebra) -> f64 {
    let scale = alg.kappa().powi(f.degree() as i32);
    (0..f.tuple_count())
        .map(|t| module_norm(f.at(t)))
        .fold(0.0, f64::max)
        / scale
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    BoundedSmooth,
    Oscillatory,
    CoordinateClip,
}

impl FromStr for PerturbationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bounded-smooth" => Ok(PerturbationKind::BoundedSmooth),
            "oscillatory" => Ok(PerturbationKind::Oscillatory),
            "coordinate-clip" => Ok(PerturbationKind::CoordinateClip),
            other => Err(Error::arg(format!("unknown perturbation kind {other:?}"))),
        }
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PerturbationKind::BoundedSmooth => "bounded-smooth",
            PerturbationKind::Oscillatory => "oscillatory",
            PerturbationKind::CoordinateClip => "coordinate-clip",
        })
    }
}

struct Direction {
    weights: Vec<C64>,
    phase: Vec<f64>,
    freq: Vec<f64>,
    clip: Vec<(usize, usize, f64, f64)>,
}

/// A bounded nonlinear map `p` with `|p(a)| <= eps` everywhere and `p = 0`
/// whenever an argument is zero:
/// `p(a) = eps * prod_i min(1, nu(a_i)) * u(a_1/|a_1|, ..., a_n/|a_n|)` where
/// the direction field `u` has coordinates of modulus at most one and
/// depends only on the directions of the arguments.
pub fn perturbation_family(
    kind: PerturbationKind,
    eps: f64,
    seed: u64,
    degree: usize,
    alg: &Algebra,
    dim_x: usize,
) -> Result<PointwiseMap> {
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(Error::arg(format!("perturbation size must be finite and >= 0, got {eps}")));
    }
    if degree == 0 {
        return Err(Error::arg("perturbations need degree at least 1"));
    }
    let d = alg.dim();
    let descriptor = format!("perturbation({kind}, eps={eps:e}, seed={seed})");
    if eps == 0.0 {
        return Ok(PointwiseMap::zero(degree, d, dim_x).with_descriptor(descriptor));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_9e77);
    let dir = Direction {
        weights: (0..dim_x * degree * d)
            .map(|_| C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
            .collect(),
        phase: (0..dim_x).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect(),
        freq: (0..dim_x).map(|_| rng.gen_range(2.0..5.0)).collect(),
        clip: (0..dim_x)
            .map(|_| {
                (
                    rng.gen_range(0..degree),
                    rng.gen_range(0..d),
                    rng.gen_range(1.0..4.0),
                    rng.gen_range(-0.5..0.5),
                )
            })
            .collect(),
    };
    let kappa = alg.kappa();
    let f = move |args: &[Vec<C64>]| -> Vec<C64> {
        let mut envelope = 1.0;
        let mut unit: Vec<Vec<C64>> = Vec::with_capacity(args.len());
        for a in args {
            let l1: f64 = a.iter().map(|z| z.norm()).sum();
            if l1 == 0.0 {
                return vec![C64::new(0.0, 0.0); dim_x];
            }
            envelope *= (kappa * l1).min(1.0);
            unit.push(a.iter().map(|z| z / l1).collect());
        }
        (0..dim_x)
            .map(|k| {
                let s: f64 = unit
                    .iter()
                    .enumerate()
                    .flat_map(|(slot, u)| {
                        let w = &dir.weights[(k * degree + slot) * d..(k * degree + slot + 1) * d];
                        u.iter().zip(w).map(|(x, w)| (w * x).re)
                    })
                    .sum();
                let u = match kind {
                    PerturbationKind::BoundedSmooth => C64::from_polar(s.tanh(), dir.phase[k]),
                    PerturbationKind::Oscillatory => {
                        C64::from_polar(1.0, dir.freq[k] * s + dir.phase[k])
                    }
                    PerturbationKind::CoordinateClip => {
                        let (slot, coord, gain, bias) = dir.clip[k];
                        Complex::new((gain * unit[slot][coord].re + bias).clamp(-1.0, 1.0), 0.0)
                    }
                };
                u * (eps * envelope)
            })
            .collect()
    };
    let mut p = PointwiseMap::new(degree, d, dim_x, descriptor, true, f);
    p.envelope = Some(Envelope {
        core: Cochain::zeros(degree, d, dim_x),
        cap: eps,
    });
    Ok(p)
}
