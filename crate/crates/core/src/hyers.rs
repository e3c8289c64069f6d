//! The Hyers limit `F = lim 2^{-mn} f1(2^m a)` and the repair procedures
//! built on it, together with a ledger that re-checks every inequality the
//! stability argument chains together.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{action_norm_constant, module_norm, Algebra, Bimodule};
use crate::cochain::{coboundary, pexider_coboundary, tuple_digits, Cochain, MultiMap};
use crate::defect::{
    cocycle_defect_spanning, d_defect, multilinear_norm, perturbation_family, LambdaSet,
    PerturbationKind, PexiderTriple, PointwiseMap, SamplingPlan, SpanningSet, Witness,
};
use crate::error::{Error, Result};
use crate::scalar::{Exact, C64};

pub const DEFAULT_M_MAX: usize = 30;
pub const DEFAULT_TOL: f64 = 1e-12;
/// Tolerance for residuals of repaired objects (cocycle, coboundary and
/// inner-derivation identities).
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;
pub const LEDGER_SAMPLES: usize = 512;
/// Relative floating slack on every `lhs <= rhs` comparison.
pub const FLOAT_SLACK: f64 = 1e-12;
/// Allowed excess over the ideal `2^{-n}` contraction between steps.
pub const DECAY_SLACK: f64 = 0.01;

const ZERO_SLICE_AUDITS: usize = 50;
const LEDGER_SALT: u64 = 0x1ed6_e7b0_u64;
const UNIQUE_SALT: u64 = 0x0a11_5eed_u64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RepairOptions {
    pub m_max: usize,
    pub tol: f64,
    pub residual_tol: f64,
    pub seed: u64,
    pub ledger_samples: usize,
    pub defect_samples: usize,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions {
            m_max: DEFAULT_M_MAX,
            tol: DEFAULT_TOL,
            residual_tol: DEFAULT_RESIDUAL_TOL,
            seed: 0,
            ledger_samples: LEDGER_SAMPLES,
            defect_samples: SamplingPlan::DEFAULT_COUNT,
        }
    }
}

impl RepairOptions {
    pub fn with_seed(seed: u64) -> Self {
        RepairOptions {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.m_max == 0 {
            return Err(Error::arg("m_max must be at least 1"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::arg("tol must be positive"));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(Error::arg("residual tolerance must be positive"));
        }
        if self.ledger_samples == 0 || self.defect_samples == 0 {
            return Err(Error::arg("sample counts must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Tol,
    MMax,
}

/// Iterates `F_m` of the Hyers sequence, stored by their basis values.
#[derive(Debug, Clone)]
pub struct HyersTrace {
    pub degree: usize,
    pub iterates: Vec<Cochain<C64>>,
    /// `deltas[m - 1] = |F_m - F_{m-1}|` in the multilinear norm.
    pub deltas: Vec<f64>,
    pub m_used: usize,
    pub stop_reason: StopReason,
}

impl HyersTrace {
    pub fn last(&self) -> &Cochain<C64> {
        self.iterates.last().expect("trace has at least one iterate")
    }

    pub fn summary(&self) -> TraceSummary {
        TraceSummary {
            degree: self.degree,
            m_used: self.m_used,
            stop_reason: self.stop_reason,
            converged: self.stop_reason == StopReason::Tol,
            deltas: self.deltas.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSummary {
    pub degree: usize,
    pub m_used: usize,
    pub stop_reason: StopReason,
    pub converged: bool,
    pub deltas: Vec<f64>,
}

fn scaled(args: &[Vec<C64>], factor: f64) -> Vec<Vec<C64>> {
    args.iter()
        .map(|a| a.iter().map(|z| z * factor).collect())
        .collect()
}

fn distance(u: &[C64], v: &[C64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
}

fn combo(u: &[C64], cu: f64, v: &[C64], cv: f64) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a * cu - b * cv).norm())
        .fold(0.0, f64::max)
}

/// Basis values of `2^{-mn} f(2^m e_{i1}, ..., 2^m e_{in})`.
pub fn hyers_iterate(alg: &Algebra, f: &PointwiseMap, m: usize) -> Result<Cochain<C64>> {
    let (n, d, dx) = (f.degree(), alg.dim(), f.dim_x());
    let up = 2f64.powi(m as i32);
    let down = 2f64.powi(-((m * n) as i32));
    let count = d.pow(n as u32);
    let mut values = Vec::with_capacity(count * dx);
    for t in 0..count {
        let args: Vec<Vec<C64>> = tuple_digits(t, n, d)
            .into_iter()
            .map(|i| alg.basis_element::<C64>(i).into_iter().map(|z| z * up).collect())
            .collect();
        let v = f.call(&args);
        if v.len() != dx {
            return Err(Error::dim(format!(
                "{} returned {} coordinates, expected {dx}",
                f.descriptor(),
                v.len()
            )));
        }
        for z in v {
            let z = z * down;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite(format!("{} at step {m}", f.descriptor())));
            }
            values.push(z);
        }
    }
    Cochain::from_values(n, d, dx, values)
}

/// Runs the Hyers sequence until successive iterates differ by less than
/// `tol` or `m_max` steps were taken.
pub fn hyers_limit(alg: &Algebra, f1: &PointwiseMap, m_max: usize, tol: f64) -> Result<HyersTrace> {
    if m_max == 0 {
        return Err(Error::arg("m_max must be at least 1"));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::arg("tol must be positive"));
    }
    if f1.degree() == 0 {
        return Err(Error::arg("the Hyers limit needs degree at least 1"));
    }
    if f1.dim_a() != alg.dim() {
        return Err(Error::dim("map arguments do not live in the algebra"));
    }
    if !f1.vanishes_on_zero_slices() {
        return Err(Error::arg(format!(
            "{} is not declared to vanish on zero slices",
            f1.descriptor()
        )));
    }
    let mut iterates = vec![hyers_iterate(alg, f1, 0)?];
    let mut deltas = Vec::new();
    let mut stop_reason = StopReason::MMax;
    for m in 1..=m_max {
        let next = hyers_iterate(alg, f1, m)?;
        let delta = multilinear_norm(&next.sub(iterates.last().unwrap())?, alg);
        iterates.push(next);
        deltas.push(delta);
        if delta < tol {
            stop_reason = StopReason::Tol;
            break;
        }
    }
    Ok(HyersTrace {
        degree: f1.degree(),
        m_used: iterates.len() - 1,
        iterates,
        deltas,
        stop_reason,
    })
}

/// One `lhs <= rhs` inequality, reported at its tightest instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRecord {
    pub id: String,
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
    pub witness: Option<usize>,
    pub evaluations: usize,
}

impl BoundRecord {
    pub fn single(id: &str, label: impl Into<String>, lhs: f64, rhs: f64, scale: f64) -> Self {
        let mut t = Tally::new(id, label);
        t.push(lhs, rhs, scale, None);
        t.finish()
    }
}

struct Tally {
    id: String,
    label: String,
    worst: Option<(f64, f64, f64, Option<usize>)>,
    holds: bool,
    count: usize,
}

impl Tally {
    fn new(id: &str, label: impl Into<String>) -> Self {
        Tally {
            id: id.into(),
            label: label.into(),
            worst: None,
            holds: true,
            count: 0,
        }
    }

    fn push(&mut self, lhs: f64, rhs: f64, scale: f64, witness: Option<usize>) {
        let slack = FLOAT_SLACK * (1.0 + scale.abs());
        self.count += 1;
        let within = lhs <= rhs + slack;
        if !within {
            self.holds = false;
        }
        let margin = lhs - rhs;
        let replace = match self.worst {
            None => true,
            Some((l, r, _, _)) => margin > l - r || margin.is_nan(),
        };
        if replace {
            self.worst = Some((lhs, rhs, slack, witness));
        }
    }

    fn finish(self) -> BoundRecord {
        let (lhs, rhs, slack, witness) = self.worst.unwrap_or((0.0, 0.0, 0.0, None));
        BoundRecord {
            id: self.id,
            label: self.label,
            lhs,
            rhs,
            slack,
            holds: self.holds,
            witness,
            evaluations: self.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct BoundLedger {
    pub alpha: f64,
    pub samples: usize,
    pub records: Vec<BoundRecord>,
}

impl BoundLedger {
    pub fn all_hold(&self) -> bool {
        self.records.iter().all(|r| r.holds)
    }

    pub fn get(&self, id: &str) -> Option<&BoundRecord> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn failures(&self) -> Vec<&BoundRecord> {
        self.records.iter().filter(|r| !r.holds).collect()
    }
}

/// The three final caps on `|f_k - F|`.
pub fn final_bounds(n: usize, alpha: f64) -> [f64; 3] {
    let p = 2f64.powi(n as i32);
    let nf = n as f64;
    [3.0 * p * alpha, 3.0 * (1.0 + 1.0 / nf) * p * alpha, 6.0 * p * alpha]
}

const IDS: [(&str, &str); 11] = [
    ("f1-f2-gap", "|f1 - f2| <= α/n"),
    ("f1-f3-gap", "|f1 - f3| <= α"),
    ("f1-doubling", "|f1(.., 2a_i, ..) - 2 f1| <= 3α"),
    ("f1-telescope", "|f1 - 2^-mn f1(2^m ·)| <= 3(1 - 2^-mn)·2^n·α"),
    ("cauchy", "|h_m1 - h_m2| <= 3(2^n - 1)/2·α·Σ_j 2^-nj"),
    ("f2-doubling", "|f2(.., 2a_i, ..) - 2 f2| <= 3(1 + 1/n)·α"),
    ("f2-slot-telescope", "|2^-m f2(.., 2^m a_i, ..) - f2| <= 3(1 - 2^-m)(1 + 1/n)·α"),
    ("f1-bound", "f1 bound 3·2^n·α"),
    ("f2-bound", "f2 bound 3(1 + 1/n)·2^n·α"),
    ("f3-bound", "f3 bound 6·2^n·α"),
    ("decay", "δ_(m+1) <= 1.01·2^-n·δ_m for m >= 2"),
];

/// Evaluates every inequality of the stability argument at the seeded
/// sample tuples (plus all basis tuples) and along the trace.
pub fn verify_intermediate_bounds(
    alg: &Algebra,
    triple: &PexiderTriple,
    trace: &HyersTrace,
    alpha: f64,
    plan: &SamplingPlan,
) -> BoundLedger {
    let n = triple.degree();
    let d = alg.dim();
    let nf = n as f64;
    let p2n = 2f64.powi(n as i32);
    let m_used = trace.m_used;
    let limit = trace.last();
    let [b1, b2, b3] = final_bounds(n, alpha);
    let basis_count = d.pow(n as u32);
    let total = plan.count + basis_count;

    type Push = (usize, f64, f64, f64);
    let per_sample: Vec<Vec<Push>> = (0..total)
        .into_par_iter()
        .map(|s| {
            let a: Vec<Vec<C64>> = if s < plan.count {
                plan.tuple(s, n, d)
            } else {
                tuple_digits(s - plan.count, n, d)
                    .into_iter()
                    .map(|i| alg.basis_element(i))
                    .collect()
            };
            let mut out: Vec<Push> = Vec::new();
            let v1 = triple.f1.call(&a);
            let v2 = triple.f2.call(&a);
            let v3 = triple.f3.call(&a);
            let vf = limit.evaluate(&a);
            let sc = [module_norm(&v1), module_norm(&v2), module_norm(&v3)]
                .into_iter()
                .fold(0.0, f64::max);

            out.push((0, distance(&v1, &v2), alpha / nf, sc));
            out.push((1, distance(&v1, &v3), alpha, sc));
            for i in 0..n {
                let mut doubled = a.clone();
                doubled[i] = a[i].iter().map(|z| z * 2.0).collect();
                let w1 = triple.f1.call(&doubled);
                out.push((2, combo(&w1, 1.0, &v1, 2.0), 3.0 * alpha, sc + module_norm(&w1)));
                let w2 = triple.f2.call(&doubled);
                out.push((
                    5,
                    combo(&w2, 1.0, &v2, 2.0),
                    3.0 * (1.0 + 1.0 / nf) * alpha,
                    sc + module_norm(&w2),
                ));
                for m in 1..=m_used {
                    let mut sl = a.clone();
                    sl[i] = a[i].iter().map(|z| z * 2f64.powi(m as i32)).collect();
                    let w = triple.f2.call(&sl);
                    let down = 2f64.powi(-(m as i32));
                    out.push((
                        6,
                        combo(&w, down, &v2, 1.0),
                        3.0 * (1.0 - down) * (1.0 + 1.0 / nf) * alpha,
                        sc + module_norm(&w) * down,
                    ));
                }
            }
            // h_m(a) = 2^{-mn} f1(2^m a)
            let hs: Vec<(Vec<C64>, f64)> = (0..=m_used)
                .map(|m| {
                    let w = triple.f1.call(&scaled(&a, 2f64.powi(m as i32)));
                    let down = 2f64.powi(-((m * n) as i32));
                    let mag = module_norm(&w) * down;
                    (w.into_iter().map(|z| z * down).collect(), mag)
                })
                .collect();
            for (m, (h, mag)) in hs.iter().enumerate().skip(1) {
                let geo = 1.0 - 2f64.powi(-((m * n) as i32));
                out.push((3, distance(&v1, h), 3.0 * geo * p2n * alpha, sc + mag));
            }
            for m1 in 0..=m_used {
                for m2 in m1 + 1..=m_used {
                    let sum: f64 = (m1..m2).map(|j| 2f64.powi(-((n * j) as i32))).sum();
                    out.push((
                        4,
                        distance(&hs[m1].0, &hs[m2].0),
                        3.0 * (p2n - 1.0) / 2.0 * alpha * sum,
                        hs[m1].1 + hs[m2].1,
                    ));
                }
            }
            let sf = sc + module_norm(&vf);
            out.push((7, distance(&v1, &vf), b1, sf));
            out.push((8, distance(&v2, &vf), b2, sf));
            out.push((9, distance(&v3, &vf), b3, sf));
            out
        })
        .collect();

    let mut tallies: Vec<Tally> = IDS.iter().map(|(id, l)| Tally::new(id, *l)).collect();
    for (s, pushes) in per_sample.into_iter().enumerate() {
        for (k, lhs, rhs, scale) in pushes {
            tallies[k].push(lhs, rhs, scale, Some(s));
        }
    }
    let scale = multilinear_norm(limit, alg);
    let ratio = 2f64.powi(-(n as i32)) * (1.0 + DECAY_SLACK);
    for m in 2..trace.deltas.len() {
        // deltas[m - 1] is |F_m - F_{m-1}|
        tallies[10].push(trace.deltas[m], trace.deltas[m - 1] * ratio, scale, Some(m + 1));
    }
    BoundLedger {
        alpha,
        samples: total,
        records: tallies.into_iter().map(Tally::finish).collect(),
    }
}

/// How a defect constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateSource {
    /// Constructive upper bound carried by the perturbation envelopes.
    AnalyticCap,
    /// Maximum over sampled inputs; a lower bound on the true supremum.
    SampledLowerBound,
}

/// A defect constant: the measured value, the analytic cap when one is
/// known, and which of the two the bound checks used.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectCertificate {
    pub measured: f64,
    pub sample_count: usize,
    pub exhaustive: bool,
    pub cap: Option<f64>,
    pub used: f64,
    pub source: CertificateSource,
    pub witness: Option<Witness>,
}

impl DefectCertificate {
    fn new(measured: f64, sample_count: usize, exhaustive: bool, cap: Option<f64>, witness: Option<Witness>) -> Self {
        let (used, source) = match cap {
            Some(c) => (c, CertificateSource::AnalyticCap),
            None => (measured, CertificateSource::SampledLowerBound),
        };
        DefectCertificate {
            measured,
            sample_count,
            exhaustive,
            cap,
            used,
            source,
            witness,
        }
    }

    fn check(&self, id: &str, label: &str) -> Option<BoundRecord> {
        self.cap
            .map(|c| BoundRecord::single(id, label, self.measured, c, c))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairResult {
    pub degree: usize,
    /// The repaired cocycle `F`.
    pub cocycle: Cochain<C64>,
    /// The repaired potential `G` with `delta G = F`, when requested.
    pub potential: Option<Cochain<C64>>,
    pub trace: TraceSummary,
    pub potential_trace: Option<TraceSummary>,
    /// Sampled `sup |f_k - F|` for k = 1, 2, 3.
    pub distances: [f64; 3],
    pub bounds: [f64; 3],
    pub alpha: DefectCertificate,
    pub beta: DefectCertificate,
    pub gamma: Option<DefectCertificate>,
    pub eta: Option<DefectCertificate>,
    pub cocycle_residual: f64,
    pub coboundary_residual: Option<f64>,
    /// `|F - core|` when the inputs were planted around a known core.
    pub planted_error: Option<f64>,
    pub potential_planted_error: Option<f64>,
    pub ledger: BoundLedger,
    pub potential_ledger: Option<BoundLedger>,
    pub checks: Vec<BoundRecord>,
}

impl RepairResult {
    pub fn holds(&self) -> bool {
        self.ledger.all_hold()
            && self.potential_ledger.as_ref().is_none_or(|l| l.all_hold())
            && self.checks.iter().all(|c| c.holds)
    }

    pub fn check(&self, id: &str) -> Option<&BoundRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    /// Every record, ledger lines first.
    pub fn records(&self) -> Vec<&BoundRecord> {
        let mut all: Vec<&BoundRecord> = self.ledger.records.iter().collect();
        if let Some(l) = &self.potential_ledger {
            all.extend(l.records.iter());
        }
        all.extend(self.checks.iter());
        all
    }
}

fn check_shape(alg: &Algebra, module: &Bimodule, triple: &PexiderTriple) -> Result<()> {
    for f in triple.maps() {
        if f.dim_a() != alg.dim() || f.dim_x() != module.dim() {
            return Err(Error::dim(format!(
                "{} maps A^{} -> C^{}, expected A^{} -> C^{}",
                f.descriptor(),
                f.dim_a(),
                f.dim_x(),
                alg.dim(),
                module.dim()
            )));
        }
        if !f.vanishes_on_zero_slices() {
            return Err(Error::arg(format!(
                "{} is not declared to vanish on zero slices",
                f.descriptor()
            )));
        }
    }
    Ok(())
}

fn audit(triple: &PexiderTriple, seed: u64) -> Result<()> {
    for f in triple.maps() {
        if !f.audit_zero_slices(ZERO_SLICE_AUDITS, seed) {
            return Err(Error::arg(format!(
                "{} claims to vanish on zero slices but does not",
                f.descriptor()
            )));
        }
    }
    Ok(())
}

/// Analytic cap on the cocycle defect over `span`, when the triple was
/// planted around a common multilinear core.
fn beta_cap(alg: &Algebra, module: &Bimodule, triple: &PexiderTriple, span: &SpanningSet) -> Result<Option<f64>> {
    let Some(core) = triple.core() else {
        return Ok(None);
    };
    let caps: Vec<f64> = triple.maps().iter().map(|f| f.envelope().unwrap().cap).collect();
    let n = triple.degree();
    let m = action_norm_constant(alg, module);
    let s = span.max_norm(alg);
    let core_defect = multilinear_norm(&coboundary(core, alg, module)?, alg);
    Ok(Some(
        m * s * (caps[0] + caps[2]) + n as f64 * caps[1] + core_defect * s.powi(n as i32 + 1),
    ))
}

/// Repairs a Pexider triple of approximate cocycle maps to the unique
/// cocycle near it.
pub fn repair_pexider_triple(
    alg: &Algebra,
    module: &Bimodule,
    triple: &PexiderTriple,
    lambdas: &LambdaSet,
    span: &SpanningSet,
    opts: &RepairOptions,
) -> Result<RepairResult> {
    opts.validate()?;
    check_shape(alg, module, triple)?;
    let n = triple.degree();
    if n == 0 {
        return Err(Error::arg("repair needs degree at least 1"));
    }
    audit(triple, opts.seed)?;

    let plan = SamplingPlan::new(opts.defect_samples, opts.seed);
    let sampled_alpha = d_defect(alg, triple, lambdas, &plan).map_err(|e| e.at("alpha"))?;
    let alpha = DefectCertificate::new(
        sampled_alpha.value,
        sampled_alpha.sample_count,
        false,
        triple.alpha_cap(lambdas.bound()),
        sampled_alpha.witness,
    );
    let sampled_beta =
        cocycle_defect_spanning(alg, module, &triple.f1, &triple.f2, &triple.f3, span)
            .map_err(|e| e.at("beta"))?;
    let beta = DefectCertificate::new(
        sampled_beta.value,
        sampled_beta.sample_count,
        true,
        beta_cap(alg, module, triple, span)?,
        sampled_beta.witness,
    );

    let trace = hyers_limit(alg, &triple.f1, opts.m_max, opts.tol).map_err(|e| e.at("hyers"))?;
    let f = trace.last().clone();
    let a = alpha.used;
    let ledger = verify_intermediate_bounds(
        alg,
        triple,
        &trace,
        a,
        &SamplingPlan::new(opts.ledger_samples, opts.seed ^ LEDGER_SALT),
    );

    let scale = multilinear_norm(&f, alg);
    let cocycle_residual = multilinear_norm(&coboundary(&f, alg, module)?, alg);
    let mut checks = vec![BoundRecord::single(
        "cocycle-residual",
        "|δF| <= residual tol",
        cocycle_residual,
        opts.residual_tol,
        0.0,
    )];

    // the f2 and f3 sequences share the limit; at step m they are within
    // alpha/(n 2^mn) and alpha/2^mn of the f1 sequence
    let m = trace.m_used;
    let kn = alg.kappa().powi(n as i32);
    let shrink = 2f64.powi(-((m * n) as i32));
    for (id, label, g, cap) in [
        ("f2-limit", "|f2 iterate - F| <= α/(n·2^mn)", &triple.f2, a / n as f64),
        ("f3-limit", "|f3 iterate - F| <= α/2^mn", &triple.f3, a),
    ] {
        let other = hyers_iterate(alg, g, m)?;
        let gap = multilinear_norm(&other.sub(&f)?, alg) * kn;
        checks.push(BoundRecord::single(id, label, gap, cap * shrink, scale * kn));
    }

    // a second start within 3·2^n·α of f1 lands on the same limit
    let [b1, _, _] = final_bounds(n, a);
    let q = perturbation_family(
        PerturbationKind::BoundedSmooth,
        b1,
        opts.seed ^ UNIQUE_SALT,
        n,
        alg,
        module.dim(),
    )?;
    let rival = hyers_iterate(alg, &triple.f1.plus(&q)?, m)?;
    let gap = multilinear_norm(&rival.sub(&f)?, alg) * kn;
    checks.push(BoundRecord::single(
        "uniqueness",
        "|F' - F| <= 3·2^n·α/2^mn",
        gap,
        b1 * shrink,
        scale * kn,
    ));
    checks.extend(alpha.check("alpha-cap", "sampled α <= analytic α"));
    checks.extend(beta.check("beta-cap", "spanning-set β <= analytic β"));

    let planted_error = match triple.core() {
        Some(core) => Some(multilinear_norm(&f.sub(core)?, alg)),
        None => None,
    };
    let distances = [
        ledger.get("f1-bound").map_or(0.0, |r| r.lhs),
        ledger.get("f2-bound").map_or(0.0, |r| r.lhs),
        ledger.get("f3-bound").map_or(0.0, |r| r.lhs),
    ];
    Ok(RepairResult {
        degree: n,
        cocycle: f,
        potential: None,
        trace: trace.summary(),
        potential_trace: None,
        distances,
        bounds: final_bounds(n, a),
        alpha,
        beta,
        gamma: None,
        eta: None,
        cocycle_residual,
        coboundary_residual: None,
        planted_error,
        potential_planted_error: None,
        ledger,
        potential_ledger: None,
        checks,
    })
}

/// `a -> ax - xa` as a 1-cochain.
pub fn inner_derivation(alg: &Algebra, module: &Bimodule, x: &[Exact]) -> Result<Cochain<Exact>> {
    let zero = Cochain::from_values(0, alg.dim(), module.dim(), x.to_vec())?;
    coboundary(&zero, alg, module)
}

/// Repairs a degree-1 triple whose first map is close to the inner
/// derivation of `x`, and confirms the limit is that inner derivation.
pub fn repair_derivation(
    alg: &Algebra,
    module: &Bimodule,
    triple: &PexiderTriple,
    x: &[Exact],
    lambdas: &LambdaSet,
    span: &SpanningSet,
    opts: &RepairOptions,
) -> Result<RepairResult> {
    if triple.degree() != 1 {
        return Err(Error::arg("derivation repair needs degree 1"));
    }
    let inner = inner_derivation(alg, module, x)?.to_float();
    let mut result = repair_pexider_triple(alg, module, triple, lambdas, span, opts)?;

    let plan = SamplingPlan::new(opts.defect_samples, opts.seed);
    let parts: Vec<(f64, usize)> = (0..plan.count)
        .into_par_iter()
        .map(|s| {
            let a = plan.tuple(s, 1, alg.dim());
            (distance(&inner.evaluate(&a), &triple.f1.call(&a)), s)
        })
        .collect();
    let (measured, at) = parts
        .into_iter()
        .fold((0.0, 0), |best, p| if p.0 > best.0 { p } else { best });
    let cap = triple
        .f1
        .envelope()
        .filter(|e| e.core == inner)
        .map(|e| e.cap);
    let witness = Witness {
        sample: at,
        points: plan
            .tuple(at, 1, alg.dim())
            .iter()
            .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        lambdas: Vec::new(),
    };
    let gamma = DefectCertificate::new(measured, plan.count, false, cap, Some(witness));
    result.checks.extend(gamma.check("gamma-cap", "sampled γ <= analytic γ"));
    let residual = multilinear_norm(&result.cocycle.sub(&inner)?, alg);
    result.checks.push(BoundRecord::single(
        "inner-residual",
        "|F - δx| <= residual tol",
        residual,
        opts.residual_tol,
        0.0,
    ));
    result.gamma = Some(gamma);
    Ok(result)
}

/// Repairs an approximate cocycle triple of degree `n >= 2` together with
/// an approximate potential triple of degree `n - 1`, producing `F` and
/// `G` with `delta^{n-1} G = F`.
pub fn repair_to_coboundary(
    alg: &Algebra,
    module: &Bimodule,
    f_triple: &PexiderTriple,
    g_triple: &PexiderTriple,
    lambdas: &LambdaSet,
    span: &SpanningSet,
    opts: &RepairOptions,
) -> Result<RepairResult> {
    let n = f_triple.degree();
    if n < 2 {
        return Err(Error::arg("coboundary repair needs degree at least 2"));
    }
    if g_triple.degree() != n - 1 {
        return Err(Error::dim("potential triple must have degree n - 1"));
    }
    check_shape(alg, module, g_triple)?;
    audit(g_triple, opts.seed)?;
    let mut result = repair_pexider_triple(alg, module, f_triple, lambdas, span, opts)?;

    let plan = SamplingPlan::new(opts.defect_samples, opts.seed);
    let sampled_gamma = d_defect(alg, g_triple, lambdas, &plan).map_err(|e| e.at("gamma"))?;
    let gamma = DefectCertificate::new(
        sampled_gamma.value,
        sampled_gamma.sample_count,
        false,
        g_triple.alpha_cap(lambdas.bound()),
        sampled_gamma.witness,
    );
    let g_trace =
        hyers_limit(alg, &g_triple.f1, opts.m_max, opts.tol).map_err(|e| e.at("hyers potential"))?;
    let g = g_trace.last().clone();
    let g_ledger = verify_intermediate_bounds(
        alg,
        g_triple,
        &g_trace,
        gamma.used,
        &SamplingPlan::new(opts.ledger_samples, opts.seed ^ LEDGER_SALT ^ 1),
    );

    // caps on |g_k - G| as stated for the potential, with the outer degree
    let printed = final_bounds(n, gamma.used);
    for (k, id) in ["f1-bound", "f2-bound", "f3-bound"].iter().enumerate() {
        let lhs = g_ledger.get(id).map_or(0.0, |r| r.lhs);
        result.checks.push(BoundRecord::single(
            &format!("g{}-bound", k + 1),
            format!("g{} bound {}·2^n·γ", k + 1, ["3", "3(1 + 1/n)", "6"][k]),
            lhs,
            printed[k],
            printed[k],
        ));
    }

    let eta = eta_certificate(alg, module, f_triple, g_triple, &plan)?;
    result.checks.push(BoundRecord::single(
        "eta-cap",
        "max over samples of η / pointwise cap <= 1",
        eta.1,
        1.0,
        0.0,
    ));
    let eta = eta.0;

    let residual = multilinear_norm(&coboundary(&g, alg, module)?.sub(&result.cocycle)?, alg);
    result.checks.push(BoundRecord::single(
        "coboundary-residual",
        "|δG - F| <= residual tol",
        residual,
        opts.residual_tol,
        0.0,
    ));
    result.potential_planted_error = match g_triple.core() {
        Some(core) => Some(multilinear_norm(&g.sub(core)?, alg)),
        None => None,
    };
    result.potential = Some(g);
    result.potential_trace = Some(g_trace.summary());
    result.potential_ledger = Some(g_ledger);
    result.coboundary_residual = Some(residual);
    result.gamma = Some(gamma);
    result.eta = Some(eta);
    Ok(result)
}

/// Sampled `sup |delta[g1, g2, g3](a) - f1(a)|`. When both triples carry
/// envelopes, each sample is compared with its own pointwise cap; the
/// second value is the largest ratio of sample to cap (zero without caps).
fn eta_certificate(
    alg: &Algebra,
    module: &Bimodule,
    f_triple: &PexiderTriple,
    g_triple: &PexiderTriple,
    plan: &SamplingPlan,
) -> Result<(DefectCertificate, f64)> {
    let n = f_triple.degree();
    let m = action_norm_constant(alg, module);
    let caps = match (f_triple.f1.envelope(), g_triple.core()) {
        (Some(fe), Some(gc)) => {
            let gcaps: Vec<f64> = g_triple.maps().iter().map(|g| g.envelope().unwrap().cap).collect();
            let mismatch = multilinear_norm(&coboundary(gc, alg, module)?.sub(&fe.core)?, alg);
            Some((fe.cap, gcaps, mismatch))
        }
        _ => None,
    };
    let parts: Vec<(f64, f64, f64, usize)> = (0..plan.count)
        .into_par_iter()
        .map(|s| {
            let a = plan.tuple(s, n, alg.dim());
            let lhs = pexider_coboundary(alg, module, &g_triple.f1, &g_triple.f2, &g_triple.f3, &a)?;
            let v = distance(&lhs, &f_triple.f1.call(&a));
            let cap = caps.as_ref().map_or(f64::INFINITY, |(fc, g, mis)| {
                let nu: Vec<f64> = a.iter().map(|x| alg.norm(x)).collect();
                m * (nu[0] * g[0] + nu[n - 1] * g[2])
                    + (n - 1) as f64 * g[1]
                    + fc
                    + mis * nu.iter().product::<f64>()
            });
            let ratio = if cap.is_finite() { v / (cap + FLOAT_SLACK * (1.0 + cap)) } else { 0.0 };
            Ok((v, cap, ratio, s))
        })
        .collect::<Result<_>>()?;
    let mut measured = (0.0, 0);
    let mut cap_max = 0.0f64;
    let mut ratio = 0.0f64;
    for (v, c, e, s) in parts {
        if v > measured.0 {
            measured = (v, s);
        }
        cap_max = cap_max.max(c);
        ratio = ratio.max(e);
    }
    let witness = Witness {
        sample: measured.1,
        points: plan
            .tuple(measured.1, n, alg.dim())
            .iter()
            .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
            .collect(),
        lambdas: Vec::new(),
    };
    let cert = DefectCertificate::new(
        measured.0,
        plan.count,
        false,
        caps.map(|_| cap_max),
        Some(witness),
    );
    Ok((cert, ratio))
}

/// Builds `f_k = core + eps_k p_k` with independent seeded perturbations.
pub fn planted_triple(
    alg: &Algebra,
    core: &Cochain<C64>,
    eps: [f64; 3],
    kind: PerturbationKind,
    seed: u64,
) -> Result<PexiderTriple> {
    let maps = (0..3)
        .map(|k| {
            let s = seed ^ (k as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let p = perturbation_family(kind, eps[k], s, core.degree(), alg, core.dim_x())?;
            PointwiseMap::planted(core, &p)
        })
        .collect::<Result<Vec<_>>>()?;
    let [f1, f2, f3]: [PointwiseMap; 3] = maps.try_into().expect("three maps");
    PexiderTriple::new(f1, f2, f3)
}

/// Wirings of a single map into a Pexider triple, one per functional
/// equation that the derivation result covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `f(ab) = a f(b) + f(a) b`, wired as `(f, f, f)`.
    Leibniz,
    /// `a f(b) = f(a) b`, wired as `(f, 0, f)`.
    Balanced,
    /// `f(ab) = a f(b)`, wired as `(f, f, 0)`.
    LeftLinear,
    /// `f(ab) = f(a) b`, wired as `(0, f, f)`.
    RightLinear,
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leibniz" => Ok(Preset::Leibniz),
            "balanced" => Ok(Preset::Balanced),
            "left-linear" => Ok(Preset::LeftLinear),
            "right-linear" => Ok(Preset::RightLinear),
            other => Err(Error::arg(format!("unknown equation preset {other:?}"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Leibniz => "leibniz",
            Preset::Balanced => "balanced",
            Preset::LeftLinear => "left-linear",
            Preset::RightLinear => "right-linear",
        })
    }
}

/// Perturbs `base` by `eps` (bounded-smooth family) and wires the result.
pub fn preset_triple(
    preset: Preset,
    base: &PointwiseMap,
    eps: f64,
    seed: u64,
    alg: &Algebra,
) -> Result<PexiderTriple> {
    if base.degree() != 1 {
        return Err(Error::arg("equation presets take a degree-1 base map"));
    }
    let p = perturbation_family(PerturbationKind::BoundedSmooth, eps, seed, 1, alg, base.dim_x())?;
    let f = base.plus(&p)?;
    let z = PointwiseMap::zero(1, base.dim_a(), base.dim_x());
    let (f1, f2, f3) = match preset {
        Preset::Leibniz => (f.clone(), f.clone(), f),
        Preset::Balanced => (f.clone(), z, f),
        Preset::LeftLinear => (f.clone(), f, z),
        Preset::RightLinear => (z, f.clone(), f),
    };
    PexiderTriple::new(f1, f2, f3)
}

/// Residual of the functional equation named by `preset` at `(a, b)`.
pub fn preset_residual(
    preset: Preset,
    alg: &Algebra,
    module: &Bimodule,
    f: &dyn MultiMap<C64>,
    a: &[C64],
    b: &[C64],
) -> Vec<C64> {
    let ab = alg.mul(a, b);
    let f_ab = || f.eval(std::slice::from_ref(&ab));
    let a_fb = || module.act_left(a, &f.eval(&[b.to_vec()]));
    let fa_b = || module.act_right(&f.eval(&[a.to_vec()]), b);
    let sub = |u: Vec<C64>, v: Vec<C64>| -> Vec<C64> { u.into_iter().zip(v).map(|(x, y)| x - y).collect() };
    match preset {
        Preset::Leibniz => sub(sub(f_ab(), a_fb()), fa_b()),
        Preset::Balanced => sub(a_fb(), fa_b()),
        Preset::LeftLinear => sub(f_ab(), a_fb()),
        Preset::RightLinear => sub(f_ab(), fa_b()),
    }
}

/// Sampled maximum of the preset's functional-equation residual.
pub fn preset_defect(
    preset: Preset,
    alg: &Algebra,
    module: &Bimodule,
    f: &dyn MultiMap<C64>,
    plan: &SamplingPlan,
) -> f64 {
    (0..plan.count)
        .into_par_iter()
        .map(|s| {
            let t = plan.tuple(s, 2, alg.dim());
            module_norm(&preset_residual(preset, alg, module, f, &t[0], &t[1]))
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{dual_numbers, matrix_algebra, regular_bimodule};
    use crate::cochain::cocycle_space;
    use crate::scalar::exact_int;

    fn m2() -> (Algebra, Bimodule) {
        let a = matrix_algebra(2).unwrap();
        let x = regular_bimodule(&a);
        (a, x)
    }

    fn quick() -> RepairOptions {
        RepairOptions {
            ledger_samples: 64,
            defect_samples: 128,
            ..RepairOptions::with_seed(3)
        }
    }

    fn some_cocycle(n: usize, a: &Algebra, x: &Bimodule) -> Cochain<C64> {
        let z = cocycle_space(n, a, x).unwrap();
        let mut c = z[0].to_float();
        for extra in &z[1..3.min(z.len())] {
            c = c.add(&extra.to_float()).unwrap();
        }
        c
    }

    #[test]
    fn multilinear_input_is_a_fixed_point() {
        let (a, x) = m2();
        let f = PointwiseMap::from_cochain(&some_cocycle(2, &a, &x));
        let t = hyers_limit(&a, &f, 30, 1e-12).unwrap();
        assert_eq!(t.stop_reason, StopReason::Tol);
        assert_eq!(t.m_used, 1);
        assert_eq!(t.deltas, vec![0.0]);
        assert_eq!(t.iterates[0], t.iterates[1]);
    }

    #[test]
    fn perturbation_decays_geometrically() {
        let (a, x) = m2();
        for n in 1..=2 {
            let core = some_cocycle(n, &a, &x);
            let p = perturbation_family(PerturbationKind::Oscillatory, 0.01, 7, n, &a, 4).unwrap();
            let f = PointwiseMap::planted(&core, &p).unwrap();
            let t = hyers_limit(&a, &f, 30, 1e-12).unwrap();
            for m in 1..t.deltas.len() {
                let bound = 3.0 * 0.01 * 2f64.powi(-((n * (m - 1)) as i32));
                assert!(t.deltas[m - 1] <= bound, "n={n} m={m}");
            }
            assert!(multilinear_norm(&t.last().sub(&core).unwrap(), &a) <= 1e-9);
        }
    }

    #[test]
    fn argument_errors() {
        let (a, _) = m2();
        let f = PointwiseMap::zero(1, 4, 4);
        assert!(hyers_limit(&a, &f, 0, 1e-12).is_err());
        assert!(hyers_limit(&a, &f, 5, 0.0).is_err());
        let g = PointwiseMap::new(1, 4, 4, "constant", false, |_| vec![C64::new(1.0, 0.0); 4]);
        assert!(hyers_limit(&a, &g, 5, 1e-12).is_err());
        let liar = PointwiseMap::new(1, 4, 4, "liar", true, |_| vec![C64::new(1.0, 0.0); 4]);
        let (alg, x) = m2();
        let r = repair_pexider_triple(
            &alg,
            &x,
            &PexiderTriple::uniform(liar),
            &LambdaSet::Singleton,
            &SpanningSet::basis(&alg),
            &quick(),
        );
        assert!(r.is_err());
    }

    #[test]
    fn overflow_is_reported() {
        let (a, _) = m2();
        let f = PointwiseMap::new(1, 4, 4, "explosive", true, |args| {
            let s: f64 = args[0].iter().map(|z| z.norm()).sum();
            vec![C64::new(s.powi(400), 0.0); 4]
        });
        assert!(matches!(hyers_limit(&a, &f, 30, 1e-12), Err(Error::NonFinite(_))));
    }

    #[test]
    fn exact_triple_repairs_to_itself() {
        let (a, x) = m2();
        let core = some_cocycle(1, &a, &x);
        let t = PexiderTriple::uniform(PointwiseMap::from_cochain(&core));
        let r = repair_pexider_triple(&a, &x, &t, &LambdaSet::OneAndI, &SpanningSet::basis(&a), &quick()).unwrap();
        assert!(r.holds(), "{:?}", r.records().iter().filter(|c| !c.holds).collect::<Vec<_>>());
        assert_eq!(r.distances, [0.0; 3]);
        assert_eq!(r.cocycle_residual, 0.0);
        assert_eq!(r.planted_error, Some(0.0));
        assert_eq!(r.alpha.used, 0.0);
    }

    #[test]
    fn planted_repair_and_ledger() {
        let (a, x) = m2();
        for n in 1..=2 {
            let core = some_cocycle(n, &a, &x);
            let t = planted_triple(&a, &core, [1e-2, 2e-2, 5e-3], PerturbationKind::BoundedSmooth, 9).unwrap();
            let r = repair_pexider_triple(
                &a,
                &x,
                &t,
                &LambdaSet::UnitCircle { count: 2 },
                &SpanningSet::basis(&a),
                &quick(),
            )
            .unwrap();
            for rec in r.records() {
                assert!(rec.holds, "n={n} {rec:?}");
            }
            assert!(r.planted_error.unwrap() <= 1e-9);
            assert_eq!(r.alpha.source, CertificateSource::AnalyticCap);
            assert!((r.alpha.used - n as f64 * 0.035).abs() < 1e-15);
            assert!(r.alpha.measured > 0.0 && r.alpha.measured <= r.alpha.used);
        }
    }

    #[test]
    fn repairing_the_repair_is_idempotent() {
        let (a, x) = m2();
        let core = some_cocycle(1, &a, &x);
        let t = planted_triple(&a, &core, [1e-3; 3], PerturbationKind::Oscillatory, 2).unwrap();
        let first = repair_pexider_triple(&a, &x, &t, &LambdaSet::Singleton, &SpanningSet::basis(&a), &quick()).unwrap();
        let again = PexiderTriple::uniform(PointwiseMap::from_cochain(&first.cocycle));
        let second = repair_pexider_triple(&a, &x, &again, &LambdaSet::Singleton, &SpanningSet::basis(&a), &quick()).unwrap();
        assert_eq!(second.cocycle, first.cocycle);
    }

    #[test]
    fn derivation_recovers_inner_derivation() {
        let (a, x) = m2();
        let v: Vec<Exact> = (0..4).map(|i| exact_int(i as i64 - 1)).collect();
        let inner = inner_derivation(&a, &x, &v).unwrap().to_float();
        let t = planted_triple(&a, &inner, [1e-3; 3], PerturbationKind::CoordinateClip, 5).unwrap();
        let r = repair_derivation(&a, &x, &t, &v, &LambdaSet::OneAndI, &SpanningSet::basis(&a), &quick()).unwrap();
        assert!(r.holds());
        assert!(r.check("inner-residual").unwrap().lhs <= 1e-9);
        assert_eq!(r.bounds, [6.0 * r.alpha.used, 12.0 * r.alpha.used, 12.0 * r.alpha.used]);
        assert_eq!(r.gamma.as_ref().unwrap().cap, Some(1e-3));
    }

    #[test]
    fn commutative_perturbation_repairs_to_zero() {
        let a = dual_numbers().unwrap();
        let x = regular_bimodule(&a);
        let zero = Cochain::<C64>::zeros(1, 2, 2);
        let t = planted_triple(&a, &zero, [1e-2; 3], PerturbationKind::BoundedSmooth, 1).unwrap();
        let any_x = vec![exact_int(3), exact_int(-2)];
        let r = repair_derivation(&a, &x, &t, &any_x, &LambdaSet::Singleton, &SpanningSet::basis(&a), &quick()).unwrap();
        assert!(r.holds());
        assert!(multilinear_norm(&r.cocycle, &a) <= 1e-9);
    }

    #[test]
    fn coboundary_repair_on_planted_pair() {
        let (a, x) = m2();
        let g_true = Cochain::<C64>::from_basis_fn(1, 4, 4, |t| {
            (0..4)
                .map(|c| C64::new(((t[0] * 3 + c) % 5) as f64 / 4.0 - 0.5, 0.0))
                .collect()
        });
        let f_true = coboundary(&g_true, &a, &x).unwrap();
        let ft = planted_triple(&a, &f_true, [1e-2; 3], PerturbationKind::BoundedSmooth, 4).unwrap();
        let gt = planted_triple(&a, &g_true, [1e-2; 3], PerturbationKind::Oscillatory, 8).unwrap();
        let r = repair_to_coboundary(&a, &x, &ft, &gt, &LambdaSet::Singleton, &SpanningSet::basis(&a), &quick()).unwrap();
        for rec in r.records() {
            assert!(rec.holds, "{rec:?}");
        }
        assert!(r.coboundary_residual.unwrap() <= 1e-9);
        assert!(r.potential_planted_error.unwrap() <= 1e-9);
        assert!(r.eta.as_ref().unwrap().measured > 0.0);
    }

    #[test]
    fn coboundary_repair_rejects_low_degree() {
        let (a, x) = m2();
        let t = PexiderTriple::uniform(PointwiseMap::zero(1, 4, 4));
        assert!(repair_to_coboundary(&a, &x, &t, &t, &LambdaSet::Singleton, &SpanningSet::basis(&a), &quick()).is_err());
    }

    #[test]
    fn presets_wire_the_triple() {
        let (a, x) = m2();
        let base = PointwiseMap::from_cochain(&some_cocycle(1, &a, &x));
        let t = preset_triple(Preset::RightLinear, &base, 0.0, 1, &a).unwrap();
        assert_eq!(t.f1.descriptor(), "zero");
        assert!("v".parse::<Preset>().is_err());
        let z = preset_triple(Preset::RightLinear, &PointwiseMap::zero(1, 4, 4), 0.0, 1, &a).unwrap();
        let plan = SamplingPlan::new(32, 1);
        assert_eq!(d_defect(&a, &z, &LambdaSet::OneAndI, &plan).unwrap().value, 0.0);
    }

    #[test]
    fn balanced_preset_on_commutative_algebra() {
        // a -> a x0 satisfies a f(b) = f(a) b when the algebra commutes
        let a = dual_numbers().unwrap();
        let x = regular_bimodule(&a);
        let x0 = vec![C64::new(0.5, -1.0), C64::new(2.0, 0.25)];
        let alg = a.clone();
        let base = PointwiseMap::new(1, 2, 2, "right multiplication", true, move |args| alg.mul(&args[0], &x0));
        let t = preset_triple(Preset::Balanced, &base, 0.0, 1, &a).unwrap();
        let r = preset_defect(Preset::Balanced, &a, &x, &t.f1, &SamplingPlan::new(200, 2));
        assert!(r <= 1e-12, "{r}");
    }
}
