//! Exact vanishing of `H^n` against its approximate counterpart: repaired
//! approximate cocycles should sit near coboundaries exactly when every
//! cocycle is a coboundary.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{dual_bimodule, module_norm, Algebra, Bimodule};
use crate::cochain::{
    coboundary, coboundary_space_with_preimages, cocycle_space, cohomology_dims, tuple_digits,
    Cochain, CohomologyDims,
};
use crate::defect::{
    multilinear_norm, perturbation_family, PerturbationKind, PexiderTriple, PointwiseMap,
    SamplingPlan, SpanningSet,
};
use crate::error::{Error, Result};
use crate::hyers::{final_bounds, repair_pexider_triple, RepairOptions};
use crate::linalg::project_onto;
use crate::scalar::{Exact, Scalar, C64};
use crate::LambdaSet;

/// Closest coboundary to a cochain in the Euclidean coordinate norm,
/// re-measured in the multilinear norm.
#[derive(Debug, Clone, Serialize)]
#[serde(bound(serialize = "Cochain<S>: Serialize"))]
pub struct Nearest<S> {
    /// Minimum-norm `G` with `delta G` the projection of the target.
    pub potential: Cochain<S>,
    pub coboundary: Cochain<S>,
    /// `|delta G - F|` in the multilinear norm.
    pub distance: f64,
    /// `|delta G - F|` in the Euclidean coordinate norm that was minimized.
    pub surrogate: f64,
}

impl<S: Scalar> Nearest<S> {
    /// Difference between the two measurements of the same residual.
    pub fn norm_gap(&self) -> f64 {
        (self.distance - self.surrogate).abs()
    }
}

fn euclid<S: Scalar>(v: &[S]) -> f64 {
    v.iter().map(|z| z.modulus().powi(2)).sum::<f64>().sqrt()
}

fn combine<S: Scalar>(basis: &[Cochain<S>], coeffs: &[S], template: &Cochain<S>) -> Result<Cochain<S>> {
    let mut acc = Cochain::zeros(template.degree(), template.dim_a(), template.dim_x());
    for (b, c) in basis.iter().zip(coeffs) {
        acc = acc.add(&b.scale(c))?;
    }
    Ok(acc)
}

/// Projects `f` onto `B^n` and returns the minimum-norm potential.
pub fn nearest_coboundary<S: Scalar>(
    alg: &Algebra,
    module: &Bimodule,
    f: &Cochain<S>,
) -> Result<Nearest<S>>
where
    Cochain<S>: Clone,
{
    let n = f.degree();
    if n == 0 {
        return Err(Error::arg("nearest coboundary needs degree at least 1"));
    }
    if f.dim_a() != alg.dim() || f.dim_x() != module.dim() {
        return Err(Error::dim("cochain does not match the algebra/module pair"));
    }
    let pairs = coboundary_space_with_preimages(n, alg, module)?;
    let (d, dx) = (alg.dim(), module.dim());
    let cast = |c: &Cochain<Exact>| -> Result<Cochain<S>> {
        Cochain::from_values(c.degree(), d, dx, c.values().iter().map(S::from_exact).collect())
    };
    let images: Vec<Vec<S>> = pairs
        .iter()
        .map(|(_, b)| b.values().iter().map(S::from_exact).collect())
        .collect();
    let pre: Vec<Cochain<S>> = pairs.iter().map(|(p, _)| cast(p)).collect::<Result<_>>()?;
    let coeffs = project_onto(&images, f.values())?;
    let mut g = combine(&pre, &coeffs, &Cochain::zeros(n - 1, d, dx))?;

    // drop the part of G that delta ignores
    let kernel: Vec<Cochain<S>> = cocycle_space(n - 1, alg, module)?
        .iter()
        .map(cast)
        .collect::<Result<_>>()?;
    if !kernel.is_empty() {
        let cols: Vec<Vec<S>> = kernel.iter().map(|k| k.values().to_vec()).collect();
        let k = project_onto(&cols, g.values())?;
        g = g.sub(&combine(&kernel, &k, &g)?)?;
    }
    let image = coboundary(&g, alg, module)?;
    let residual = image.sub(f)?;
    Ok(Nearest {
        distance: multilinear_norm(&residual, alg),
        surrogate: euclid(residual.values()),
        potential: g,
        coboundary: image,
    })
}

/// Seeds and perturbation sizes for the forward trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialPlan {
    pub seeds: Vec<u64>,
    pub eps: Vec<f64>,
    pub kind: PerturbationKind,
    pub options: RepairOptions,
}

impl TrialPlan {
    pub fn new(trials: usize, seed: u64, eps: Vec<f64>) -> Self {
        TrialPlan {
            seeds: (0..trials as u64).map(|k| seed.wrapping_add(k)).collect(),
            eps,
            kind: PerturbationKind::BoundedSmooth,
            options: RepairOptions::with_seed(seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trial {
    pub seed: u64,
    pub eps: f64,
    pub alpha_cap: f64,
    /// Sampled `sup |delta G - f|` over the ledger tuples.
    pub repair_distance: f64,
    pub bound: f64,
    /// Distance from the repaired cocycle to the coboundary space.
    pub cocycle_gap: f64,
    pub planted_error: f64,
    pub repair_holds: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Obstruction {
    pub witness: Cochain<Exact>,
    pub distance: f64,
    pub witness_norm: f64,
    pub floor: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VanishingVerdict {
    pub degree: usize,
    pub module: String,
    pub cohomology: CohomologyDims,
    pub exact_dim: usize,
    pub approx_vanishes: bool,
    pub trials: Vec<Trial>,
    pub obstruction: Option<Obstruction>,
    /// `approx_vanishes == (exact_dim == 0)`.
    pub consistent: bool,
}

impl VanishingVerdict {
    pub fn holds(&self) -> bool {
        self.consistent && self.trials.iter().all(|t| t.holds || self.exact_dim > 0)
    }
}

/// A seeded random combination of a cocycle basis, scaled to unit largest
/// entry.
pub fn seeded_cocycle(basis: &[Cochain<Exact>], n: usize, d: usize, dx: usize, seed: u64) -> Result<Cochain<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = Cochain::<C64>::zeros(n, d, dx);
    for b in basis {
        let c = C64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        acc = acc.add(&b.to_float().scale(&c))?;
    }
    let top = acc.values().iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(if top > 0.0 {
        acc.scale(&C64::new(1.0 / top, 0.0))
    } else {
        acc
    })
}

fn forward_trial(
    alg: &Algebra,
    module: &Bimodule,
    n: usize,
    basis: &[Cochain<Exact>],
    seed: u64,
    eps: f64,
    plan: &TrialPlan,
) -> Result<Trial> {
    let (d, dx) = (alg.dim(), module.dim());
    let truth = seeded_cocycle(basis, n, d, dx, seed)?;
    let p = perturbation_family(plan.kind, eps, seed ^ 0x7a1, n, alg, dx)?;
    let f = PointwiseMap::planted(&truth, &p)?;
    let triple = PexiderTriple::uniform(f.clone());
    let opts = RepairOptions {
        seed,
        ..plan.options
    };
    let repaired = repair_pexider_triple(
        alg,
        module,
        &triple,
        &LambdaSet::UnitCircle { count: 2 },
        &SpanningSet::basis(alg),
        &opts,
    )
    .map_err(|e| e.at("repair"))?;
    let near = nearest_coboundary(alg, module, &repaired.cocycle)?;
    if near.distance > opts.residual_tol {
        return Err(Error::Inconsistent(format!(
            "H^{n} vanishes but the repaired cocycle is {:e} from B^{n}",
            near.distance
        )));
    }
    let alpha = repaired.alpha.used;
    let bound = final_bounds(n, alpha)[0];
    let samples = SamplingPlan::new(opts.ledger_samples, seed ^ 0xd15);
    let basis_count = d.pow(n as u32);
    let repair_distance = (0..samples.count + basis_count)
        .map(|s| {
            let a: Vec<Vec<C64>> = if s < samples.count {
                samples.tuple(s, n, d)
            } else {
                tuple_digits(s - samples.count, n, d)
                    .into_iter()
                    .map(|i| alg.basis_element(i))
                    .collect()
            };
            let diff: Vec<C64> = near
                .coboundary
                .evaluate(&a)
                .into_iter()
                .zip(f.call(&a))
                .map(|(x, y)| x - y)
                .collect();
            module_norm(&diff)
        })
        .fold(0.0, f64::max);
    let scale = multilinear_norm(&truth, alg);
    let holds = repaired.holds() && repair_distance <= bound + 1e-12 * (1.0 + scale);
    Ok(Trial {
        seed,
        eps,
        alpha_cap: alpha,
        repair_distance,
        bound,
        cocycle_gap: near.distance,
        planted_error: repaired.planted_error.unwrap_or(0.0),
        repair_holds: repaired.holds(),
        holds,
    })
}

/// Decides `H^n = 0` exactly and tests the approximate counterpart: forward
/// trials when it vanishes, an obstruction witness when it does not.
pub fn verify_vanishing_equivalence(
    alg: &Algebra,
    module: &Bimodule,
    n: usize,
    plan: &TrialPlan,
) -> Result<VanishingVerdict> {
    if n == 0 {
        return Err(Error::arg("vanishing needs degree at least 1"));
    }
    let dims = cohomology_dims(n, alg, module)?;
    let exact_dim = dims.cohomology;
    let basis = cocycle_space(n, alg, module)?;
    let floor = plan.options.residual_tol;

    let mut trials = Vec::new();
    let mut obstruction = None;
    let approx_vanishes = if exact_dim == 0 {
        let grid: Vec<(u64, f64)> = plan
            .seeds
            .iter()
            .flat_map(|&s| plan.eps.iter().map(move |&e| (s, e)))
            .collect();
        trials = grid
            .par_iter()
            .map(|&(s, e)| forward_trial(alg, module, n, &basis, s, e, plan))
            .collect::<Result<Vec<_>>>()?;
        trials.iter().all(|t| t.holds)
    } else {
        let mut best: Option<(f64, Cochain<Exact>)> = None;
        for z in &basis {
            let near = nearest_coboundary(alg, module, z)?;
            if best.as_ref().is_none_or(|b| near.distance > b.0) {
                best = Some((near.distance, z.clone()));
            }
        }
        let (distance, witness) = best.expect("nonzero cohomology has cocycles");
        let witness_norm = multilinear_norm(&witness, alg);
        let vanishes = distance <= floor;
        obstruction = Some(Obstruction {
            witness,
            distance,
            witness_norm,
            floor,
        });
        vanishes
    };
    Ok(VanishingVerdict {
        degree: n,
        module: module.label().to_string(),
        consistent: approx_vanishes == (exact_dim == 0),
        cohomology: dims,
        exact_dim,
        approx_vanishes,
        trials,
        obstruction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    pub module: String,
    pub h1: usize,
    pub approx_vanishes: bool,
    pub consistent: bool,
    pub verdict: VanishingVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeTable {
    pub property: String,
    pub rows: Vec<ProbeRow>,
    /// Every module in the family has vanishing first cohomology.
    pub passes: bool,
    pub note: String,
}

impl ProbeTable {
    pub fn holds(&self) -> bool {
        self.rows.iter().all(|r| r.verdict.holds())
    }

    /// First module where first cohomology survives.
    pub fn witness(&self) -> Option<&ProbeRow> {
        self.rows.iter().find(|r| r.h1 > 0)
    }
}

fn probe(property: &str, alg: &Algebra, modules: &[Bimodule], plan: &TrialPlan) -> Result<ProbeTable> {
    let rows = modules
        .iter()
        .map(|m| {
            let verdict = verify_vanishing_equivalence(alg, m, 1, plan)
                .map_err(|e| e.at("probe"))?;
            Ok(ProbeRow {
                module: m.label().to_string(),
                h1: verdict.exact_dim,
                approx_vanishes: verdict.approx_vanishes,
                consistent: verdict.consistent,
                verdict,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProbeTable {
        property: property.into(),
        passes: rows.iter().all(|r| r.h1 == 0 && r.approx_vanishes),
        rows,
        note: "a finite module family can refute the property but only witnesses it".into(),
    })
}

/// First cohomology over each module of the family.
pub fn contractibility_probe(alg: &Algebra, modules: &[Bimodule], plan: &TrialPlan) -> Result<ProbeTable> {
    probe("approximately contractible", alg, modules, plan)
}

/// First cohomology over the dual of each module of the family.
pub fn amenability_probe(alg: &Algebra, modules: &[Bimodule], plan: &TrialPlan) -> Result<ProbeTable> {
    let duals: Vec<Bimodule> = modules.iter().map(dual_bimodule).collect();
    probe("approximately amenable", alg, &duals, plan)
}

/// `true` when `f` lies in `B^n` exactly.
pub fn is_coboundary(alg: &Algebra, module: &Bimodule, f: &Cochain<Exact>) -> Result<bool> {
    let near = nearest_coboundary(alg, module, f)?;
    Ok(near.coboundary.sub(f)?.values().iter().all(Zero::is_zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{dual_numbers, matrix_algebra, regular_bimodule, zero_bimodule};
    use crate::cochain::coboundary_space;
    use crate::scalar::exact_int;

    fn small_plan(trials: usize) -> TrialPlan {
        let mut p = TrialPlan::new(trials, 11, vec![1e-2]);
        p.options.ledger_samples = 32;
        p.options.defect_samples = 64;
        p
    }

    #[test]
    fn coboundaries_are_at_distance_zero() {
        let a = matrix_algebra(2).unwrap();
        let x = regular_bimodule(&a);
        for b in coboundary_space(1, &a, &x).unwrap() {
            let near = nearest_coboundary(&a, &x, &b).unwrap();
            assert_eq!(near.distance, 0.0);
            assert!(is_coboundary(&a, &x, &b).unwrap());
        }
        for z in cocycle_space(1, &a, &x).unwrap() {
            assert_eq!(nearest_coboundary(&a, &x, &z).unwrap().distance, 0.0);
        }
    }

    #[test]
    fn dual_numbers_witness_is_its_own_distance() {
        let a = dual_numbers().unwrap();
        let x = regular_bimodule(&a);
        // F(1) = 0, F(t) = t
        let f = Cochain::from_values(
            1,
            2,
            2,
            vec![Exact::zero(), Exact::zero(), Exact::zero(), exact_int(1)],
        )
        .unwrap();
        let near = nearest_coboundary(&a, &x, &f).unwrap();
        assert_eq!(near.distance, multilinear_norm(&f, &a));
        assert!(near.distance > 0.0);
        assert!(!is_coboundary(&a, &x, &f).unwrap());
    }

    #[test]
    fn minimum_norm_potential_avoids_the_center() {
        let a = matrix_algebra(2).unwrap();
        let x = regular_bimodule(&a);
        let b = &coboundary_space(1, &a, &x).unwrap()[0];
        let near = nearest_coboundary(&a, &x, b).unwrap();
        // the identity is central, so the potential is orthogonal to it
        let v = near.potential.values();
        assert!((v[0].clone() + v[3].clone()).is_zero());
    }

    #[test]
    fn matrix_algebra_vanishes_approximately() {
        let a = matrix_algebra(2).unwrap();
        let x = regular_bimodule(&a);
        let v = verify_vanishing_equivalence(&a, &x, 1, &small_plan(3)).unwrap();
        assert_eq!(v.exact_dim, 0);
        assert!(v.approx_vanishes && v.consistent && v.holds());
        assert_eq!(v.trials.len(), 3);
        for t in &v.trials {
            assert!(t.repair_distance <= t.bound);
        }
    }

    #[test]
    fn zero_perturbation_trials_sit_on_coboundaries() {
        let a = matrix_algebra(2).unwrap();
        let x = regular_bimodule(&a);
        let mut plan = small_plan(2);
        plan.eps = vec![0.0];
        let v = verify_vanishing_equivalence(&a, &x, 1, &plan).unwrap();
        for t in &v.trials {
            assert!(t.repair_distance <= 1e-12, "{t:?}");
            assert_eq!(t.alpha_cap, 0.0);
        }
    }

    #[test]
    fn dual_numbers_obstruct() {
        let a = dual_numbers().unwrap();
        let x = regular_bimodule(&a);
        let v = verify_vanishing_equivalence(&a, &x, 1, &small_plan(1)).unwrap();
        assert_eq!(v.exact_dim, 1);
        assert!(!v.approx_vanishes && v.consistent);
        let o = v.obstruction.unwrap();
        assert_eq!(o.distance, o.witness_norm);
    }

    #[test]
    fn probes() {
        let a = matrix_algebra(2).unwrap();
        let family = vec![regular_bimodule(&a), zero_bimodule(&a, 1)];
        let c = contractibility_probe(&a, &family, &small_plan(1)).unwrap();
        assert!(c.passes && c.holds());
        let m = amenability_probe(&a, &family, &small_plan(1)).unwrap();
        assert!(m.passes);
        let d = dual_numbers().unwrap();
        let t = contractibility_probe(&d, &[regular_bimodule(&d)], &small_plan(1)).unwrap();
        assert!(!t.passes && t.holds());
        assert_eq!(t.witness().unwrap().h1, 1);
    }
}
