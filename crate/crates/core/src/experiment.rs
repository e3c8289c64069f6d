//! Experiment configuration and the dispatcher that turns a config into a
//! report.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    action_norm_constant, dual_bimodule, dual_numbers, matrix_algebra, regular_bimodule,
    upper_triangular, zero_bimodule, Algebra, Bimodule,
};
use crate::cochain::{coboundary, cocycle_space, cohomology_dims, complex_property_holds, Cochain};
use crate::defect::{LambdaSet, PerturbationKind, SamplingPlan, SpanningSet};
use crate::error::{Error, Result};
use crate::hyers::{
    inner_derivation, planted_triple, repair_derivation, repair_pexider_triple,
    repair_to_coboundary, RepairOptions, RepairResult, DEFAULT_M_MAX, DEFAULT_RESIDUAL_TOL,
    DEFAULT_TOL, LEDGER_SAMPLES,
};
use crate::io::parse_algebra_file;
use crate::report::{CohomologyRow, RepairRun, StabilityReport, Verdict};
use crate::scalar::{format_rational, rational, Exact};
use crate::vanishing::{
    amenability_probe, contractibility_probe, seeded_cocycle, verify_vanishing_equivalence, TrialPlan,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Cohomology,
    Repair,
    Derivation,
    CoboundaryRepair,
    Vanishing,
    Probe,
}

impl Task {
    pub fn stochastic(self) -> bool {
        self != Task::Cohomology
    }
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.into()))
            .map_err(|_| Error::arg(format!("unknown task {s:?}")))
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).expect("task serializes");
        f.write_str(v.as_str().unwrap_or_default())
    }
}

fn default_module() -> String {
    "regular".into()
}
fn default_n() -> usize {
    1
}
fn default_eps() -> Vec<f64> {
    vec![1e-2]
}
fn default_perturb() -> PerturbationKind {
    PerturbationKind::BoundedSmooth
}
fn default_lambda() -> String {
    "tcircle:4".into()
}
fn default_span() -> String {
    "basis".into()
}
fn default_m_max() -> usize {
    DEFAULT_M_MAX
}
fn default_tol() -> f64 {
    DEFAULT_TOL
}
fn default_residual_tol() -> f64 {
    DEFAULT_RESIDUAL_TOL
}
fn default_trials() -> usize {
    1
}
fn default_samples() -> usize {
    SamplingPlan::DEFAULT_COUNT
}
fn default_ledger_samples() -> usize {
    LEDGER_SAMPLES
}

/// Flat key-value experiment description, read from TOML or assembled
/// from command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub algebra: Option<PathBuf>,
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default = "default_module")]
    pub module: String,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default = "default_perturb")]
    pub perturb: PerturbationKind,
    #[serde(default = "default_lambda")]
    pub lambda_set: String,
    #[serde(default = "default_span")]
    pub span: String,
    #[serde(default = "default_m_max")]
    pub m_max: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_residual_tol")]
    pub residual_tol: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_ledger_samples")]
    pub ledger_samples: usize,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            task,
            algebra: None,
            builtin: None,
            module: default_module(),
            n: default_n(),
            eps: default_eps(),
            perturb: default_perturb(),
            lambda_set: default_lambda(),
            span: default_span(),
            m_max: default_m_max(),
            tol: default_tol(),
            residual_tol: default_residual_tol(),
            seed: None,
            trials: default_trials(),
            samples: default_samples(),
            ledger_samples: default_ledger_samples(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_col(text, s.start))
                .unwrap_or((0, 0));
            Error::Syntax {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.algebra, &self.builtin) {
            (Some(_), Some(_)) => return Err(Error::arg("give either an algebra file or a builtin, not both")),
            (None, None) => return Err(Error::arg("an algebra file or a builtin is required")),
            _ => {}
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::arg("tol must be positive"));
        }
        if !(self.residual_tol.is_finite() && self.residual_tol > 0.0) {
            return Err(Error::arg("residual_tol must be positive"));
        }
        if self.m_max == 0 {
            return Err(Error::arg("m_max must be at least 1"));
        }
        if self.task.stochastic() {
            if self.seed.is_none() {
                return Err(Error::arg(format!("task {} needs a seed", self.task)));
            }
            if self.eps.is_empty() || self.eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
                return Err(Error::arg("eps must be a nonempty list of finite values >= 0"));
            }
            if self.trials == 0 || self.samples == 0 || self.ledger_samples == 0 {
                return Err(Error::arg("trials and sample counts must be positive"));
            }
            self.lambda_set.parse::<LambdaSet>()?;
        }
        match self.task {
            Task::Derivation if self.n != 1 => Err(Error::arg("the derivation task has n = 1")),
            Task::CoboundaryRepair if self.n < 2 => Err(Error::arg("coboundary repair needs n >= 2")),
            Task::Repair | Task::Vanishing if self.n == 0 => Err(Error::arg("n must be at least 1")),
            _ => Ok(()),
        }
    }

    fn options(&self, seed: u64) -> RepairOptions {
        RepairOptions {
            m_max: self.m_max,
            tol: self.tol,
            residual_tol: self.residual_tol,
            seed,
            ledger_samples: self.ledger_samples,
            defect_samples: self.samples,
        }
    }

    fn seeds(&self) -> Vec<u64> {
        let s = self.seed.unwrap_or(0);
        (0..self.trials as u64).map(|k| s.wrapping_add(k)).collect()
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, column)
}

/// Builtin algebras: `m<k>`, `t<k>` (upper triangular), `dual-numbers`.
pub fn builtin_algebra(name: &str) -> Result<Algebra> {
    let size = |rest: &str| {
        rest.parse::<usize>()
            .map_err(|_| Error::arg(format!("unknown builtin algebra {name:?}")))
    };
    match name {
        "dual-numbers" | "dual" => dual_numbers(),
        _ if name.starts_with('m') => matrix_algebra(size(&name[1..])?),
        _ if name.starts_with('t') => upper_triangular(size(&name[1..])?),
        _ => Err(Error::arg(format!("unknown builtin algebra {name:?}"))),
    }
}

/// `regular`, `dual` (of the regular module), `zero[:DIM]`, or the label
/// of the bimodule given in the algebra file (`file` picks it regardless).
pub fn resolve_module(alg: &Algebra, name: &str, from_file: Option<&Bimodule>) -> Result<Bimodule> {
    match name {
        "regular" => Ok(regular_bimodule(alg)),
        "dual" => Ok(dual_bimodule(&regular_bimodule(alg))),
        "zero" => Ok(zero_bimodule(alg, 1)),
        _ if name.starts_with("zero:") => {
            let d = name[5..]
                .parse()
                .map_err(|_| Error::arg(format!("bad zero-module size in {name:?}")))?;
            Ok(zero_bimodule(alg, d))
        }
        _ => match from_file {
            Some(m) if name == "file" || m.label() == name => Ok(m.clone()),
            _ => Err(Error::arg(format!("unknown module {name:?}"))),
        },
    }
}

/// `basis`, `indices:0,2,3`, or a bare index list.
pub fn parse_span(alg: &Algebra, text: &str) -> Result<SpanningSet> {
    if text == "basis" {
        return Ok(SpanningSet::basis(alg));
    }
    let list = text.strip_prefix("indices:").unwrap_or(text);
    let idx = list
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::arg(format!("bad spanning set {text:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    SpanningSet::from_indices(alg, &idx)
}

fn load(cfg: &ExperimentConfig) -> Result<(Algebra, Bimodule)> {
    let (alg, file_module) = match (&cfg.algebra, &cfg.builtin) {
        (Some(path), _) => parse_algebra_file(path)?,
        (_, Some(name)) => (builtin_algebra(name)?, None),
        _ => return Err(Error::arg("no algebra given")),
    };
    let module = resolve_module(&alg, &cfg.module, file_module.as_ref())?;
    Ok((alg, module))
}

/// A seeded exact cochain with entries `k/4`, `|k| <= 4`.
pub fn seeded_exact_cochain(n: usize, dim_a: usize, dim_x: usize, seed: u64) -> Cochain<Exact> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = dim_a.pow(n as u32) * dim_x;
    let values = (0..count)
        .map(|_| Exact::new(rational(rng.gen_range(-4..=4), 4), rational(0, 1)))
        .collect();
    Cochain::from_values(n, dim_a, dim_x, values).expect("sizes agree")
}

fn eps_triple(e: f64) -> [f64; 3] {
    [e; 3]
}

fn run_repairs(cfg: &ExperimentConfig, alg: &Algebra, module: &Bimodule) -> Result<Vec<RepairRun>> {
    let lambdas: LambdaSet = cfg.lambda_set.parse()?;
    let span = parse_span(alg, &cfg.span)?;
    let mut runs = Vec::new();
    for seed in cfg.seeds() {
        for &e in &cfg.eps {
            let opts = cfg.options(seed);
            let result: RepairResult = match cfg.task {
                Task::Repair => {
                    let basis = cocycle_space(cfg.n, alg, module)?;
                    let core = seeded_cocycle(&basis, cfg.n, alg.dim(), module.dim(), seed)?;
                    let t = planted_triple(alg, &core, eps_triple(e), cfg.perturb, seed)?;
                    repair_pexider_triple(alg, module, &t, &lambdas, &span, &opts)?
                }
                Task::Derivation => {
                    let x = seeded_exact_cochain(0, alg.dim(), module.dim(), seed);
                    let inner = inner_derivation(alg, module, x.values())?.to_float();
                    let t = planted_triple(alg, &inner, eps_triple(e), cfg.perturb, seed)?;
                    repair_derivation(alg, module, &t, x.values(), &lambdas, &span, &opts)?
                }
                Task::CoboundaryRepair => {
                    let g = seeded_exact_cochain(cfg.n - 1, alg.dim(), module.dim(), seed);
                    let f = coboundary(&g, alg, module)?;
                    let ft = planted_triple(alg, &f.to_float(), eps_triple(e), cfg.perturb, seed)?;
                    let gt = planted_triple(alg, &g.to_float(), eps_triple(e), cfg.perturb, seed ^ 0x9)?;
                    repair_to_coboundary(alg, module, &ft, &gt, &lambdas, &span, &opts)?
                }
                _ => unreachable!("not a repair task"),
            };
            runs.push(RepairRun { seed, eps: e, result });
        }
    }
    Ok(runs)
}

fn trial_plan(cfg: &ExperimentConfig) -> TrialPlan {
    let seed = cfg.seed.unwrap_or(0);
    let mut plan = TrialPlan::new(cfg.trials, seed, cfg.eps.clone());
    plan.kind = cfg.perturb;
    plan.options = cfg.options(seed);
    plan
}

/// Runs one experiment end to end.
pub fn run(cfg: &ExperimentConfig) -> Result<StabilityReport> {
    cfg.validate().map_err(|e| e.at("config"))?;
    let start = Instant::now();
    let (alg, module) = load(cfg).map_err(|e| e.at("load"))?;
    let mut report = StabilityReport::new(cfg.clone(), &alg, &module);
    report.module.action_norm = action_norm_constant(&alg, &module);
    report.algebra.kappa = format_rational(alg.norm_scale());
    match cfg.task {
        Task::Cohomology => {
            let rows = (0..=cfg.n)
                .map(|k| {
                    Ok(CohomologyRow {
                        dims: cohomology_dims(k, &alg, &module)?,
                        complex_holds: complex_property_holds(k, &alg, &module)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.at("cohomology"))?;
            report.cohomology = Some(rows);
        }
        Task::Repair | Task::Derivation | Task::CoboundaryRepair => {
            report.repairs = run_repairs(cfg, &alg, &module).map_err(|e| e.at("repair"))?;
        }
        Task::Vanishing => {
            let v = verify_vanishing_equivalence(&alg, &module, cfg.n, &trial_plan(cfg))
                .map_err(|e| e.at("vanishing"))?;
            report.vanishing = Some(v);
        }
        Task::Probe => {
            let family = vec![
                regular_bimodule(&alg),
                dual_bimodule(&regular_bimodule(&alg)),
                zero_bimodule(&alg, 1),
            ];
            let plan = trial_plan(cfg);
            report.probes = vec![
                contractibility_probe(&alg, &family, &plan).map_err(|e| e.at("probe"))?,
                amenability_probe(&alg, &family, &plan).map_err(|e| e.at("probe"))?,
            ];
        }
    }
    report.verdict = Verdict::collect(&report);
    report.timing.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}
