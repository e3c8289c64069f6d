//! Stability reports: assembly, JSON and table rendering, and validation
//! against the published report schema.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use crate::algebra::{Algebra, Bimodule};
use crate::cochain::CohomologyDims;
use crate::error::{Error, Result};
use crate::experiment::{ExperimentConfig, Task};
use crate::hyers::{BoundRecord, RepairResult};
use crate::vanishing::{ProbeTable, VanishingVerdict};

pub const SCHEMA_TAG: &str = "hochschild-stability-report/1";

/// JSON Schema for the report (the subset understood by [`validate_report`]:
/// `type`, `const`, `required`, `properties`, `items`).
pub const REPORT_SCHEMA: &str = r#"{
  "type": "object",
  "required": ["schema", "task", "config", "algebra", "module", "cohomology",
               "repairs", "vanishing", "probes", "verdict", "timing"],
  "properties": {
    "schema": {"const": "hochschild-stability-report/1"},
    "task": {"type": "string"},
    "config": {"type": "object", "required": ["task", "n", "eps", "m_max", "tol"]},
    "algebra": {"type": "object", "required": ["dim", "basis", "kappa"],
      "properties": {"dim": {"type": "integer"}, "basis": {"type": "array", "items": {"type": "string"}},
                     "kappa": {"type": "string"}}},
    "module": {"type": "object", "required": ["label", "dim", "action_norm"],
      "properties": {"label": {"type": "string"}, "dim": {"type": "integer"},
                     "action_norm": {"type": "number"}}},
    "cohomology": {"type": ["null", "array"],
      "items": {"type": "object", "required": ["dims", "complex_holds"],
        "properties": {"complex_holds": {"type": "boolean"},
          "dims": {"type": "object", "required": ["degree", "cochains", "cocycles", "coboundaries", "cohomology"]}}}},
    "repairs": {"type": "array",
      "items": {"type": "object", "required": ["seed", "eps", "result"],
        "properties": {"seed": {"type": "integer"}, "eps": {"type": "number"},
          "result": {"type": "object",
            "required": ["degree", "cocycle", "distances", "bounds", "alpha", "beta", "ledger", "checks", "trace"],
            "properties": {
              "distances": {"type": "array", "items": {"type": "number"}},
              "bounds": {"type": "array", "items": {"type": "number"}},
              "alpha": {"type": "object", "required": ["measured", "used", "source"]},
              "beta": {"type": "object", "required": ["measured", "used", "source"]},
              "ledger": {"type": "object", "required": ["alpha", "records"],
                "properties": {"records": {"type": "array", "items": {"$ref": "record"}}}},
              "checks": {"type": "array", "items": {"$ref": "record"}}}}}}},
    "vanishing": {"type": ["null", "object"],
      "required": ["degree", "exact_dim", "approx_vanishes", "trials", "consistent"],
      "properties": {"exact_dim": {"type": "integer"}, "approx_vanishes": {"type": "boolean"},
                     "consistent": {"type": "boolean"}}},
    "probes": {"type": "array",
      "items": {"type": "object", "required": ["property", "rows", "passes", "note"]}},
    "verdict": {"type": "object", "required": ["holds", "failures"],
      "properties": {"holds": {"type": "boolean"}, "failures": {"type": "array", "items": {"type": "string"}}}},
    "timing": {"type": "object", "required": ["elapsed_ms"],
      "properties": {"elapsed_ms": {"type": "number"}}}
  },
  "definitions": {
    "record": {"type": "object", "required": ["id", "label", "lhs", "rhs", "slack", "holds"],
      "properties": {"id": {"type": "string"}, "label": {"type": "string"},
                     "lhs": {"type": "number"}, "rhs": {"type": "number"},
                     "slack": {"type": "number"}, "holds": {"type": "boolean"}}}
  }
}"#;

#[derive(Debug, Clone, Serialize)]
pub struct AlgebraInfo {
    pub dim: usize,
    pub basis: Vec<String>,
    pub kappa: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModuleInfo {
    pub label: String,
    pub dim: usize,
    pub action_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CohomologyRow {
    pub dims: CohomologyDims,
    /// `delta^{n+1} delta^n = 0` exactly.
    pub complex_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairRun {
    pub seed: u64,
    pub eps: f64,
    pub result: RepairResult,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub failures: Vec<String>,
}

impl Verdict {
    pub fn collect(report: &StabilityReport) -> Self {
        let mut failures = Vec::new();
        for row in report.cohomology.iter().flatten() {
            if !row.complex_holds {
                failures.push(format!("complex property fails at degree {}", row.dims.degree));
            }
        }
        for run in &report.repairs {
            for rec in run.result.records() {
                if !rec.holds {
                    failures.push(format!("seed {} eps {:e}: {}", run.seed, run.eps, rec.id));
                }
            }
        }
        if let Some(v) = &report.vanishing {
            if !v.holds() {
                failures.push(format!("vanishing at degree {} is inconsistent", v.degree));
            }
        }
        for p in &report.probes {
            for row in &p.rows {
                if !row.verdict.holds() {
                    failures.push(format!("{} probe inconsistent at module {}", p.property, row.module));
                }
            }
        }
        Verdict {
            holds: failures.is_empty(),
            failures,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub schema: String,
    pub task: Task,
    pub config: ExperimentConfig,
    pub algebra: AlgebraInfo,
    pub module: ModuleInfo,
    pub cohomology: Option<Vec<CohomologyRow>>,
    pub repairs: Vec<RepairRun>,
    pub vanishing: Option<VanishingVerdict>,
    pub probes: Vec<ProbeTable>,
    pub verdict: Verdict,
    pub timing: Timing,
}

impl StabilityReport {
    pub fn new(config: ExperimentConfig, alg: &Algebra, module: &Bimodule) -> Self {
        StabilityReport {
            schema: SCHEMA_TAG.into(),
            task: config.task,
            config,
            algebra: AlgebraInfo {
                dim: alg.dim(),
                basis: alg.labels().to_vec(),
                kappa: String::new(),
            },
            module: ModuleInfo {
                label: module.label().into(),
                dim: module.dim(),
                action_norm: 0.0,
            },
            cohomology: None,
            repairs: Vec::new(),
            vanishing: None,
            probes: Vec::new(),
            verdict: Verdict::default(),
            timing: Timing::default(),
        }
    }

    /// Exit status under `--strict`: 0 when every verdict holds, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdict.holds {
            0
        } else {
            2
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "table" => Ok(Format::Table),
            other => Err(Error::arg(format!("unknown format {other:?}"))),
        }
    }
}

/// Re-renders every float with 17 significant digits.
fn normalize(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let f = n.as_f64().unwrap_or(f64::NAN);
            if f.is_finite() {
                *v = serde_json::from_str(&format!("{f:.16e}")).expect("formatted float parses");
            } else {
                *v = Value::Null;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(normalize),
        Value::Object(map) => map.values_mut().for_each(normalize),
        _ => {}
    }
}

pub fn to_value(report: &StabilityReport) -> Value {
    let mut v = serde_json::to_value(report).expect("reports serialize");
    normalize(&mut v);
    v
}

pub fn to_json(report: &StabilityReport) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(report)).expect("values serialize");
    s.push('\n');
    s
}

/// The report with its timing block removed, for reproducibility checks.
pub fn without_timing(text: &str) -> Result<Value> {
    let mut v: Value = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(map) = v.as_object_mut() {
        map.remove("timing");
    }
    Ok(v)
}

fn record_line(out: &mut String, rec: &BoundRecord) {
    let _ = writeln!(
        out,
        "  {:<5} {:<22} {:<58} {:>12.4e} <= {:>12.4e}",
        if rec.holds { "ok" } else { "FAIL" },
        rec.id,
        rec.label,
        rec.lhs,
        rec.rhs
    );
}

pub fn render_table(report: &StabilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} ({})", report.schema, report.task);
    let _ = writeln!(
        out,
        "algebra: dim {} basis [{}] kappa {}",
        report.algebra.dim,
        report.algebra.basis.join(", "),
        report.algebra.kappa
    );
    let _ = writeln!(
        out,
        "module: {} dim {} action norm {:.6}",
        report.module.label, report.module.dim, report.module.action_norm
    );
    if let Some(rows) = &report.cohomology {
        let _ = writeln!(out, "\n  n  dim C^n  dim Z^n  dim B^n  dim H^n  complex");
        for r in rows {
            let d = &r.dims;
            let _ = writeln!(
                out,
                "  {:<2} {:>7}  {:>7}  {:>7}  {:>7}  {}",
                d.degree,
                d.cochains,
                d.cocycles,
                d.coboundaries,
                d.cohomology,
                if r.complex_holds { "ok" } else { "FAIL" }
            );
        }
    }
    for run in &report.repairs {
        let r = &run.result;
        let _ = writeln!(
            out,
            "\nrepair n={} seed={} eps={:e}: alpha {:.4e} ({:?}), beta {:.4e}, m_used {}, converged {}",
            r.degree,
            run.seed,
            run.eps,
            r.alpha.used,
            r.alpha.source,
            r.beta.measured,
            r.trace.m_used,
            r.trace.converged
        );
        if let Some(e) = r.planted_error {
            let _ = writeln!(out, "  distance to planted cocycle {e:.4e}");
        }
        for rec in r.records() {
            record_line(&mut out, rec);
        }
    }
    if let Some(v) = &report.vanishing {
        let _ = writeln!(
            out,
            "\nvanishing n={} module {}: dim H^n = {}, approximately vanishes: {}, consistent: {}",
            v.degree, v.module, v.exact_dim, v.approx_vanishes, v.consistent
        );
        for t in &v.trials {
            let _ = writeln!(
                out,
                "  trial seed {} eps {:e}: |δG - f| {:.4e} <= 3·2^n·α {:.4e} {}",
                t.seed,
                t.eps,
                t.repair_distance,
                t.bound,
                if t.holds { "ok" } else { "FAIL" }
            );
        }
        if let Some(o) = &v.obstruction {
            let _ = writeln!(
                out,
                "  obstruction: distance to B^n {:.6e} (witness norm {:.6e}, floor {:e})",
                o.distance, o.witness_norm, o.floor
            );
        }
    }
    for p in &report.probes {
        let _ = writeln!(out, "\n{}: {}", p.property, if p.passes { "passes" } else { "fails" });
        for r in &p.rows {
            let _ = writeln!(
                out,
                "  {:<16} dim H^1 = {}  approximately vanishes: {}",
                r.module, r.h1, r.approx_vanishes
            );
        }
        let _ = writeln!(out, "  note: {}", p.note);
    }
    let _ = writeln!(
        out,
        "\nverdict: {}",
        if report.verdict.holds { "all bounds hold" } else { "VIOLATED" }
    );
    for f in &report.verdict.failures {
        let _ = writeln!(out, "  {f}");
    }
    out
}

pub fn render(report: &StabilityReport, format: Format) -> String {
    match format {
        Format::Json => to_json(report),
        Format::Table => render_table(report),
    }
}

fn type_matches(v: &Value, ty: &str) -> bool {
    match ty {
        "null" => v.is_null(),
        "boolean" => v.is_boolean(),
        "string" => v.is_string(),
        "array" => v.is_array(),
        "object" => v.is_object(),
        "number" => v.is_number(),
        "integer" => v.is_u64() || v.is_i64(),
        _ => false,
    }
}

fn check(v: &Value, schema: &Value, root: &Value, path: &str) -> Result<()> {
    let fail = |msg: String| Err(Error::arg(format!("report schema: {path}: {msg}")));
    if let Some(name) = schema.get("$ref").and_then(Value::as_str) {
        let target = &root["definitions"][name];
        return check(v, target, root, path);
    }
    if let Some(c) = schema.get("const") {
        if v != c {
            return fail(format!("expected {c}"));
        }
    }
    if let Some(t) = schema.get("type") {
        let ok = match t {
            Value::String(s) => type_matches(v, s),
            Value::Array(ts) => ts.iter().filter_map(Value::as_str).any(|s| type_matches(v, s)),
            _ => true,
        };
        if !ok {
            return fail(format!("expected type {t}"));
        }
    }
    if let (Some(obj), Some(req)) = (v.as_object(), schema.get("required").and_then(Value::as_array)) {
        for key in req.iter().filter_map(Value::as_str) {
            if !obj.contains_key(key) {
                return fail(format!("missing field {key:?}"));
            }
        }
    }
    if let (Some(obj), Some(props)) = (v.as_object(), schema.get("properties").and_then(Value::as_object)) {
        for (key, sub) in props {
            if let Some(child) = obj.get(key) {
                check(child, sub, root, &format!("{path}.{key}"))?;
            }
        }
    }
    if let (Some(items), Some(sub)) = (v.as_array(), schema.get("items")) {
        for (i, item) in items.iter().enumerate() {
            check(item, sub, root, &format!("{path}[{i}]"))?;
        }
    }
    Ok(())
}

/// Validates a report document against [`REPORT_SCHEMA`].
pub fn validate_report(v: &Value) -> Result<()> {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).expect("schema is valid JSON");
    check(v, &schema, &schema, "$")
}

/// The schema as a JSON value.
pub fn report_schema() -> Value {
    serde_json::from_str(REPORT_SCHEMA).expect("schema is valid JSON")
}
