//! Algebra definition files.
//!
//! A JSON document:
//!
//! ```json
//! {
//!   "dim": 2,
//!   "basis": ["1", "t"],
//!   "structure": [[["1","0"],["0","1"]],[["0","1"],["0","0"]]],
//!   "bimodule": {"label": "regular", "dim": 2,
//!                "left_action": [...], "right_action": [...]}
//! }
//! ```
//!
//! `structure[i][j][k]` is the coefficient of `e_k` in `e_i e_j`;
//! `left_action[i]` and `right_action[i]` are the `dim x dim` matrices of
//! `e_i` acting on column vectors. Scalars are rational strings `"p/q"`,
//! integers, or `[re, im]` pairs of those.

use std::path::Path;

use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{check_bimodule, Algebra, Bimodule, Certificate, Violation};
use crate::error::{Error, Result};
use crate::scalar::{format_rational, parse_rational, Exact};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(untagged)]
enum Atom {
    Int(i64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Real(Atom),
    Complex(Atom, Atom),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleFile {
    #[serde(default)]
    label: Option<String>,
    dim: usize,
    left_action: Vec<Vec<Vec<Entry>>>,
    right_action: Vec<Vec<Vec<Entry>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraFile {
    dim: usize,
    #[serde(default)]
    basis: Option<Vec<String>>,
    structure: Vec<Vec<Vec<Entry>>>,
    #[serde(default)]
    bimodule: Option<ModuleFile>,
}

fn atom(a: &Atom, path: &str) -> Result<BigRational> {
    match a {
        Atom::Int(v) => Ok(BigRational::from_integer((*v).into())),
        Atom::Text(s) => parse_rational(s).map_err(|e| Error::arg(format!("{path}: {e}"))),
    }
}

fn entry(e: &Entry, path: &str) -> Result<Exact> {
    match e {
        Entry::Real(a) => Ok(Complex::new(atom(a, path)?, BigRational::zero())),
        Entry::Complex(re, im) => Ok(Complex::new(atom(re, path)?, atom(im, path)?)),
    }
}

/// Flattens a cube of entries after checking it is `a x b x c`.
fn cube(data: &[Vec<Vec<Entry>>], shape: [usize; 3], name: &str) -> Result<Vec<Exact>> {
    if data.len() != shape[0] {
        return Err(Error::dim(format!("{name} has {} blocks, expected {}", data.len(), shape[0])));
    }
    let mut out = Vec::with_capacity(shape.iter().product());
    for (i, block) in data.iter().enumerate() {
        if block.len() != shape[1] {
            return Err(Error::dim(format!("{name}[{i}] has {} rows, expected {}", block.len(), shape[1])));
        }
        for (j, row) in block.iter().enumerate() {
            if row.len() != shape[2] {
                return Err(Error::dim(format!(
                    "{name}[{i}][{j}] has {} entries, expected {}",
                    row.len(),
                    shape[2]
                )));
            }
            for (k, e) in row.iter().enumerate() {
                out.push(entry(e, &format!("{name}[{i}][{j}][{k}]"))?);
            }
        }
    }
    Ok(out)
}

fn syntax(e: serde_json::Error) -> Error {
    Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

fn certify(cert: Certificate) -> Result<()> {
    match cert {
        Certificate::Pass => Ok(()),
        Certificate::Fail(Violation::Associativity { i, j, l }) => Err(Error::NotAssociative(i, j, l)),
        Certificate::Fail(Violation::Bimodule { axiom, i, j }) => Err(Error::NotBimodule { axiom, i, j }),
    }
}

/// Parses an algebra document, validating every axiom before returning.
pub fn parse_algebra_str(text: &str) -> Result<(Algebra, Option<Bimodule>)> {
    let file: AlgebraFile = serde_json::from_str(text).map_err(syntax)?;
    let d = file.dim;
    if d == 0 {
        return Err(Error::dim("algebra dimension must be positive"));
    }
    let labels = match file.basis {
        Some(b) if b.len() == d => b,
        Some(b) => {
            return Err(Error::dim(format!("{} basis labels for dimension {d}", b.len())));
        }
        None => (0..d).map(|i| format!("e{}", i + 1)).collect(),
    };
    let structure = cube(&file.structure, [d, d, d], "structure")?;
    let alg = Algebra::new(labels, structure)?;
    let module = match file.bimodule {
        None => None,
        Some(m) => {
            let n = m.dim;
            let left = cube(&m.left_action, [d, n, n], "left_action")?;
            let right = cube(&m.right_action, [d, n, n], "right_action")?;
            let module = Bimodule::new(m.label.unwrap_or_else(|| "file".into()), d, n, left, right)?;
            certify(check_bimodule(&alg, &module)?)?;
            Some(module)
        }
    };
    Ok((alg, module))
}

pub fn parse_algebra_file(path: impl AsRef<Path>) -> Result<(Algebra, Option<Bimodule>)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_algebra_str(&text)
}

fn render_entry(v: &Exact) -> Value {
    if v.im.is_zero() {
        json!(format_rational(&v.re))
    } else {
        json!([format_rational(&v.re), format_rational(&v.im)])
    }
}

fn render_cube(data: &[Exact], shape: [usize; 3]) -> Value {
    Value::Array(
        (0..shape[0])
            .map(|i| {
                Value::Array(
                    (0..shape[1])
                        .map(|j| {
                            let start = (i * shape[1] + j) * shape[2];
                            Value::Array(data[start..start + shape[2]].iter().map(render_entry).collect())
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Renders an algebra (and optionally a bimodule) in the file format.
pub fn render_algebra(alg: &Algebra, module: Option<&Bimodule>) -> String {
    let d = alg.dim();
    let mut doc = json!({
        "dim": d,
        "basis": alg.labels(),
        "structure": render_cube(alg.structure(), [d, d, d]),
    });
    if let Some(m) = module {
        let n = m.dim();
        doc["bimodule"] = json!({
            "label": m.label(),
            "dim": n,
            "left_action": render_cube(m.left_actions(), [d, n, n]),
            "right_action": render_cube(m.right_actions(), [d, n, n]),
        });
    }
    serde_json::to_string_pretty(&doc).expect("json values always serialize")
}
