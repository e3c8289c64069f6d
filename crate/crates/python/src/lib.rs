//! Python bindings: builtin and file algebras, exact cohomology, and the
//! experiment runner that produces JSON stability reports.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hochschild::algebra::{dual_bimodule, regular_bimodule, zero_bimodule};
use hochschild::cochain::{cohomology_dims, complex_property_holds};
use hochschild::experiment::{builtin_algebra, ExperimentConfig, Task};
use hochschild::report::{render, validate_report, Format};
use hochschild::{Error, PerturbationKind};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

create_exception!(hochschild_py, HochschildError, PyException);

fn py_err(e: Error) -> PyErr {
    HochschildError::new_err(e.to_string())
}

#[pyclass(name = "Algebra", module = "hochschild_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyAlgebra {
    inner: hochschild::Algebra,
    module: Option<hochschild::Bimodule>,
}

#[pymethods]
impl PyAlgebra {
    /// `m<k>`, `t<k>` or `dual-numbers`.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        Ok(PyAlgebra {
            inner: builtin_algebra(name).map_err(py_err)?,
            module: None,
        })
    }

    /// Parses an algebra document (JSON text).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, module) = hochschild::io::parse_algebra_str(text).map_err(py_err)?;
        Ok(PyAlgebra { inner, module })
    }

    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        let (inner, module) = hochschild::io::parse_algebra_file(path).map_err(py_err)?;
        Ok(PyAlgebra { inner, module })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn basis(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    /// Norm scale of the algebra as an exact rational string.
    #[getter]
    fn kappa(&self) -> String {
        hochschild::scalar::format_rational(self.inner.norm_scale())
    }

    fn to_json(&self) -> String {
        hochschild::io::render_algebra(&self.inner, self.module.as_ref())
    }

    fn regular(&self) -> PyBimodule {
        PyBimodule {
            inner: regular_bimodule(&self.inner),
        }
    }

    #[pyo3(signature = (dim = 1))]
    fn zero(&self, dim: usize) -> PyBimodule {
        PyBimodule {
            inner: zero_bimodule(&self.inner, dim),
        }
    }

    /// The bimodule shipped with the algebra file, if any.
    fn file_module(&self) -> Option<PyBimodule> {
        self.module.clone().map(|inner| PyBimodule { inner })
    }

    fn __repr__(&self) -> String {
        format!("Algebra(dim={}, basis={:?})", self.inner.dim(), self.inner.labels())
    }
}

#[pyclass(name = "Bimodule", module = "hochschild_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBimodule {
    inner: hochschild::Bimodule,
}

#[pymethods]
impl PyBimodule {
    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn dual(&self) -> PyBimodule {
        PyBimodule {
            inner: dual_bimodule(&self.inner),
        }
    }

    fn __repr__(&self) -> String {
        format!("Bimodule(label={:?}, dim={})", self.inner.label(), self.inner.dim())
    }
}

/// Dimensions of the cochain, cocycle, coboundary and cohomology spaces.
#[pyfunction]
fn cohomology(algebra: &PyAlgebra, module: &PyBimodule, n: usize) -> PyResult<BTreeMap<&'static str, usize>> {
    let d = cohomology_dims(n, &algebra.inner, &module.inner).map_err(py_err)?;
    Ok(BTreeMap::from([
        ("degree", d.degree),
        ("cochains", d.cochains),
        ("cocycles", d.cocycles),
        ("coboundaries", d.coboundaries),
        ("cohomology", d.cohomology),
    ]))
}

/// Exact check that the degree-`n` and degree-`n+1` coboundaries compose to zero.
#[pyfunction]
fn complex_property(algebra: &PyAlgebra, module: &PyBimodule, n: usize) -> PyResult<bool> {
    complex_property_holds(n, &algebra.inner, &module.inner).map_err(py_err)
}

fn format_of(name: &str) -> PyResult<Format> {
    name.parse().map_err(py_err)
}

/// Runs an experiment described by TOML text and returns the rendered report.
#[pyfunction]
#[pyo3(signature = (text, format = "json"))]
fn run_toml(py: Python<'_>, text: &str, format: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::from_toml(text).map_err(py_err)?;
    let format = format_of(format)?;
    let report = py.detach(|| hochschild::run(&cfg)).map_err(py_err)?;
    Ok(render(&report, format))
}

/// Runs one experiment and returns the rendered report.
#[pyfunction]
#[pyo3(signature = (
    task, *, builtin = None, algebra = None, module = "regular", n = 1, eps = None,
    seed = None, trials = 1, perturb = None, lambda_set = None, samples = None, format = "json"
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    task: &str,
    builtin: Option<String>,
    algebra: Option<PathBuf>,
    module: &str,
    n: usize,
    eps: Option<Vec<f64>>,
    seed: Option<u64>,
    trials: usize,
    perturb: Option<&str>,
    lambda_set: Option<String>,
    samples: Option<usize>,
    format: &str,
) -> PyResult<String> {
    let task: Task = task.parse().map_err(py_err)?;
    let mut cfg = ExperimentConfig::new(task);
    cfg.builtin = builtin;
    cfg.algebra = algebra;
    cfg.module = module.to_string();
    cfg.n = n;
    if let Some(e) = eps {
        cfg.eps = e;
    }
    cfg.seed = seed;
    cfg.trials = trials;
    if let Some(p) = perturb {
        cfg.perturb = p.parse::<PerturbationKind>().map_err(py_err)?;
    }
    if let Some(l) = lambda_set {
        cfg.lambda_set = l;
    }
    if let Some(s) = samples {
        cfg.samples = s;
    }
    let format = format_of(format)?;
    let report = py.detach(|| hochschild::run(&cfg)).map_err(py_err)?;
    Ok(render(&report, format))
}

/// Checks a JSON report against the published schema.
#[pyfunction]
fn validate(text: &str) -> PyResult<()> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| HochschildError::new_err(e.to_string()))?;
    validate_report(&v).map_err(py_err)
}

#[pymodule]
fn hochschild_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HochschildError", m.py().get_type::<HochschildError>())?;
    m.add("SCHEMA", hochschild::report::SCHEMA_TAG)?;
    m.add_class::<PyAlgebra>()?;
    m.add_class::<PyBimodule>()?;
    m.add_function(wrap_pyfunction!(cohomology, m)?)?;
    m.add_function(wrap_pyfunction!(complex_property, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_toml, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
