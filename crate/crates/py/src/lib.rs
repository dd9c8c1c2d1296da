//! Python bindings: maps on the simplex, the fixed-point solver, labeling
//! utilities and the reverse piecewise-linear construction.
//!
//! Reports cross the boundary as plain Python dicts (converted from the
//! same serde values the CLI prints), labelings as the text format of the
//! CLI's label files, so results are directly comparable across languages.

use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

use sperner_fixpoint::cli_io::{parse_label_file, render_svg, write_label_file};
use sperner_fixpoint::fixpoint_solver::{extract_cauchy, solve, SolverConfig};
use sperner_fixpoint::labeling::{random_labeling, validate_sperner, SimplexMap};
use sperner_fixpoint::maps::{AffineStochastic, Constant, Poly1d, Rotation};
use sperner_fixpoint::reverse_construction::{
    build_pl_map, fully_labeled_from_fixpoint, pl_fixpoint_exact,
};
use sperner_fixpoint::simplex_grid::{build_grid, BaryPoint};
use sperner_fixpoint::sperner_search::{enumerate_fully_labeled, path_follow, DualNode, Parity};
use sperner_fixpoint::Error;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Recursively converts a serde value into Python objects.
fn value_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().unbind().into(),
        Value::Number(num) => {
            if let Some(u) = num.as_u64() {
                u.into_pyobject(py)?.unbind().into()
            } else if let Some(i) = num.as_i64() {
                i.into_pyobject(py)?.unbind().into()
            } else {
                num.as_f64()
                    .expect("JSON number")
                    .into_pyobject(py)?
                    .unbind()
                    .into()
            }
        }
        Value::String(s) => s.into_pyobject(py)?.unbind().into(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(value_to_py(py, item)?)?;
            }
            list.unbind().into()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, value_to_py(py, item)?)?;
            }
            dict.unbind().into()
        }
    })
}

fn to_py_dict(py: Python<'_>, value: &Value) -> PyResult<Py<PyAny>> {
    value_to_py(py, value)
}

/// A map from a Python callable; evaluation re-enters the interpreter.
/// `eval_raw` cannot surface exceptions, so the callable's failures are
/// recorded and replayed as the final error.
struct CallableMap {
    n: usize,
    name: String,
    func: Py<PyAny>,
    last_err: Arc<Mutex<Option<String>>>,
}

impl SimplexMap for CallableMap {
    fn dim(&self) -> usize {
        self.n
    }

    fn name(&self) -> String {
        self.name.clone()
    }

    fn eval_raw(&self, x: &[f64]) -> Vec<f64> {
        Python::attach(|py| {
            let call = || -> PyResult<Vec<f64>> {
                let arg = PyList::new(py, x)?;
                self.func.bind(py).call1((arg,))?.extract::<Vec<f64>>()
            };
            match call() {
                Ok(out) => out,
                Err(e) => {
                    *self.last_err.lock().expect("poisoned") = Some(e.to_string());
                    // Non-finite output makes the pipeline reject the map.
                    vec![f64::NAN; x.len()]
                }
            }
        })
    }
}

/// A continuous self-map of the n-simplex.
#[pyclass(frozen, name = "Map", module = "sperner_fixpoint_py")]
struct Map {
    inner: Arc<dyn SimplexMap>,
    callable_err: Option<Arc<Mutex<Option<String>>>>,
}

impl Map {
    fn plain(inner: Arc<dyn SimplexMap>) -> Map {
        Map {
            inner,
            callable_err: None,
        }
    }

    /// Replaces a generic map error with the Python exception that caused
    /// it, when evaluation went through a Python callable.
    fn prefer_callable_err(&self, e: Error) -> PyErr {
        if let Some(slot) = &self.callable_err {
            if let Some(msg) = slot.lock().expect("poisoned").take() {
                return PyRuntimeError::new_err(format!("map callable failed: {msg}"));
            }
        }
        to_py_err(e)
    }
}

#[pymethods]
impl Map {
    /// The cyclic coordinate shift (x_0, ..., x_n) -> (x_n, x_0, ..., x_{n-1}).
    #[staticmethod]
    fn rotation(n: usize) -> PyResult<Map> {
        if n == 0 {
            return Err(PyValueError::new_err("dimension must be at least 1"));
        }
        Ok(Map::plain(Arc::new(Rotation::new(n))))
    }

    /// The constant map onto a barycentric point.
    #[staticmethod]
    fn constant(point: Vec<f64>) -> PyResult<Map> {
        let c = BaryPoint::new(point).map_err(to_py_err)?;
        Ok(Map::plain(Arc::new(Constant::new(c))))
    }

    /// A polynomial self-map of [0, 1] embedded as the 1-simplex,
    /// coefficients lowest degree first.
    #[staticmethod]
    fn poly1d(coeffs: Vec<f64>) -> PyResult<Map> {
        Ok(Map::plain(Arc::new(
            Poly1d::new(coeffs).map_err(to_py_err)?,
        )))
    }

    /// x -> Ax for a column-stochastic matrix A.
    #[staticmethod]
    fn affine_stochastic(matrix: Vec<Vec<f64>>) -> PyResult<Map> {
        Ok(Map::plain(Arc::new(
            AffineStochastic::new(matrix).map_err(to_py_err)?,
        )))
    }

    /// Wraps a Python callable taking and returning n+1 barycentric
    /// coordinates as a list of floats.
    #[staticmethod]
    #[pyo3(signature = (n, func, name = "python_callable"))]
    fn from_callable(n: usize, func: Py<PyAny>, name: &str) -> PyResult<Map> {
        if n == 0 {
            return Err(PyValueError::new_err("dimension must be at least 1"));
        }
        // The map and the Map handle share the error slot, so exceptions
        // raised inside the callable can be replayed after the pipeline
        // rejects the NaN placeholder output.
        let slot = Arc::new(Mutex::new(None));
        let inner = Arc::new(CallableMap {
            n,
            name: name.to_string(),
            func,
            last_err: slot.clone(),
        });
        Ok(Map {
            inner,
            callable_err: Some(slot),
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    /// Evaluates the map, validating input and output.
    fn __call__(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let p = BaryPoint::new(x).map_err(to_py_err)?;
        let image = self
            .inner
            .eval(&p)
            .map_err(|e| self.prefer_callable_err(e))?;
        Ok(image.coords().to_vec())
    }

    fn __repr__(&self) -> String {
        format!("Map({})", self.inner.name())
    }
}

fn config_from(
    residual_tol: Option<f64>,
    m_first: Option<u32>,
    m_max: Option<u32>,
) -> SolverConfig {
    let mut cfg = SolverConfig::default();
    if let Some(t) = residual_tol {
        cfg.residual_tol = t;
    }
    if let Some(mf) = m_first {
        cfg.m_first = mf;
    }
    if let Some(mm) = m_max {
        cfg.m_max = mm;
    }
    cfg
}

/// Approximates a fixed point of `map` by mesh refinement. Returns a dict
/// with the point, residuals, per-level trace and certificate checks.
#[pyfunction]
#[pyo3(signature = (map, residual_tol = None, m_first = None, m_max = None))]
fn solve_fixpoint(
    py: Python<'_>,
    map: &Map,
    residual_tol: Option<f64>,
    m_first: Option<u32>,
    m_max: Option<u32>,
) -> PyResult<Py<PyAny>> {
    let cfg = config_from(residual_tol, m_first, m_max);
    match solve(map.inner.as_ref(), &cfg) {
        Ok(rep) => {
            let cauchy = extract_cauchy(&rep.trace);
            to_py_dict(
                py,
                &serde_json::json!({
                    "converged": true,
                    "exact_hit": rep.exact_hit,
                    "point": rep.fixpoint.point,
                    "residual": rep.fixpoint.residual,
                    "witness": rep.fixpoint.witness,
                    "trace": rep.trace,
                    "bounds": rep.bound_reports,
                    "cauchy": cauchy,
                }),
            )
        }
        Err(Error::NotConverged {
            residual,
            m_final,
            best,
        }) => to_py_dict(
            py,
            &serde_json::json!({
                "converged": false,
                "m_final": m_final,
                "point": best.point,
                "residual": best.residual,
                "residual_linf": residual,
            }),
        ),
        Err(e) => Err(map.prefer_callable_err(e)),
    }
}

/// A conforming random labeling as label-file text.
#[pyfunction]
fn random_labels(n: usize, m: u32, seed: u64) -> PyResult<String> {
    let grid = Arc::new(build_grid(n, m).map_err(to_py_err)?);
    Ok(write_label_file(&random_labeling(&grid, seed)))
}

/// Labeling-rule violations of a label file; empty means conforming.
#[pyfunction]
fn validate_labels(text: &str) -> PyResult<Vec<String>> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    Ok(validate_sperner(&lg)
        .iter()
        .map(ToString::to_string)
        .collect())
}

/// Ids of the fully labeled cells of a conforming labeling.
#[pyfunction]
fn fully_labeled_cells(text: &str) -> PyResult<Vec<usize>> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    Ok(enumerate_fully_labeled(&lg)
        .map_err(to_py_err)?
        .fully_labeled)
}

/// Whether the fully-labeled count is odd (it always is, for conforming
/// labelings).
#[pyfunction]
fn parity_is_odd(text: &str) -> PyResult<bool> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    let res = enumerate_fully_labeled(&lg).map_err(to_py_err)?;
    Ok(res.count_parity == Parity::Odd)
}

/// Follows doors from outside to the first fully labeled cell. Returns
/// `(cell_id, path)` where the path lists `None` for the outside node and
/// cell ids otherwise.
#[pyfunction]
fn follow_path(text: &str) -> PyResult<(usize, Vec<Option<usize>>)> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    let (cell, path) = path_follow(&lg).map_err(to_py_err)?;
    let path = path
        .into_iter()
        .map(|node| match node {
            DualNode::Outside => None,
            DualNode::Cell(id) => Some(id),
        })
        .collect();
    Ok((cell, path))
}

/// Runs the reverse construction on a labeling: builds its piecewise-linear
/// map, solves for the fixed point and reports the recovered cell.
#[pyfunction]
#[pyo3(signature = (text, tau = None))]
fn reverse_check(py: Python<'_>, text: &str, tau: Option<f64>) -> PyResult<Py<PyAny>> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    let enumerated = enumerate_fully_labeled(&lg)
        .map_err(to_py_err)?
        .fully_labeled;
    let pl = build_pl_map(lg, tau).map_err(to_py_err)?;
    let rev = fully_labeled_from_fixpoint(&pl, &SolverConfig::default()).map_err(to_py_err)?;
    let agreement = enumerated.contains(&rev.cell_id);
    let exact = pl_fixpoint_exact(&pl, rev.cell_id);
    let exact_residual = match &exact {
        Some(p) => Some(pl.eval_pl(p).map_err(to_py_err)?.linf_dist(p)),
        None => None,
    };
    to_py_dict(
        py,
        &serde_json::json!({
            "agreement": agreement,
            "cell": rev.cell_id,
            "exact_fixpoint": exact,
            "exact_residual_linf": exact_residual,
            "fixpoint": rev.fixpoint,
            "labels": rev.labels,
            "tau": pl.tau(),
            "vertices": rev.vertices,
        }),
    )
}

/// Renders a 2-dimensional labeling to SVG text.
#[pyfunction]
fn render_labels_svg(text: &str) -> PyResult<String> {
    let lg = parse_label_file(text).map_err(to_py_err)?;
    render_svg(&lg).map_err(to_py_err)
}

#[pymodule]
fn sperner_fixpoint_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Map>()?;
    m.add_function(wrap_pyfunction!(solve_fixpoint, m)?)?;
    m.add_function(wrap_pyfunction!(random_labels, m)?)?;
    m.add_function(wrap_pyfunction!(validate_labels, m)?)?;
    m.add_function(wrap_pyfunction!(fully_labeled_cells, m)?)?;
    m.add_function(wrap_pyfunction!(parity_is_odd, m)?)?;
    m.add_function(wrap_pyfunction!(follow_path, m)?)?;
    m.add_function(wrap_pyfunction!(reverse_check, m)?)?;
    m.add_function(wrap_pyfunction!(render_labels_svg, m)?)?;
    Ok(())
}
