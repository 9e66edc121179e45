//! Python bindings for `cdops`.
//!
//! Symbols are built with `Symbol.polynomial` or `Symbol.linear_fractional`;
//! reports cross the boundary as JSON strings alongside a few typed fields.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ::cdops::operators::comp_diff_matrix;
use ::cdops::posinormality::{analyze, AnalysisOptions, PosinormalityReport};
use ::cdops::registry::{registry, reproduce as reproduce_registry};
use ::cdops::run::run;
use ::cdops::scenario::parse_scenario;
use ::cdops::series::{LinearFractionalMap, SymbolSpec};
use ::cdops::{json, Error};

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        3 => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// An analytic symbol `ψ` or `φ` on the unit disk.
#[pyclass(name = "Symbol", frozen, from_py_object)]
#[derive(Clone)]
pub struct Symbol {
    pub spec: SymbolSpec,
}

impl From<SymbolSpec> for Symbol {
    fn from(spec: SymbolSpec) -> Self {
        Self { spec }
    }
}

#[pymethods]
impl Symbol {
    /// Polynomial with coefficients in increasing degree.
    #[staticmethod]
    fn polynomial(coeffs: Vec<Complex64>) -> PyResult<Self> {
        let spec = SymbolSpec::polynomial(coeffs).map_err(to_py)?;
        spec.validate().map_err(to_py)?;
        Ok(Self { spec })
    }

    /// `(a z + b) / (c z + d)`.
    #[staticmethod]
    fn linear_fractional(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> PyResult<Self> {
        let map = LinearFractionalMap::new(a, b, c, d).map_err(to_py)?;
        Ok(Self {
            spec: SymbolSpec::linear_fractional(map),
        })
    }

    fn __call__(&self, z: Complex64) -> Complex64 {
        self.spec.eval(z)
    }

    fn __repr__(&self) -> String {
        match &self.spec {
            SymbolSpec::Polynomial { coeffs } => format!("Symbol.polynomial({} coefficients)", coeffs.len()),
            SymbolSpec::LinearFractional(map) => {
                let (a, b, c, d) = map.params();
                format!("Symbol.linear_fractional({a}, {b}, {c}, {d})")
            }
        }
    }
}

/// Posinormality of `D_{ψ,φ,n}` and of its adjoint at one truncation.
#[pyclass(name = "Analysis", frozen, get_all)]
pub struct Analysis {
    pub posinormality: String,
    pub coposinormality: String,
    pub lambda_estimate: Option<f64>,
    pub max_range_residual: Option<f64>,
    pub adjoint_lambda_estimate: Option<f64>,
    pub adjoint_max_range_residual: Option<f64>,
    pub json: String,
}

#[pymethods]
impl Analysis {
    fn __repr__(&self) -> String {
        format!(
            "Analysis(posinormality={}, coposinormality={})",
            self.posinormality, self.coposinormality
        )
    }
}

fn verdict(report: &PosinormalityReport) -> String {
    report.verdict.to_string()
}

/// Runs both analyses without the doubling re-run unless `doubling` is set.
pub fn analysis(psi: &Symbol, phi: &Symbol, n: usize, truncation: usize, doubling: bool) -> ::cdops::Result<Analysis> {
    let opts = AnalysisOptions {
        doubling,
        ..Default::default()
    };
    let a = analyze(&psi.spec, &phi.spec, n, truncation, &opts)?;
    Ok(Analysis {
        posinormality: verdict(&a.posinormality),
        coposinormality: verdict(&a.coposinormality),
        lambda_estimate: a.posinormality.lambda_estimate,
        max_range_residual: a.posinormality.max_range_residual,
        adjoint_lambda_estimate: a.coposinormality.lambda_estimate,
        adjoint_max_range_residual: a.coposinormality.max_range_residual,
        json: String::from_utf8(json::to_vec_pretty(&a)?).expect("JSON is UTF-8"),
    })
}

#[pyfunction(name = "analyze")]
#[pyo3(signature = (psi, phi, n, truncation = 128, doubling = false))]
fn analyze_py(py: Python<'_>, psi: Symbol, phi: Symbol, n: usize, truncation: usize, doubling: bool) -> PyResult<Analysis> {
    py.detach(|| analysis(&psi, &phi, n, truncation, doubling)).map_err(to_py)
}

/// Finite section as a list of rows.
#[pyfunction]
#[pyo3(signature = (psi, phi, n, truncation = 128))]
fn operator_matrix(psi: &Symbol, phi: &Symbol, n: usize, truncation: usize) -> PyResult<Vec<Vec<Complex64>>> {
    let t = comp_diff_matrix(&psi.spec, &phi.spec, n, truncation).map_err(to_py)?;
    Ok(t.entries().row_iter().map(|r| r.iter().copied().collect()).collect())
}

/// Scenario JSON in, full report JSON out, plus whether every expectation held.
pub fn run_json(text: &str) -> ::cdops::Result<(String, bool)> {
    let report = run(&parse_scenario(text.as_bytes())?)?;
    let bytes = json::to_vec_pretty(&report)?;
    Ok((String::from_utf8(bytes).expect("JSON is UTF-8"), report.all_expectations_met()))
}

#[pyfunction]
fn run_scenario(py: Python<'_>, scenario_json: String) -> PyResult<(String, bool)> {
    py.detach(|| run_json(&scenario_json)).map_err(to_py)
}

/// Built-in registry; returns the table and whether every row passed.
#[pyfunction]
#[pyo3(signature = (only = None))]
fn reproduce(py: Python<'_>, only: Option<String>) -> PyResult<(String, bool)> {
    py.detach(|| reproduce_registry(&registry(), only.as_deref()))
        .map(|rep| (rep.table(), rep.all_passed()))
        .map_err(to_py)
}

#[pymodule]
#[pyo3(name = "cdops")]
pub fn cdops_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Symbol>()?;
    m.add_class::<Analysis>()?;
    m.add_function(wrap_pyfunction!(analyze_py, m)?)?;
    m.add_function(wrap_pyfunction!(operator_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(reproduce, m)?)?;
    Ok(())
}
