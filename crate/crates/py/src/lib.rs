//! Python bindings: dense spectra, preset matrices and the CLI commands as
//! JSON-returning functions.

use nhspec::cli::{self, CliError, Command, Common};
use nhspec::fermions::{self, FarImpurity};
use nhspec::linalg::CMat;
use nhspec::spectra;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: CliError) -> PyErr {
    match e {
        CliError::Input(msg) => PyValueError::new_err(msg),
        CliError::Compute(msg) => PyRuntimeError::new_err(msg),
    }
}

fn param_strings(params: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<String>> {
    let Some(params) = params else { return Ok(Vec::new()) };
    let json = params.py().import("json")?;
    let mut out = Vec::new();
    for (k, v) in params.iter() {
        let key: String = k.extract()?;
        let text: String = json.call_method1("dumps", (v,))?.extract()?;
        out.push(format!("{key}={text}"));
    }
    Ok(out)
}

fn common(preset: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Common> {
    Ok(Common {
        model: None,
        preset: Some(preset.to_string()),
        params: param_strings(params)?,
        tol: None,
        resolution: None,
        seed: None,
        out: None,
    })
}

/// Eigenvalues of a dense complex matrix, with near-coincident clusters merged.
#[pyfunction]
fn eigenvalues(matrix: Vec<Vec<Complex64>>) -> PyResult<Vec<Complex64>> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    let h = CMat::from_fn(n, n, |i, j| matrix[i][j]);
    let report = spectra::eig(&h, spectra::CLUSTER_TOL).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(report.multiset())
}

/// Dense Hamiltonian of a named preset.
#[pyfunction]
#[pyo3(signature = (preset, params=None))]
fn preset_matrix(preset: &str, params: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<Vec<Complex64>>> {
    let req = cli::build_request(&common(preset, params)?).map_err(py_err)?;
    let h = cli::model_matrix(&req).map_err(py_err)?;
    Ok((0..h.nrows()).map(|i| (0..h.ncols()).map(|j| h[(i, j)]).collect()).collect())
}

/// Runs a CLI command and returns its primary output text.
#[pyfunction]
#[pyo3(signature = (command, preset, params=None, tol=None, resolution=None, seed=None))]
fn run(
    command: &str,
    preset: &str,
    params: Option<&Bound<'_, PyDict>>,
    tol: Option<f64>,
    resolution: Option<usize>,
    seed: Option<u64>,
) -> PyResult<String> {
    let mut c = common(preset, params)?;
    c.tol = tol;
    c.resolution = resolution;
    c.seed = seed;
    let cmd = match command {
        "spectrum" => Command::Spectrum(c),
        "ep-contour" => Command::EpContour(c),
        "metric" => Command::Metric(c),
        "locality" => Command::Locality(c),
        "inclusion" => Command::Inclusion(c),
        "puiseux" => Command::Puiseux(c),
        other => return Err(PyValueError::new_err(format!("unknown command {other}"))),
    };
    cli::render(&cmd).map(|(text, _, _)| text).map_err(py_err)
}

/// Whether a subsystem (1-based sites) of the far-impurity chain carries
/// extensively local observables.
#[pyfunction]
#[pyo3(signature = (n, delta, gamma, sites, t=1.0))]
fn far_impurity_local(n: usize, delta: f64, gamma: f64, sites: Vec<usize>, t: f64) -> PyResult<bool> {
    let model = FarImpurity { n, delta, gamma, t, unit_circle: false };
    let m = model.metric().map_err(|e| PyValueError::new_err(e.to_string()))?;
    fermions::extensively_local(&m, &sites).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn nhspec_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eigenvalues, m)?)?;
    m.add_function(wrap_pyfunction!(preset_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(far_impurity_local, m)?)?;
    Ok(())
}
