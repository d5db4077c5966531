//! Python bindings. Structured results cross the boundary as canonical JSON
//! text; errors become `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use spinc_core::catalog::{chart_scenario, ScenarioParams};
use spinc_core::error::Error;
use spinc_core::lattice::{lattice_spectrum, LatticeOptions};
use spinc_core::report::canonical_json;
use spinc_core::runner::{self, RunConfig};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Runs a JSON config and returns `(all_pass, canonical report text)`.
#[pyfunction]
#[pyo3(signature = (config, with_timing = true))]
fn run(py: Python<'_>, config: &str, with_timing: bool) -> PyResult<(bool, String)> {
    let cfg = RunConfig::from_json(config).map_err(py_err)?;
    py.detach(|| {
        let report = runner::run(&cfg)?;
        Ok((report.all_pass(), report.canonical(with_timing)?))
    })
    .map_err(py_err)
}

#[pyfunction]
fn list_scenarios() -> PyResult<String> {
    let rows = runner::list_scenarios().map_err(py_err)?;
    Ok(canonical_json(&serde_json::to_value(rows).map_err(|e| py_err(e.into()))?))
}

/// Worst Clifford identity defects for signature `(r, s)`, as JSON.
#[pyfunction]
fn clifford_residuals(r: usize, s: usize) -> PyResult<String> {
    let res = spinc_core::clifford::suite_residuals(r, s).map_err(py_err)?;
    Ok(canonical_json(&serde_json::to_value(res).map_err(|e| py_err(e.into()))?))
}

/// Lowest `eigs` lattice Dirac eigenvalues on an `grid^n` lattice, ascending.
#[pyfunction]
#[pyo3(signature = (scenario, grid, eigs = 8, flux = None, wilson = 1.0))]
fn spectrum(py: Python<'_>, scenario: &str, grid: usize, eigs: usize, flux: Option<f64>, wilson: f64) -> PyResult<Vec<f64>> {
    let params = ScenarioParams { flux, ..Default::default() };
    py.detach(|| {
        let sc = chart_scenario(scenario, &params)?;
        let dims = vec![grid; sc.dim()];
        let (_, res) = lattice_spectrum(&sc, &dims, LatticeOptions { wilson }, Some(eigs), false, false)?;
        Ok(res.eigenvalues)
    })
    .map_err(py_err)
}

/// `c_n = 2√⌊n/2⌋`.
#[pyfunction]
fn c_n(n: usize) -> f64 {
    spinc_core::varbounds::c_n(n)
}

#[pymodule]
fn spinc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("VERIFY_CHECKS", runner::VERIFY_CHECKS.to_vec())?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(clifford_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(c_n, m)?)?;
    Ok(())
}
