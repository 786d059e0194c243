//! Python bindings for the core crate: zero density, Kac-Rice predictions,
//! covariance evaluation, and Monte Carlo sampling.

use nodalkit::covariance as cov;
use nodalkit::covariance::Branch;
use nodalkit::density;
use nodalkit::error::Error;
use nodalkit::kac_rice;
use nodalkit::nodal;
use nodalkit::sampler::{self, GridSpec, Mode};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    match mode {
        "boundary-adapted" => Ok(Mode::BoundaryAdapted),
        "full-sphere" => Ok(Mode::FullSphere),
        other => Err(PyValueError::new_err(format!("unknown mode '{other}'"))),
    }
}

/// Exact zero density K1(psi) at degree ell.
#[pyfunction]
fn k1_exact(ell: u32, psi: f64) -> PyResult<f64> {
    density::k1_exact(ell, psi).map_err(err)
}

/// Four-term far-field asymptotic of the zero density.
#[pyfunction]
fn k1_far_asymptotic(ell: u32, psi: f64) -> f64 {
    density::k1_far_asymptotic(ell, psi)
}

/// Near-boundary limiting law ell/(2 pi).
#[pyfunction]
fn k1_near_asymptotic(ell: u32, psi: f64) -> f64 {
    density::k1_near_asymptotic(ell, psi)
}

/// Zero density of the planar boundary-adapted model at height x2.
#[pyfunction]
fn planar_berry_density(x2: f64) -> PyResult<f64> {
    density::planar_berry_density(x2).map_err(err)
}

/// Covariance kernel between two hemisphere points (theta, phi).
#[pyfunction]
fn covariance(ell: u32, x: (f64, f64), y: (f64, f64)) -> PyResult<f64> {
    cov::covariance(ell, x, y).map_err(err)
}

/// Field variance at scaled distance psi from the equator.
#[pyfunction]
fn field_variance(ell: u32, psi: f64) -> PyResult<f64> {
    cov::field_variance(ell, psi).map_err(err)
}

/// Conditional gradient covariance at scaled distance psi; returns a dict
/// with omega11, omega22, s11, s22, variance.
#[pyfunction]
fn conditional_covariance<'py>(
    py: Python<'py>,
    ell: u32,
    psi: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cc = cov::conditional_covariance_at_psi(ell, psi, Branch::Auto).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("omega11", cc.omega[0])?;
    d.set_item("omega22", cc.omega[1])?;
    d.set_item("s11", cc.s11)?;
    d.set_item("s22", cc.s22)?;
    d.set_item("variance", cc.variance)?;
    Ok(d)
}

/// Kac-Rice expected nodal length prediction; returns a dict with total,
/// leading, deficiency, and the three region contributions.
#[pyfunction]
fn expected_nodal_length<'py>(py: Python<'py>, ell: u32) -> PyResult<Bound<'py, PyDict>> {
    let p = kac_rice::expected_nodal_length(ell).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("degree", p.degree)?;
    d.set_item("total", p.total)?;
    d.set_item("leading", p.leading)?;
    d.set_item("deficiency", p.deficiency)?;
    d.set_item("regions", p.region_contributions.to_vec())?;
    Ok(d)
}

/// Least-squares slope and intercept of the deficiency against log(ell).
#[pyfunction]
fn deficiency_fit(degrees: Vec<u32>) -> PyResult<(f64, f64, Vec<f64>)> {
    let fit = kac_rice::deficiency_fit(&degrees).map_err(err)?;
    Ok((fit.slope, fit.intercept, fit.residuals))
}

/// Full-sphere expected nodal length sqrt(2) pi sqrt(ell(ell+1)).
#[pyfunction]
fn berard_baseline(ell: u32) -> f64 {
    kac_rice::berard_baseline(ell)
}

/// Synthesizes one field replicate on an (n_theta x n_phi) grid and
/// returns its values row-major as a flat list.
#[pyfunction]
#[pyo3(signature = (ell, mode, n_theta, n_phi, seed, replicate = 0))]
fn sample_field(
    ell: u32,
    mode: &str,
    n_theta: usize,
    n_phi: usize,
    seed: u64,
    replicate: u64,
) -> PyResult<Vec<f64>> {
    let mode = parse_mode(mode)?;
    let grid = match mode {
        Mode::BoundaryAdapted => GridSpec::hemisphere(n_theta, n_phi),
        Mode::FullSphere => GridSpec::full_sphere(n_theta, n_phi),
    };
    let coeffs = sampler::sample_coefficients_replicate(ell, mode, seed, replicate).map_err(err)?;
    Ok(sampler::synthesize_field(&coeffs, grid).map_err(err)?.values)
}

/// Monte Carlo nodal length over replicates; returns a dict with mean,
/// stderr, the per-replicate values, and the equator cut colatitude.
#[pyfunction]
#[pyo3(signature = (ell, mode, replicates, n_theta, n_phi, seed))]
fn monte_carlo_nodal_length<'py>(
    py: Python<'py>,
    ell: u32,
    mode: &str,
    replicates: u64,
    n_theta: usize,
    n_phi: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = parse_mode(mode)?;
    let grid = match mode {
        Mode::BoundaryAdapted => GridSpec::hemisphere(n_theta, n_phi),
        Mode::FullSphere => GridSpec::full_sphere(n_theta, n_phi),
    };
    let r = nodal::monte_carlo_nodal_length(ell, mode, replicates, grid, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mean", r.mean)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("values", r.values)?;
    d.set_item("theta_cut", r.theta_cut)?;
    Ok(d)
}

#[pymodule]
fn nodalkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(k1_exact, m)?)?;
    m.add_function(wrap_pyfunction!(k1_far_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(k1_near_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(planar_berry_density, m)?)?;
    m.add_function(wrap_pyfunction!(covariance, m)?)?;
    m.add_function(wrap_pyfunction!(field_variance, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(expected_nodal_length, m)?)?;
    m.add_function(wrap_pyfunction!(deficiency_fit, m)?)?;
    m.add_function(wrap_pyfunction!(berard_baseline, m)?)?;
    m.add_function(wrap_pyfunction!(sample_field, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_nodal_length, m)?)?;
    Ok(())
}
