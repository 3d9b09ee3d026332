use num_complex::Complex64 as C64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use npduet::analysis::{self, SweepTemplate};
use npduet::bie_oracle::{self, NodeLayout, NystromSystem};
use npduet::cli::config::parse_source;
use npduet::geometry;
use npduet::np_spectrum::{self, Conductivity, Parity, SpectralMode};
use npduet::spectral_solver::{self, SolveOptions};
use npduet::Error;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn conductivity(k: &Bound<'_, PyAny>) -> PyResult<Conductivity> {
    if let Ok(v) = k.extract::<f64>() {
        return Conductivity::from_f64(v).map_err(py_err);
    }
    let s: String = k.extract()?;
    Conductivity::parse(&s).map_err(py_err)
}

/// Two disjoint disks of radii `r1`, `r2` at distance `eps`.
#[pyclass(name = "DiskPair", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDiskPair(geometry::DiskPair);

#[pymethods]
impl PyDiskPair {
    #[new]
    fn new(r1: f64, r2: f64, eps: f64) -> PyResult<Self> {
        geometry::DiskPair::new(r1, r2, eps)
            .map(PyDiskPair)
            .map_err(py_err)
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta
    }

    #[getter]
    fn rho(&self) -> f64 {
        self.0.rho
    }

    #[getter]
    fn r_star(&self) -> f64 {
        self.0.r_star
    }

    #[getter]
    fn concentric_radii(&self) -> (f64, f64) {
        (self.0.conc_r1, self.0.conc_r2)
    }

    #[getter]
    fn centers(&self) -> (f64, f64) {
        (self.0.c1, self.0.c2)
    }

    fn forward_map(&self, x: f64, y: f64) -> PyResult<(f64, f64)> {
        let z = self.0.forward_map(C64::new(x, y)).map_err(py_err)?;
        Ok((z.re, z.im))
    }

    fn zone(&self, x: f64, y: f64) -> &'static str {
        self.0.zone_at(C64::new(x, y)).as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "DiskPair(r1={}, r2={}, eps={})",
            self.0.r1, self.0.r2, self.0.eps
        )
    }
}

/// A solved field; `evaluate` returns `(zone, u, ux, uy, uxx, uxy, uyy)`.
#[pyclass(name = "FieldSolution", frozen)]
pub struct PyFieldSolution(spectral_solver::FieldSolution);

#[pymethods]
impl PyFieldSolution {
    fn evaluate(&self, x: f64, y: f64) -> PyResult<(&'static str, f64, f64, f64, f64, f64, f64)> {
        let e = self.0.evaluate(C64::new(x, y)).map_err(py_err)?;
        let j = e.jet;
        Ok((
            e.zone.as_str(),
            j.value,
            j.grad[0],
            j.grad[1],
            j.hess[0],
            j.hess[1],
            j.hess[2],
        ))
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.0.n_modes()
    }

    #[getter]
    fn lambdas(&self) -> (f64, f64) {
        (self.0.lambda1, self.0.lambda2)
    }
}

#[pyfunction]
#[pyo3(signature = (geometry, k1, k2, source, nmax = 256, tol = 1e-10))]
fn solve(
    geometry: &PyDiskPair,
    k1: &Bound<'_, PyAny>,
    k2: &Bound<'_, PyAny>,
    source: &str,
    nmax: usize,
    tol: f64,
) -> PyResult<PyFieldSolution> {
    let mut opts = SolveOptions {
        tol,
        ..SolveOptions::default()
    };
    opts.truncation.n_start = nmax;
    let src = parse_source(source).map_err(py_err)?;
    spectral_solver::solve_field(
        &geometry.0,
        conductivity(k1)?,
        conductivity(k2)?,
        &src,
        &opts,
    )
    .map(PyFieldSolution)
    .map_err(py_err)
}

/// `(n, parity, eigenvalue, mode_norm)` for `n = 1..count`, both parities.
#[pyfunction]
fn spectrum(geometry: &PyDiskPair, count: i64) -> PyResult<Vec<(i64, &'static str, f64, f64)>> {
    let g = &geometry.0;
    let mut out = Vec::new();
    for n in 1..=count {
        for p in [Parity::Plus, Parity::Minus] {
            let m = SpectralMode::new(g, n, p).map_err(py_err)?;
            out.push((
                n,
                p.symbol(),
                m.eigenvalue_twodisks,
                np_spectrum::mode_norm(g, n, p).map_err(py_err)?,
            ));
        }
    }
    Ok(out)
}

/// Eigenvalues of the Nyström NP matrix as `(re, im, multiplicity)`,
/// largest modulus first.
#[pyfunction]
#[pyo3(signature = (geometry, nodes = 256, count = 20, tol = 1e-9))]
fn nystrom_spectrum(
    geometry: &PyDiskPair,
    nodes: usize,
    count: usize,
    tol: f64,
) -> PyResult<Vec<(f64, f64, usize)>> {
    let sys = NystromSystem::assemble(&geometry.0, nodes, NodeLayout::Bipolar).map_err(py_err)?;
    Ok(bie_oracle::oracle_spectrum(&sys, count, tol)
        .into_iter()
        .map(|c| (c.value.re, c.value.im, c.multiplicity))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (geometry, nodes = 256))]
fn symmetrization_residual(geometry: &PyDiskPair, nodes: usize) -> PyResult<f64> {
    let sys = NystromSystem::assemble(&geometry.0, nodes, NodeLayout::Bipolar).map_err(py_err)?;
    Ok(bie_oracle::symmetrization_residual(&sys))
}

/// One row of a sweep.
#[pyclass(name = "SweepRecord", frozen, get_all)]
pub struct PySweepRecord {
    eps: f64,
    rho: f64,
    r_star: f64,
    gap_max: f64,
    bound_value: f64,
    grad_max: f64,
    hess_max: f64,
    n_modes: usize,
    error: Option<String>,
}

#[pyfunction]
#[pyo3(signature = (r1, r2, k1, k2, source, eps_list, order = 1))]
fn sweep(
    r1: f64,
    r2: f64,
    k1: &Bound<'_, PyAny>,
    k2: &Bound<'_, PyAny>,
    source: &str,
    eps_list: Vec<f64>,
    order: u32,
) -> PyResult<Vec<PySweepRecord>> {
    let t = SweepTemplate {
        r1,
        r2,
        k1: conductivity(k1)?,
        k2: conductivity(k2)?,
        source: parse_source(source).map_err(py_err)?,
        order,
        options: SolveOptions::default(),
    };
    Ok(analysis::sweep(&t, &eps_list)
        .into_iter()
        .map(|r| PySweepRecord {
            eps: r.eps,
            rho: r.rho,
            r_star: r.r_star,
            gap_max: r.gap_max,
            bound_value: r.bound_value,
            grad_max: r.norms[0],
            hess_max: r.norms[1],
            n_modes: r.n_modes,
            error: r.error,
        })
        .collect())
}

/// Least-squares slope and `r²` of `ln y` against `ln x`.
#[pyfunction]
fn fit_loglog(points: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    analysis::fit_loglog(&points).map_err(py_err)
}

/// Runs the command-line front end; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = npduet::cli::run_with(
        std::iter::once("npduet".to_string()).chain(args),
        &mut out,
        &mut err,
    );
    (
        code,
        String::from_utf8_lossy(&out).into_owned(),
        String::from_utf8_lossy(&err).into_owned(),
    )
}

#[pymodule]
fn npduet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDiskPair>()?;
    m.add_class::<PyFieldSolution>()?;
    m.add_class::<PySweepRecord>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(nystrom_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(symmetrization_residual, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(fit_loglog, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
