//! Python module `torushu`: lattices, point sets, generators and the
//! variance / worst-case-error operations.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ::torushu as core;
use core::{Error, Truncation, VarianceEstimate};

fn py_err(e: Error) -> PyErr {
    if e.is_numeric_cap() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// `W` wins over `tol`; with neither, `default`.
fn truncation(tol: Option<f64>, w: Option<f64>, default: Truncation) -> Truncation {
    match (w, tol) {
        (Some(w), _) => Truncation::Radius(w),
        (None, Some(t)) => Truncation::Tolerance(t),
        _ => default,
    }
}

fn estimate_dict<'py>(py: Python<'py>, e: &VarianceEstimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", e.method.name())?;
    d.set_item("value", e.value)?;
    d.set_item("error_bound", e.error_bound)?;
    d.set_item("truncation_radius", e.truncation_radius)?;
    d.set_item("samples", e.samples)?;
    Ok(d)
}

#[pyclass(name = "Lattice", module = "torushu", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: core::Lattice,
}

#[pymethods]
impl PyLattice {
    /// Normalizes the row-major basis (columns are basis vectors) to covolume 1.
    #[new]
    fn new(dim: usize, basis: Vec<f64>) -> PyResult<Self> {
        Ok(PyLattice {
            inner: core::normalize_lattice(dim, &basis).py()?,
        })
    }

    #[staticmethod]
    fn identity(dim: usize) -> PyResult<Self> {
        Ok(PyLattice {
            inner: core::Lattice::identity(dim).py()?,
        })
    }

    #[staticmethod]
    fn hexagonal() -> Self {
        PyLattice {
            inner: core::Lattice::hexagonal(),
        }
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(PyLattice {
            inner: core::Lattice::preset(name).py()?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn basis(&self) -> Vec<f64> {
        self.inner.basis().to_vec()
    }

    #[getter]
    fn covolume(&self) -> f64 {
        self.inner.covolume()
    }

    fn shortest_vector_length(&self) -> f64 {
        self.inner.shortest_vector_length()
    }

    fn half_diameter(&self) -> f64 {
        self.inner.half_diameter()
    }

    /// Dual vectors with `|w| <= max_norm` as `(index, norm)` pairs.
    fn enumerate_dual(&self, max_norm: f64) -> PyResult<Vec<(Vec<i64>, f64)>> {
        Ok(core::enumerate_dual(&self.inner, max_norm)
            .py()?
            .into_iter()
            .map(|w| (w.index, w.norm))
            .collect())
    }

    fn __repr__(&self) -> String {
        format!("Lattice(dim={}, basis={:?})", self.inner.dim(), self.inner.basis())
    }
}

#[pyclass(name = "PointSet", module = "torushu", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPointSet {
    inner: core::PointSet,
}

#[pymethods]
impl PyPointSet {
    /// Rows of fractional coordinates, reduced mod 1.
    #[new]
    fn new(lattice: &PyLattice, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyPointSet {
            inner: core::PointSet::from_rows(lattice.inner.clone(), &rows, core::Provenance::new("python", None)).py()?,
        })
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyPointSet {
            inner: core::io::read_pointset_csv(text.as_bytes()).py()?,
        })
    }

    fn to_csv(&self) -> String {
        core::io::pointset_to_csv_string(&self.inner)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn lattice(&self) -> PyLattice {
        PyLattice {
            inner: self.inner.lattice().clone(),
        }
    }

    #[getter]
    fn generator(&self) -> String {
        self.inner.provenance().generator.clone()
    }

    #[getter]
    fn seed(&self) -> Option<u64> {
        self.inner.provenance().seed
    }

    /// Fractional coordinates as a list of rows.
    fn coords(&self) -> Vec<Vec<f64>> {
        self.inner.points().map(|p| p.to_vec()).collect()
    }

    fn translated(&self, shift: Vec<f64>) -> PyResult<Self> {
        Ok(PyPointSet {
            inner: self.inner.translated(&shift).py()?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "PointSet(N={}, dim={}, generator={:?})",
            self.inner.len(),
            self.inner.dim(),
            self.inner.provenance().generator
        )
    }
}

fn wrap(x: core::PointSet) -> PyPointSet {
    PyPointSet { inner: x }
}

#[pyfunction]
#[pyo3(signature = (lattice, n, seed, stream=0))]
fn gen_uniform(lattice: &PyLattice, n: usize, seed: u64, stream: u64) -> PyResult<PyPointSet> {
    Ok(wrap(core::gen_uniform(&lattice.inner, n, core::RngSpec::new(seed, stream)).py()?))
}

#[pyfunction]
#[pyo3(signature = (lattice, m, seed, stream=0))]
fn gen_jittered(lattice: &PyLattice, m: usize, seed: u64, stream: u64) -> PyResult<PyPointSet> {
    let p = core::make_partition(&lattice.inner, m).py()?;
    Ok(wrap(core::gen_jittered(&p, core::RngSpec::new(seed, stream)).py()?))
}

#[pyfunction]
fn gen_sublattice(lattice: &PyLattice, m: usize) -> PyResult<PyPointSet> {
    Ok(wrap(core::gen_sublattice(&lattice.inner, m).py()?))
}

#[pyfunction]
#[pyo3(signature = (lattice, n, seed, stream=0))]
fn gen_dpp(lattice: &PyLattice, n: usize, seed: u64, stream: u64) -> PyResult<PyPointSet> {
    let s = core::choose_spectrum(&lattice.inner, n).py()?;
    Ok(wrap(core::gen_dpp(&s, core::RngSpec::new(seed, stream)).py()?))
}

/// Spectral variance; `W` fixes the dual radius, otherwise `tol` (default
/// 1e-6) is certified.
#[pyfunction]
#[pyo3(signature = (points, r, tol=None, w=None))]
fn variance_spectral<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    r: f64,
    tol: Option<f64>,
    w: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let t = truncation(tol, w, Truncation::Tolerance(1e-6));
    let e = py.detach(|| core::variance_spectral_with(&points.inner, r, t)).py()?;
    estimate_dict(py, &e)
}

#[pyfunction]
fn variance_realspace<'py>(py: Python<'py>, points: &PyPointSet, r: f64) -> PyResult<Bound<'py, PyDict>> {
    let e = py.detach(|| core::variance_realspace(&points.inner, r)).py()?;
    estimate_dict(py, &e)
}

#[pyfunction]
#[pyo3(signature = (points, r, samples, seed, stream=0))]
fn variance_montecarlo<'py>(
    py: Python<'py>,
    points: &PyPointSet,
    r: f64,
    samples: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = core::RngSpec::new(seed, stream);
    let e = py.detach(|| core::variance_montecarlo(&points.inner, r, samples, spec)).py()?;
    estimate_dict(py, &e)
}

/// Expected DPP variance for the first `n` dual vectors; `closed=True` uses
/// the exact finite form.
#[pyfunction]
#[pyo3(signature = (lattice, n, r, tol=None, w=None, closed=false))]
fn expected_variance_dpp<'py>(
    py: Python<'py>,
    lattice: &PyLattice,
    n: usize,
    r: f64,
    tol: Option<f64>,
    w: Option<f64>,
    closed: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let s = core::choose_spectrum(&lattice.inner, n).py()?;
    let e = if closed {
        core::expected_variance_dpp_closed(&s, r)
    } else {
        core::expected_variance_dpp_with(&s, r, truncation(tol, w, Truncation::Tolerance(1e-6)))
    }
    .py()?;
    estimate_dict(py, &e)
}

#[pyfunction]
#[pyo3(signature = (lattice, m, r, samples_per_cell, seed, stream=0))]
fn expected_variance_jittered<'py>(
    py: Python<'py>,
    lattice: &PyLattice,
    m: usize,
    r: f64,
    samples_per_cell: usize,
    seed: u64,
    stream: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let p = core::make_partition(&lattice.inner, m).py()?;
    let spec = core::RngSpec::new(seed, stream);
    let e = py.detach(|| core::expected_variance_jittered(&p, r, samples_per_cell, spec)).py()?;
    estimate_dict(py, &e)
}

/// Worst-case error with its tail bound: `(wce, tail_bound, truncation_radius)`.
#[pyfunction]
#[pyo3(signature = (points, alpha, tol=None, w=None))]
fn wce(py: Python<'_>, points: &PyPointSet, alpha: f64, tol: Option<f64>, w: Option<f64>) -> PyResult<(f64, f64, f64)> {
    let t = truncation(tol, w, Truncation::Tolerance(core::qmc::DEFAULT_WCE_TOL));
    let k = core::KernelSpec::with_truncation(points.inner.lattice(), alpha, t).py()?;
    let r = py.detach(|| core::wce_detailed(&points.inner, &k)).py()?;
    Ok((r.wce, r.tail_bound, r.truncation_radius))
}

#[pyfunction]
#[pyo3(signature = (points, quad_tol=1e-8))]
fn l2_discrepancy(py: Python<'_>, points: &PyPointSet, quad_tol: f64) -> PyResult<f64> {
    py.detach(|| core::l2_discrepancy(&points.inner, quad_tol)).py()
}

#[pyfunction]
fn bessel_j(nu: f64, z: f64) -> PyResult<f64> {
    core::bessel_j(core::BesselOrder::new(nu).py()?, z).py()
}

#[pyfunction]
fn ball_volume(d: usize, r: f64) -> f64 {
    core::ball_volume(d, r)
}

#[pyfunction]
fn lens_volume(d: usize, r: f64, t: f64) -> f64 {
    core::lens_volume(d, r, t)
}

/// Fits `rows` of `(N, R or t, variance)`; `regime` is large, small or
/// threshold. Returns `(exponent, constant, r_squared, verdict)`.
#[pyfunction]
#[pyo3(signature = (rows, regime, dim, delta=0.05))]
fn fit_regime(rows: Vec<(usize, f64, f64)>, regime: &str, dim: usize, delta: f64) -> PyResult<(f64, f64, f64, String)> {
    let regime = match regime {
        "large" => core::Regime::Large,
        "small" => core::Regime::Small,
        "threshold" => core::Regime::Threshold,
        other => return Err(PyValueError::new_err(format!("unknown regime '{other}'"))),
    };
    let rows: Vec<core::RegimeRow> = rows
        .into_iter()
        .map(|(n, r_or_t, variance)| core::RegimeRow { n, r_or_t, variance })
        .collect();
    let rep = core::fit_regime_with(&rows, regime, dim, delta).py()?;
    let verdict = format!("{:?}", rep.verdict).to_lowercase();
    Ok((rep.fitted_exponent, rep.fitted_constant, rep.r_squared, verdict))
}

#[pymodule]
fn torushu(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", core::VERSION)?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyPointSet>()?;
    m.add_function(wrap_pyfunction!(gen_uniform, m)?)?;
    m.add_function(wrap_pyfunction!(gen_jittered, m)?)?;
    m.add_function(wrap_pyfunction!(gen_sublattice, m)?)?;
    m.add_function(wrap_pyfunction!(gen_dpp, m)?)?;
    m.add_function(wrap_pyfunction!(variance_spectral, m)?)?;
    m.add_function(wrap_pyfunction!(variance_realspace, m)?)?;
    m.add_function(wrap_pyfunction!(variance_montecarlo, m)?)?;
    m.add_function(wrap_pyfunction!(expected_variance_dpp, m)?)?;
    m.add_function(wrap_pyfunction!(expected_variance_jittered, m)?)?;
    m.add_function(wrap_pyfunction!(wce, m)?)?;
    m.add_function(wrap_pyfunction!(l2_discrepancy, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(ball_volume, m)?)?;
    m.add_function(wrap_pyfunction!(lens_volume, m)?)?;
    m.add_function(wrap_pyfunction!(fit_regime, m)?)?;
    Ok(())
}
