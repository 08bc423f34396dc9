//! Python bindings for `nonclass`.

use nonclass::analysis::{analyze_distribution, parse_families, AnalysisConfig, Pipeline};
use nonclass::criteria::{CriterionResult, Registry};
use nonclass::data::{DistributionKind, JointDistribution, JointHistogram, Matrix};
use nonclass::moments::{factorial_moments, stirling_matrices, MomentTable};
use nonclass::ncd::{ncd_with, NcdOptions};
use nonclass::reconstruct::{calibrate as calibrate_core, em_reconstruct as em_core, CalibrationOptions, CalibrationParams, EmOptions};
use nonclass::sim::Scenario as CoreScenario;
use nonclass::uncertainty::bootstrap as bootstrap_core;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: nonclass::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn dense<T: Copy + Default>(rows: Vec<Vec<T>>) -> PyResult<Matrix<T>> {
    Matrix::from_rows(&rows).map_err(err)
}

#[pyclass(name = "JointDistribution", module = "nonclass_py", frozen)]
pub struct PyDistribution {
    inner: JointDistribution,
}

#[pymethods]
impl PyDistribution {
    /// `probs[n_s][n_i]`; `kind` is "photon_number" or "photocount".
    #[new]
    #[pyo3(signature = (probs, kind = "photon_number"))]
    fn new(probs: Vec<Vec<f64>>, kind: &str) -> PyResult<Self> {
        let kind = match kind {
            "photon_number" => DistributionKind::PhotonNumber,
            "photocount" => DistributionKind::Photocount,
            other => return Err(PyValueError::new_err(format!("unknown distribution kind {other:?}"))),
        };
        let inner = JointDistribution::new(dense(probs)?, kind).map_err(err)?;
        Ok(PyDistribution { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        JointDistribution::parse_json(text).map(|inner| PyDistribution { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn probs(&self) -> Vec<Vec<f64>> {
        self.inner.probs().to_rows()
    }

    #[getter]
    fn kind(&self) -> &'static str {
        match self.inner.kind() {
            DistributionKind::PhotonNumber => "photon_number",
            DistributionKind::Photocount => "photocount",
        }
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn means(&self) -> (f64, f64) {
        self.inner.means()
    }

    fn total_variation(&self, other: &PyDistribution) -> f64 {
        self.inner.total_variation(&other.inner)
    }

    /// Factorial (intensity) moments `W[k][l]` for `k + l <= order`.
    #[pyo3(signature = (order = 5))]
    fn factorial_moments(&self, order: usize) -> PyResult<Vec<Vec<f64>>> {
        factorial_moments(&self.inner, order).map(|t| t.rows().to_vec()).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("JointDistribution(kind={:?}, shape={:?})", self.kind(), self.shape())
    }
}

#[pyclass(name = "JointHistogram", module = "nonclass_py", frozen)]
pub struct PyHistogram {
    inner: JointHistogram,
}

#[pymethods]
impl PyHistogram {
    #[new]
    #[pyo3(signature = (counts, frames = None))]
    fn new(counts: Vec<Vec<u64>>, frames: Option<u64>) -> PyResult<Self> {
        let counts = dense(counts)?;
        let frames = frames.unwrap_or_else(|| counts.as_slice().iter().sum());
        JointHistogram::new(counts, frames).map(|inner| PyHistogram { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        JointHistogram::parse_csv(text).map(|inner| PyHistogram { inner }).map_err(err)
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    #[getter]
    fn counts(&self) -> Vec<Vec<u64>> {
        self.inner.counts().to_rows()
    }

    #[getter]
    fn frames(&self) -> u64 {
        self.inner.frames()
    }

    fn to_distribution(&self) -> PyResult<PyDistribution> {
        self.inner.to_distribution().map(|inner| PyDistribution { inner }).map_err(err)
    }

    fn __repr__(&self) -> String {
        let c = self.inner.counts();
        format!("JointHistogram(frames={}, shape=({}, {}))", self.inner.frames(), c.rows(), c.cols())
    }
}

#[pyclass(name = "Scenario", module = "nonclass_py", frozen)]
pub struct PyScenario {
    inner: CoreScenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn default() -> Self {
        PyScenario { inner: CoreScenario::reference() }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreScenario::parse_json(text).map(|inner| PyScenario { inner }).map_err(err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        CoreScenario::load(path).map(|inner| PyScenario { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// Same scenario with other frame count and seed.
    #[pyo3(signature = (frames = None, seed = None))]
    fn with_sampling(&self, frames: Option<u64>, seed: Option<u64>) -> Self {
        let mut inner = self.inner.clone();
        inner.frames = frames.unwrap_or(inner.frames);
        inner.seed = seed.unwrap_or(inner.seed);
        PyScenario { inner }
    }

    /// `(photon-number distribution, photocount distribution, histogram)`.
    fn run(&self) -> PyResult<(PyDistribution, PyDistribution, PyHistogram)> {
        let out = self.inner.run().map_err(err)?;
        Ok((
            PyDistribution { inner: out.distribution },
            PyDistribution { inner: out.photocount },
            PyHistogram { inner: out.histogram },
        ))
    }
}

fn result_dict<'py>(py: Python<'py>, r: &CriterionResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("id", &r.id)?;
    d.set_item("family", format!("{:?}", r.family))?;
    d.set_item("order", r.order)?;
    d.set_item("value", r.value)?;
    d.set_item("normalized", r.normalized)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("violated", r.violated)?;
    d.set_item("ncd", r.ncd)?;
    Ok(d)
}

fn config(families: Option<&str>, order: usize, ncd: bool, tau_max: f64) -> PyResult<AnalysisConfig> {
    let families = families.map(parse_families).transpose().map_err(err)?.unwrap_or_default();
    let ncd = ncd.then_some(NcdOptions { tau_max, ..NcdOptions::default() });
    Ok(AnalysisConfig { order, families, ncd, ..AnalysisConfig::default() })
}

/// Criterion results for a distribution as a list of dicts.
#[pyfunction]
#[pyo3(signature = (distribution, families = None, order = 5, ncd = true, tau_max = 1.0))]
fn analyze<'py>(
    py: Python<'py>,
    distribution: &PyDistribution,
    families: Option<&str>,
    order: usize,
    ncd: bool,
    tau_max: f64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let cfg = config(families, order, ncd, tau_max)?;
    let results = analyze_distribution(&distribution.inner, &cfg).map_err(err)?;
    results.iter().map(|r| result_dict(py, r)).collect()
}

/// Bootstrap standard errors of the raw criterion values, keyed by id.
#[pyfunction]
#[pyo3(signature = (histogram, replicas = 200, seed = 0, families = None, order = 5))]
fn bootstrap(histogram: &PyHistogram, replicas: usize, seed: u64, families: Option<&str>, order: usize) -> PyResult<Vec<(String, f64)>> {
    let pipeline = Pipeline::direct(config(families, order, false, 1.0)?);
    let s = bootstrap_core(&histogram.inner, &pipeline, replicas, seed).map_err(err)?;
    Ok(s.stderr.into_iter().collect())
}

/// Nonclassicality depth of one criterion on a factorial-moment table.
#[pyfunction]
#[pyo3(signature = (moments, criterion, tau_max = 1.0))]
fn ncd(moments: Vec<Vec<f64>>, criterion: &str, tau_max: f64) -> PyResult<(f64, bool)> {
    let order = moments.len().saturating_sub(1);
    let table = MomentTable::from_rows(order, nonclass::moments::MomentBasis::Intensity, moments).map_err(err)?;
    let spec = Registry::standard().require(criterion).map_err(err)?;
    let r = ncd_with(&table, spec, &NcdOptions { tau_max, ..NcdOptions::default() }).map_err(err)?;
    Ok((r.tau, r.bracketed))
}

/// `(id, family, order)` for the standard catalog.
#[pyfunction]
#[pyo3(signature = (include_redundant = false))]
fn criteria(include_redundant: bool) -> Vec<(String, String, usize)> {
    Registry::standard()
        .specs()
        .iter()
        .filter(|s| include_redundant || !s.redundant)
        .map(|s| (s.id.clone(), format!("{:?}", s.family), s.order()))
        .collect()
}

/// Stirling blocks `(S2, S1)` of order `k`.
#[pyfunction]
fn stirling(k: usize) -> PyResult<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let s = stirling_matrices(k).map_err(err)?;
    Ok((s.second_block(), s.first_block()))
}

/// EM photon-number reconstruction with the scenario's detectors.
#[pyfunction]
#[pyo3(signature = (histogram, scenario, n_max = None, max_iter = 100_000, accelerate = true))]
fn em_reconstruct(
    histogram: &PyHistogram,
    scenario: &PyScenario,
    n_max: Option<usize>,
    max_iter: usize,
    accelerate: bool,
) -> PyResult<(PyDistribution, usize, bool)> {
    let (ds, di) = scenario.inner.detectors().map_err(err)?;
    let opts = EmOptions { n_max, max_iter, accelerate, ..EmOptions::default() };
    let out = em_core(&histogram.inner, &ds, &di, &opts).map_err(err)?;
    Ok((PyDistribution { inner: out.distribution }, out.iterations, out.converged))
}

/// Model fit from the scenario as the starting point; returns the fitted
/// `(eta_s, eta_i, M_p, B_p, M_s, B_s, M_i, B_i)` and the mean pair count.
#[pyfunction]
#[pyo3(signature = (histogram, scenario, starts = 8))]
fn calibrate(histogram: &PyHistogram, scenario: &PyScenario, starts: usize) -> PyResult<(Vec<f64>, f64)> {
    let (ds, di) = scenario.inner.detectors().map_err(err)?;
    let init = CalibrationParams { eta_s: ds.efficiency, eta_i: di.efficiency, twinbeam: scenario.inner.twinbeam };
    let opts = CalibrationOptions { starts, ..CalibrationOptions::default() };
    let r = calibrate_core(&histogram.inner, &init, &ds, &di, &opts).map_err(err)?;
    Ok((r.params.to_array().to_vec(), r.params.twinbeam.mean_pairs()))
}

/// Randomized identity checks; returns the list of failures.
#[pyfunction]
#[pyo3(signature = (tables = 200, seed = 0))]
fn selftest(tables: usize, seed: u64) -> PyResult<Vec<String>> {
    nonclass::selftest::run(tables, seed).map(|s| s.failures).map_err(err)
}

#[pymodule]
fn nonclass_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap, m)?)?;
    m.add_function(wrap_pyfunction!(ncd, m)?)?;
    m.add_function(wrap_pyfunction!(criteria, m)?)?;
    m.add_function(wrap_pyfunction!(stirling, m)?)?;
    m.add_function(wrap_pyfunction!(em_reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
