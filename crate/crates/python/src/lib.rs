use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use perpsim::distributions::{IncrementKind, IncrementModel, TailModel};
use perpsim::harness::{emit_reports, run_experiment as run, ExperimentConfig};
use perpsim::limit_laws::{mixed_sup_cdf_mc_grid, BmSupLaw, MixedSupLaw, PppSupLaw};
use perpsim::perpetuity::{check_shape, simulate_run as simulate, PerpetuityParams, TruncationRule};
use perpsim::stats::{ks_two_sample as ks2, KsReport};
use perpsim::{Error, RandomStream};

fn py_err(e: Error) -> PyErr {
    if e.is_config_error() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Distribution of the walk increments.
#[pyclass(name = "IncrementModel", frozen)]
struct PyIncrementModel(IncrementModel);

#[pymethods]
impl PyIncrementModel {
    /// `kind` is one of gaussian, rademacher, centered_uniform, shifted_exponential.
    #[new]
    #[pyo3(signature = (kind, sigma = 1.0))]
    fn new(kind: &str, sigma: f64) -> PyResult<Self> {
        let kind = match kind {
            "gaussian" => IncrementKind::Gaussian,
            "rademacher" => IncrementKind::Rademacher,
            "centered_uniform" => IncrementKind::CenteredUniform,
            "shifted_exponential" => IncrementKind::ShiftedExponential,
            other => return Err(PyValueError::new_err(format!("unknown increment kind {other:?}"))),
        };
        IncrementModel::new(kind, sigma).map(Self).map_err(py_err)
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// Law of `log eta`.
#[pyclass(name = "TailModel", frozen)]
struct PyTailModel(TailModel);

#[pymethods]
impl PyTailModel {
    #[staticmethod]
    fn light_exp(rate: f64) -> PyResult<Self> {
        TailModel::light_exp(rate).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (beta, kappa = 1.0, t0 = 1.0))]
    fn pareto(beta: f64, kappa: f64, t0: f64) -> PyResult<Self> {
        TailModel::pareto(beta, kappa, t0).map(Self).map_err(py_err)
    }

    #[staticmethod]
    #[pyo3(signature = (lam, t0 = 1.0))]
    fn quadratic(lam: f64, t0: f64) -> PyResult<Self> {
        TailModel::quadratic(lam, t0).map(Self).map_err(py_err)
    }

    #[staticmethod]
    fn zero() -> Self {
        Self(TailModel::zero())
    }

    /// `P{log eta > t}`.
    fn tail(&self, t: f64) -> f64 {
        self.0.tail(t)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.0)
    }
}

/// One simulated trajectory evaluated on a grid of discount multipliers.
#[pyclass(name = "PerpetuityRun", frozen)]
struct PyPerpetuityRun(perpsim::perpetuity::PerpetuityRun);

#[pymethods]
impl PyPerpetuityRun {
    #[getter]
    fn u_grid(&self) -> Vec<f64> {
        self.0.u_grid.clone()
    }

    #[getter]
    fn log_y(&self) -> Vec<f64> {
        self.0.log_y.clone()
    }

    #[getter]
    fn z(&self) -> Vec<f64> {
        self.0.z.clone()
    }

    /// Index `K` where the sum was truncated.
    #[getter]
    fn horizon(&self) -> u64 {
        self.0.horizon
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.0.tail_bound()
    }

    /// True when monotonicity, convexity and the sandwich bound all hold.
    fn shape_ok(&self) -> bool {
        check_shape(&self.0, 1e-9).ok()
    }
}

#[pyfunction]
#[pyo3(signature = (a, u_grid, increment, tail, seed, stream = 0))]
fn simulate_run(
    a: f64,
    u_grid: Vec<f64>,
    increment: &PyIncrementModel,
    tail: &PyTailModel,
    seed: u64,
    stream: u64,
) -> PyResult<PyPerpetuityRun> {
    let params = PerpetuityParams::new(a, u_grid, TruncationRule::default(), increment.0, tail.0).map_err(py_err)?;
    simulate(&params, &mut RandomStream::new(seed, stream))
        .map(PyPerpetuityRun)
        .map_err(py_err)
}

/// `P{sup_t (sigma B(t) - u t) <= x}`.
#[pyfunction]
fn bm_sup_cdf(sigma: f64, u: f64, x: f64) -> PyResult<f64> {
    Ok(BmSupLaw::new(sigma, u).map_err(py_err)?.cdf(x))
}

/// Supremum of the Poisson point process limit; `horizon=None` is the whole half-line.
#[pyfunction]
#[pyo3(signature = (lam, beta, u, x, horizon = None))]
fn ppp_sup_cdf(lam: f64, beta: f64, u: f64, x: f64, horizon: Option<f64>) -> PyResult<f64> {
    Ok(PppSupLaw::new(lam, beta, u, horizon).map_err(py_err)?.cdf(x))
}

/// Monte Carlo distribution function of the mixed law: `[(x, estimate, stderr)]`.
#[pyfunction]
#[pyo3(signature = (sigma, lam, u, xs, n_paths, seed))]
fn mixed_sup_cdf_mc(
    py: Python<'_>,
    sigma: f64,
    lam: f64,
    u: f64,
    xs: Vec<f64>,
    n_paths: usize,
    seed: u64,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let law = MixedSupLaw::new(sigma, lam, u).map_err(py_err)?;
    let est = py
        .detach(|| mixed_sup_cdf_mc_grid(&law, &xs, n_paths, &mut RandomStream::new(seed, 0)))
        .map_err(py_err)?;
    Ok(est.iter().map(|e| (e.x, e.estimate, e.stderr)).collect())
}

fn ks_dict<'py>(py: Python<'py>, rep: &KsReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("statistic", rep.statistic)?;
    d.set_item("threshold", rep.threshold)?;
    d.set_item("pass", rep.pass)?;
    d.set_item("n", rep.n)?;
    d.set_item("m", rep.m)?;
    Ok(d)
}

#[pyfunction]
#[pyo3(signature = (a, b, alpha = 0.01))]
fn ks_two_sample<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>, alpha: f64) -> PyResult<Bound<'py, PyDict>> {
    let rep = ks2(&a, &b, alpha).map_err(py_err)?;
    ks_dict(py, &rep)
}

/// Run an experiment from TOML or JSON text. Reports are written when
/// `output_dir` is given; returns `summary.json` as a string.
#[pyfunction]
#[pyo3(signature = (config, output_dir = None, threads = None))]
fn run_experiment(py: Python<'_>, config: &str, output_dir: Option<PathBuf>, threads: Option<usize>) -> PyResult<String> {
    let mut cfg = ExperimentConfig::parse(config).map_err(py_err)?;
    if threads.is_some() {
        cfg.threads = threads;
    }
    let bundle = py.detach(|| run(&cfg)).map_err(py_err)?;
    if let Some(dir) = output_dir {
        emit_reports(&bundle, &dir).map_err(py_err)?;
    }
    let mut json = serde_json::to_string_pretty(&bundle.summary()).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    json.push('\n');
    Ok(json)
}

#[pymodule]
fn perpsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyIncrementModel>()?;
    m.add_class::<PyTailModel>()?;
    m.add_class::<PyPerpetuityRun>()?;
    m.add_function(wrap_pyfunction!(simulate_run, m)?)?;
    m.add_function(wrap_pyfunction!(bm_sup_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(ppp_sup_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_sup_cdf_mc, m)?)?;
    m.add_function(wrap_pyfunction!(ks_two_sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
