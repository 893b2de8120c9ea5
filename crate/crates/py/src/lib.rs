//! Python module `agenda_sim`: the simulation and continuous-limit routines of
//! `agenda-core`. Long computations release the GIL.

use agenda_core::bounds::{self, StepDistribution};
use agenda_core::continuum::{self, ContinuousParams, EtaGrid, PrecisionConfig, UniformSample};
use agenda_core::election::{self, SeedVector, TwoRoundOutcome};
use agenda_core::estimator::{self, BinomialEstimate, CentroidConfig, VictoryEvent};
use agenda_core::rng::RngSpec;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: agenda_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn precision(digits: Option<u32>) -> PyResult<PrecisionConfig> {
    match digits {
        None => Ok(PrecisionConfig::Machine),
        Some(d) => PrecisionConfig::extended(d).map_err(err),
    }
}

fn event(universal: bool) -> VictoryEvent {
    if universal {
        VictoryEvent::Universal
    } else {
        VictoryEvent::Individual
    }
}

/// Binomial estimate with its Wilson score interval.
#[pyclass(frozen, get_all, skip_from_py_object, name = "Estimate")]
#[derive(Clone)]
struct PyEstimate {
    successes: u64,
    trials: u64,
    p_hat: f64,
    wilson_lower: f64,
    wilson_upper: f64,
    z: f64,
}

impl From<BinomialEstimate> for PyEstimate {
    fn from(e: BinomialEstimate) -> Self {
        Self {
            successes: e.successes,
            trials: e.trials,
            p_hat: e.p_hat,
            wilson_lower: e.wilson_lower,
            wilson_upper: e.wilson_upper,
            z: e.z,
        }
    }
}

#[pymethods]
impl PyEstimate {
    fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }

    fn contains(&self, p: f64) -> bool {
        self.wilson_lower <= p && p <= self.wilson_upper
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(p_hat={}, wilson=[{}, {}], successes={}, trials={})",
            self.p_hat, self.wilson_lower, self.wilson_upper, self.successes, self.trials
        )
    }
}

/// The agenda `(A, B)` for `n` candidates, cluster width `l` and rotation `i`.
#[pyclass(frozen, name = "Partition")]
struct PyPartition(election::Partition);

#[pymethods]
impl PyPartition {
    #[new]
    #[pyo3(signature = (n, l, rotation = 1))]
    fn new(n: u32, l: u32, rotation: u32) -> PyResult<Self> {
        election::Partition::build(n, l, rotation).map(Self).map_err(err)
    }

    #[getter]
    fn members_a(&self) -> Vec<u32> {
        self.0.members_a().to_vec()
    }

    #[getter]
    fn members_b(&self) -> Vec<u32> {
        self.0.members_b().to_vec()
    }

    #[getter]
    fn head_a(&self) -> u32 {
        self.0.head_a()
    }

    #[getter]
    fn head_b(&self) -> u32 {
        self.0.head_b()
    }

    /// Seeds whose voters back `candidate` in the first round.
    fn preimage(&self, candidate: u32) -> Vec<u32> {
        if self.0.in_a(candidate) {
            self.0.ballot_a().preimage(candidate)
        } else {
            self.0.ballot_b().preimage(candidate)
        }
    }

    /// `("winner", c)` or `("void_in_a" | "void_in_b" | "void_in_final", None)`.
    fn run(&self, seeds: Vec<u32>) -> PyResult<(&'static str, Option<u32>)> {
        let seeds = SeedVector::new(self.0.n(), seeds).map_err(err)?;
        Ok(match election::run_two_round(&seeds, &self.0).map_err(err)? {
            TwoRoundOutcome::Winner(c) => ("winner", Some(c)),
            TwoRoundOutcome::VoidInA => ("void_in_a", None),
            TwoRoundOutcome::VoidInB => ("void_in_b", None),
            TwoRoundOutcome::VoidInFinal => ("void_in_final", None),
        })
    }

    fn __repr__(&self) -> String {
        format!("Partition(a={:?}, b={:?})", self.0.members_a(), self.0.members_b())
    }
}

#[pyclass(frozen, get_all, name = "WinProbability")]
struct PyWinProbability {
    p: f64,
    q: f64,
    log10_q: f64,
}

#[pyclass(frozen, get_all, name = "EtaOptimum")]
struct PyEtaOptimum {
    m: u32,
    eta_star: f64,
    p: f64,
    q: f64,
    log10_q: f64,
}

impl From<continuum::EtaOptimum> for PyEtaOptimum {
    fn from(o: continuum::EtaOptimum) -> Self {
        Self {
            m: o.m,
            eta_star: o.eta_star,
            p: o.p,
            q: o.q,
            log10_q: o.log10_q,
        }
    }
}

#[pyclass(frozen, get_all, name = "PlateauResult")]
struct PyPlateau {
    l_opt: u32,
    l_left: u32,
    l_right: u32,
    l_max_scan: u32,
    threshold: f64,
    validated: PyEstimate,
    /// `(l, Estimate)` for every scanned width.
    scan: Vec<(u32, PyEstimate)>,
}

#[pyfunction]
fn universal_victory(n: u32, l: u32, seeds: Vec<u32>) -> PyResult<bool> {
    let seeds = SeedVector::new(n, seeds).map_err(err)?;
    election::universal_victory(&seeds, n, l).map_err(err)
}

/// Exact `(favourable, total)` count of winning electorates for candidate 1.
#[pyfunction]
#[pyo3(signature = (n, m, l, universal = false))]
fn exact_probability(py: Python<'_>, n: u32, m: u32, l: u32, universal: bool) -> PyResult<(u64, u64)> {
    let budget = election::DEFAULT_ENUMERATION_BUDGET;
    let r = py.detach(|| {
        if universal {
            election::exact_p2_bruteforce(n, m, l, budget)
        } else {
            election::exact_p1_bruteforce(n, m, l, budget)
        }
    });
    r.map(|e| (e.favourable, e.total)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (n, m, l, trials = 100_000, seed = 0, universal = false, z = estimator::DEFAULT_Z))]
#[allow(clippy::too_many_arguments)]
fn estimate_discrete(
    py: Python<'_>,
    n: u32,
    m: u32,
    l: u32,
    trials: u64,
    seed: u64,
    universal: bool,
    z: f64,
) -> PyResult<PyEstimate> {
    let rng = RngSpec::new(seed);
    py.detach(|| estimator::estimate_discrete(event(universal), n, m, l, trials, &rng, z))
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (
    n, m, universal = false, l_min = None, l_max = None,
    scan_trials = 10_000, validation_trials = 100_000, seed = 0, z = estimator::DEFAULT_Z,
))]
#[allow(clippy::too_many_arguments)]
fn wilson_centroid_optimize(
    py: Python<'_>,
    n: u32,
    m: u32,
    universal: bool,
    l_min: Option<u32>,
    l_max: Option<u32>,
    scan_trials: u64,
    validation_trials: u64,
    seed: u64,
    z: f64,
) -> PyResult<PyPlateau> {
    let config = CentroidConfig {
        event: event(universal),
        l_min,
        l_max,
        scan_trials,
        validation_trials,
        z,
    };
    let rng = RngSpec::new(seed);
    let r = py
        .detach(|| estimator::wilson_centroid_optimize(n, m, &config, &rng))
        .map_err(err)?;
    Ok(PyPlateau {
        l_opt: r.l_opt,
        l_left: r.l_left,
        l_right: r.l_right,
        l_max_scan: r.l_max_scan,
        threshold: r.threshold,
        validated: r.p_validated.into(),
        scan: r.scan.into_iter().map(|p| (p.l, p.estimate.into())).collect(),
    })
}

#[pyfunction]
#[pyo3(signature = (successes, trials, z = estimator::DEFAULT_Z))]
fn wilson_interval(successes: u64, trials: u64, z: f64) -> PyResult<(f64, f64)> {
    estimator::wilson_interval(successes, trials, z).map_err(err)
}

/// `digits = None` evaluates in machine precision.
#[pyfunction]
#[pyo3(signature = (m, eta, digits = None))]
fn p_win_continuous(py: Python<'_>, m: u32, eta: f64, digits: Option<u32>) -> PyResult<PyWinProbability> {
    let params = ContinuousParams::new(m, eta).map_err(err)?;
    let precision = precision(digits)?;
    let w = py
        .detach(|| continuum::p_win_continuous(params, precision))
        .map_err(err)?;
    Ok(PyWinProbability {
        p: w.p,
        q: w.q,
        log10_q: w.log10_q,
    })
}

fn grid(start: f64, end: f64, step: f64) -> EtaGrid {
    EtaGrid { start, end, step }
}

#[pyfunction]
#[pyo3(signature = (m, digits = None, grid_start = 0.1, grid_end = 0.45, grid_step = 0.0007))]
fn optimize_eta_win(
    py: Python<'_>,
    m: u32,
    digits: Option<u32>,
    grid_start: f64,
    grid_end: f64,
    grid_step: f64,
) -> PyResult<PyEtaOptimum> {
    let precision = precision(digits)?;
    py.detach(|| continuum::optimize_eta_win(m, grid(grid_start, grid_end, grid_step), precision))
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m_values, digits = None, grid_start = 0.1, grid_end = 0.45, grid_step = 0.0007))]
fn decay_table(
    py: Python<'_>,
    m_values: Vec<u32>,
    digits: Option<u32>,
    grid_start: f64,
    grid_end: f64,
    grid_step: f64,
) -> PyResult<Vec<PyEtaOptimum>> {
    let precision = precision(digits)?;
    let rows = py
        .detach(|| continuum::decay_table(&m_values, grid(grid_start, grid_end, grid_step), precision))
        .map_err(err)?;
    Ok(rows.into_iter().map(Into::into).collect())
}

#[pyfunction]
fn universal_event_continuous(points: Vec<f64>, eta: f64) -> PyResult<bool> {
    let sample = UniformSample::new(points).map_err(err)?;
    continuum::universal_event_continuous(&sample, eta).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (m, eta, trials = 100_000, seed = 0))]
fn estimate_p2_continuous(py: Python<'_>, m: u32, eta: f64, trials: u64, seed: u64) -> PyResult<PyEstimate> {
    let rng = RngSpec::new(seed);
    py.detach(|| continuum::estimate_p2_continuous(m, eta, trials, &rng))
        .map(Into::into)
        .map_err(err)
}

#[pyfunction]
fn chernoff_rate(p_plus: f64, p_minus: f64) -> PyResult<f64> {
    StepDistribution::new(p_plus, p_minus)
        .map(|d| bounds::chernoff_rate(&d))
        .map_err(err)
}

#[pyfunction]
fn failure_upper_bound(n: u32, m: u32, l: u32) -> f64 {
    bounds::failure_upper_bound(n, m, l)
}

#[pyfunction]
fn relaxed_failure_bound(n: u32, m: u32, l: u32) -> f64 {
    bounds::relaxed_failure_bound(n, m, l)
}

#[pyfunction]
fn fit_decay_slope(rows: Vec<(u32, f64)>) -> PyResult<f64> {
    bounds::fit_decay_slope(&rows).map_err(err)
}

#[pymodule]
fn agenda_sim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEstimate>()?;
    m.add_class::<PyPartition>()?;
    m.add_class::<PyWinProbability>()?;
    m.add_class::<PyEtaOptimum>()?;
    m.add_class::<PyPlateau>()?;
    m.add_function(wrap_pyfunction!(universal_victory, m)?)?;
    m.add_function(wrap_pyfunction!(exact_probability, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_discrete, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_centroid_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(wilson_interval, m)?)?;
    m.add_function(wrap_pyfunction!(p_win_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_eta_win, m)?)?;
    m.add_function(wrap_pyfunction!(decay_table, m)?)?;
    m.add_function(wrap_pyfunction!(universal_event_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_p2_continuous, m)?)?;
    m.add_function(wrap_pyfunction!(chernoff_rate, m)?)?;
    m.add_function(wrap_pyfunction!(failure_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(relaxed_failure_bound, m)?)?;
    m.add_function(wrap_pyfunction!(fit_decay_slope, m)?)?;
    Ok(())
}
