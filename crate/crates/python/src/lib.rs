//! Python module `cautious`.

use std::fs::File;
use std::io::BufWriter;

use cautious_core::harness::{self, Adversary, PlayConfig};
use cautious_core::kernel::{self, Polytope};
use cautious_core::learner::SafeguardConfig;
use cautious_core::rate::{RateBranch, DEFAULT_BETA, THEOREM_MAX_ETA};
use cautious_core::verify::{self as suites, VerifyConfig};
use cautious_core::{Algorithm, Error, NormalFormGame, RateParams, StrategyProfile};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        Error::NoConvergence(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn branch_name(b: RateBranch) -> &'static str {
    match b {
        RateBranch::Threshold => "threshold",
        RateBranch::Capped => "capped",
        RateBranch::Newton => "newton",
    }
}

/// A normal-form game with payoffs in [-1, 1].
#[pyclass(name = "Game", module = "cautious", frozen)]
struct PyGame {
    inner: NormalFormGame,
}

#[pymethods]
impl PyGame {
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: cautious_core::named_game(name).map_err(to_py)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (players, actions, seed=0))]
    fn random(players: usize, actions: usize, seed: u64) -> PyResult<Self> {
        Ok(Self {
            inner: cautious_core::random_game(players, actions, seed).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self {
            inner: NormalFormGame::load(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: NormalFormGame::from_json(text).map_err(to_py)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn num_players(&self) -> usize {
        self.inner.num_players()
    }

    #[getter]
    fn actions(&self) -> Vec<usize> {
        self.inner.actions().to_vec()
    }

    /// `ν_i` at the mixed profile `rows`.
    fn gradient(&self, rows: Vec<Vec<f64>>, player: usize) -> PyResult<Vec<f64>> {
        let p = StrategyProfile::new(rows).map_err(to_py)?;
        self.inner.gradient_utility(&p, player).map_err(to_py)
    }

    fn expected_utility(&self, rows: Vec<Vec<f64>>, player: usize) -> PyResult<f64> {
        let p = StrategyProfile::new(rows).map_err(to_py)?;
        self.inner.expected_utility(&p, player).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Game(actions={:?})", self.inner.actions())
    }
}

/// `(λ̂, branch, newton_iterations)` for the regret vector `r`.
#[pyfunction]
#[pyo3(signature = (r, eta=THEOREM_MAX_ETA, beta=DEFAULT_BETA))]
fn solve_rate(r: Vec<f64>, eta: f64, beta: f64) -> PyResult<(f64, &'static str, usize)> {
    let p = RateParams::new(eta, beta, r.len()).map_err(to_py)?;
    let sol = cautious_core::solve_rate(&r, &p).map_err(to_py)?;
    Ok((sol.lambda, branch_name(sol.branch), sol.iterations))
}

/// One player's online learner.
#[pyclass(name = "Learner", module = "cautious")]
struct PyLearner {
    inner: cautious_core::Learner,
}

#[pymethods]
impl PyLearner {
    /// `safeguard_players` arms the safeguard as for a game of that size.
    #[new]
    #[pyo3(signature = (actions, algo="dlrc", eta=THEOREM_MAX_ETA, beta=DEFAULT_BETA, safeguard_players=None, smoothness=1.0))]
    fn new(
        actions: usize,
        algo: &str,
        eta: f64,
        beta: f64,
        safeguard_players: Option<usize>,
        smoothness: f64,
    ) -> PyResult<Self> {
        let algorithm = Algorithm::parse(algo).map_err(to_py)?;
        let params = RateParams::new(eta, beta, actions).map_err(to_py)?;
        let mut inner = cautious_core::Learner::new(algorithm, params, actions);
        if let Some(players) = safeguard_players {
            inner = inner.with_safeguard(SafeguardConfig { smoothness, players });
        }
        Ok(Self { inner })
    }

    fn next_strategy(&mut self) -> PyResult<Vec<f64>> {
        self.inner.next_strategy().map(<[f64]>::to_vec).map_err(to_py)
    }

    /// Returns whether `nu` was outside `[-1, 1]`.
    fn observe(&mut self, nu: Vec<f64>) -> PyResult<bool> {
        Ok(self.inner.observe(&nu).map_err(to_py)?.out_of_range)
    }

    #[getter]
    fn rate(&self) -> f64 {
        self.inner.state().lambda
    }

    #[getter]
    fn switched_at(&self) -> Option<usize> {
        self.inner.switched_at()
    }
}

/// Recorded run with the theorem checks.
#[pyclass(name = "MetricsLog", module = "cautious", frozen)]
struct PyMetricsLog {
    inner: harness::MetricsLog,
}

#[pymethods]
impl PyMetricsLog {
    #[getter]
    fn rounds(&self) -> usize {
        self.inner.rounds
    }

    #[getter]
    fn switched_at(&self) -> Vec<Option<usize>> {
        self.inner.switched_at.clone()
    }

    fn regrets(&self, player: usize) -> PyResult<Vec<f64>> {
        self.series(player).map(|s| s.regret.clone())
    }

    fn rates(&self, player: usize) -> PyResult<Vec<f64>> {
        self.series(player).map(|s| s.lambda.clone())
    }

    fn final_regrets(&self) -> Vec<f64> {
        self.inner.final_regrets()
    }

    /// `max_i Reg_i^t / t`, at the last round when `t` is omitted.
    #[pyo3(signature = (t=None))]
    fn cce_gap(&self, t: Option<usize>) -> PyResult<f64> {
        harness::cce_gap_at(&self.inner, t.unwrap_or(self.inner.rounds)).map_err(to_py)
    }

    fn rvu_holds(&self) -> bool {
        harness::check_rvu_bound(&self.inner).iter().all(|c| c.passed())
    }

    fn path_length_holds(&self) -> bool {
        harness::check_path_length(&self.inner).iter().all(|c| c.passed())
    }

    #[pyo3(signature = (smoothness=1.0))]
    fn regret_ceiling_holds(&self, smoothness: f64) -> bool {
        harness::check_regret_ceiling(&self.inner, smoothness)
            .iter()
            .all(|c| c.passed())
    }

    #[pyo3(signature = (path, every=None))]
    fn write_csv(&self, path: &str, every: Option<usize>) -> PyResult<()> {
        let f = File::create(path).map_err(|e| to_py(e.into()))?;
        self.inner.write_csv(BufWriter::new(f), every).map_err(to_py)
    }
}

impl PyMetricsLog {
    fn series(&self, player: usize) -> PyResult<&harness::PlayerSeries> {
        self.inner
            .players
            .get(player)
            .ok_or_else(|| PyValueError::new_err(format!("no player {player}")))
    }
}

fn play_config(algo: &str, eta: Option<f64>, beta: f64, smoothness: f64, safeguard: bool) -> PyResult<PlayConfig> {
    Ok(PlayConfig {
        algorithm: Algorithm::parse(algo).map_err(to_py)?,
        eta,
        beta,
        smoothness,
        safeguard,
    })
}

#[pyfunction]
#[pyo3(signature = (game, rounds, seed=0, algo="dlrc", eta=None, beta=DEFAULT_BETA, smoothness=1.0, safeguard=false))]
#[allow(clippy::too_many_arguments)]
fn self_play(
    py: Python<'_>,
    game: &PyGame,
    rounds: usize,
    seed: u64,
    algo: &str,
    eta: Option<f64>,
    beta: f64,
    smoothness: f64,
    safeguard: bool,
) -> PyResult<PyMetricsLog> {
    let cfg = play_config(algo, eta, beta, smoothness, safeguard)?;
    let g = &game.inner;
    let inner = py.detach(|| harness::self_play(g, &cfg, rounds, seed)).map_err(to_py)?;
    Ok(PyMetricsLog { inner })
}

/// Adversaries: alternating, best-response, random, constant.
#[pyfunction]
#[pyo3(signature = (adversary, actions, rounds, players=2, seed=0, algo="dlrc", eta=None, beta=DEFAULT_BETA))]
#[allow(clippy::too_many_arguments)]
fn adversarial_run(
    py: Python<'_>,
    adversary: &str,
    actions: usize,
    rounds: usize,
    players: usize,
    seed: u64,
    algo: &str,
    eta: Option<f64>,
    beta: f64,
) -> PyResult<PyMetricsLog> {
    let adv = Adversary::parse(adversary, seed).map_err(to_py)?;
    let cfg = play_config(algo, eta, beta, 1.0, true)?;
    let inner = py
        .detach(|| harness::adversarial_run(&cfg, players, actions, adv, rounds))
        .map_err(to_py)?;
    Ok(PyMetricsLog { inner })
}

#[pyclass(name = "DemoReport", module = "cautious", frozen, get_all)]
struct PyDemoReport {
    rounds: usize,
    kernel_calls: usize,
    derivative_evals: usize,
    newton_rounds: usize,
    budget_ok: bool,
    reference: Option<&'static str>,
    max_deviation: Option<f64>,
}

/// Kernelized learner on `simplex`, `hypercube` or `mset`.
#[pyfunction]
#[pyo3(signature = (polytope, d, rounds=100, m=None, amplitude=1e4, eta=THEOREM_MAX_ETA, beta=DEFAULT_BETA))]
fn kernel_demo(
    polytope: &str,
    d: usize,
    rounds: usize,
    m: Option<usize>,
    amplitude: f64,
    eta: f64,
    beta: f64,
) -> PyResult<PyDemoReport> {
    let p = Polytope::from_spec(polytope, d, m).map_err(to_py)?;
    let r = kernel::kernel_demo(&p, rounds, amplitude, eta, beta).map_err(to_py)?;
    Ok(PyDemoReport {
        rounds: r.rounds,
        kernel_calls: r.kernel_calls,
        derivative_evals: r.derivative_evals,
        newton_rounds: r.newton_rounds,
        budget_ok: r.budget_ok,
        reference: r.reference,
        max_deviation: r.max_deviation,
    })
}

type SuiteRow = (&'static str, usize, f64, f64, bool);

/// `[(suite, samples, max_violation, tolerance, passed)]`.
#[pyfunction]
#[pyo3(signature = (suite="all", samples=1000, seed=0, d=None))]
fn verify(py: Python<'_>, suite: &str, samples: usize, seed: u64, d: Option<usize>) -> PyResult<Vec<SuiteRow>> {
    let cfg = VerifyConfig { samples, seed, d };
    let reports = py.detach(|| suites::run_suite(suite, &cfg)).map_err(to_py)?;
    Ok(reports
        .iter()
        .map(|r| (r.name, r.samples, r.max_violation, r.tolerance, r.passed()))
        .collect())
}

#[pymodule]
fn cautious(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGame>()?;
    m.add_class::<PyLearner>()?;
    m.add_class::<PyMetricsLog>()?;
    m.add_class::<PyDemoReport>()?;
    m.add_function(wrap_pyfunction!(solve_rate, m)?)?;
    m.add_function(wrap_pyfunction!(self_play, m)?)?;
    m.add_function(wrap_pyfunction!(adversarial_run, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_demo, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("SUITES", suites::SUITES.to_vec())?;
    Ok(())
}
