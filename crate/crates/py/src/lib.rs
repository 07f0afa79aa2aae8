//! Python bindings for the k-IGT simulation and analysis library.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use kigt_core::{analysis, ehrenfest, game, population, rng, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Degenerate(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn strategy(s: &str) -> PyResult<game::Strategy> {
    s.parse().map_err(to_py)
}

#[pyclass(name = "RewardVector", frozen, from_py_object)]
#[derive(Clone)]
struct PyRewardVector(game::RewardVector);

#[pymethods]
impl PyRewardVector {
    #[new]
    fn new(r: f64, s: f64, t: f64, p: f64) -> PyResult<Self> {
        game::RewardVector::new(r, s, t, p).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn donation(benefit: f64, cost: f64) -> PyResult<Self> {
        game::RewardVector::donation(benefit, cost).map(Self).map_err(to_py)
    }

    /// `(R, S, T, P)`.
    fn as_tuple(&self) -> (f64, f64, f64, f64) {
        let [r, s, t, p] = self.0.as_array();
        (r, s, t, p)
    }

    fn __repr__(&self) -> String {
        let [r, s, t, p] = self.0.as_array();
        format!("RewardVector(r={r}, s={s}, t={t}, p={p})")
    }
}

#[pyclass(name = "GameConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PyGameConfig(game::GameConfig);

#[pymethods]
impl PyGameConfig {
    #[new]
    #[pyo3(signature = (delta, s1 = 0.5, g_hat = 1.0))]
    fn new(delta: f64, s1: f64, g_hat: f64) -> PyResult<Self> {
        game::GameConfig::new(delta, s1, g_hat).map(Self).map_err(to_py)
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.0.delta
    }

    #[getter]
    fn s1(&self) -> f64 {
        self.0.s1
    }

    #[getter]
    fn g_hat(&self) -> f64 {
        self.0.g_hat
    }

    fn __repr__(&self) -> String {
        format!("GameConfig(delta={}, s1={}, g_hat={})", self.0.delta, self.0.s1, self.0.g_hat)
    }
}

#[pyclass(name = "EhrenfestParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyEhrenfestParams(ehrenfest::EhrenfestParams);

#[pymethods]
impl PyEhrenfestParams {
    #[new]
    fn new(k: usize, a: f64, b: f64, m: u32) -> PyResult<Self> {
        ehrenfest::EhrenfestParams::new(k, a, b, m).map(Self).map_err(to_py)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn a(&self) -> f64 {
        self.0.a
    }

    #[getter]
    fn b(&self) -> f64 {
        self.0.b
    }

    #[getter]
    fn m(&self) -> u32 {
        self.0.m
    }

    #[getter]
    fn lam(&self) -> f64 {
        self.0.lambda()
    }

    fn __repr__(&self) -> String {
        let p = self.0;
        format!("EhrenfestParams(k={}, a={}, b={}, m={})", p.k, p.a, p.b, p.m)
    }
}

#[pyclass(name = "PopulationConfig", frozen, from_py_object)]
#[derive(Clone)]
struct PyPopulationConfig(population::PopulationConfig);

#[pymethods]
impl PyPopulationConfig {
    #[new]
    #[pyo3(signature = (n, alpha, beta, k, g_hat, pairing = "idealized", seed = 0))]
    fn new(n: u32, alpha: f64, beta: f64, k: usize, g_hat: f64, pairing: &str, seed: u64) -> PyResult<Self> {
        let pairing = pairing.parse().map_err(to_py)?;
        population::PopulationConfig::new(n, alpha, beta, k, g_hat)
            .map(|c| Self(c.with_pairing(pairing).with_seed(seed)))
            .map_err(to_py)
    }

    #[getter]
    fn n(&self) -> u32 {
        self.0.n
    }

    #[getter]
    fn m(&self) -> PyResult<u32> {
        self.0.m().map_err(to_py)
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn __repr__(&self) -> String {
        let c = self.0;
        format!(
            "PopulationConfig(n={}, alpha={}, beta={}, k={}, g_hat={}, pairing={:?}, seed={})",
            c.n, c.alpha, c.beta, c.k, c.g_hat, c.pairing, c.seed
        )
    }
}

/// A population together with its random stream.
#[pyclass(name = "Population")]
struct PyPopulation {
    cfg: population::PopulationConfig,
    state: population::PopulationState,
    rng: rng::SimRng,
}

#[pymethods]
impl PyPopulation {
    /// `counts` fixes the initial index counts; otherwise each GTFT node
    /// starts at a uniformly random index.
    #[new]
    #[pyo3(signature = (cfg, counts = None))]
    fn new(cfg: PyPopulationConfig, counts: Option<Vec<u32>>) -> PyResult<Self> {
        let mut rng = rng::stream(cfg.0.seed, "simulate", 0);
        let init = match counts {
            Some(z) => population::InitialCounts::Explicit(ehrenfest::CountVector(z)),
            None => population::InitialCounts::UniformRandom,
        };
        let state = population::init_population(&cfg.0, &init, &mut rng).map_err(to_py)?;
        Ok(Self { cfg: cfg.0, state, rng })
    }

    #[getter]
    fn counts(&self) -> Vec<u32> {
        self.state.counts_slice().to_vec()
    }

    #[getter]
    fn time(&self) -> u64 {
        self.state.time()
    }

    #[getter]
    fn avg_generosity(&self) -> f64 {
        self.state.avg_generosity(self.cfg.g_hat)
    }

    /// One interaction; returns its record as a dict.
    fn interact<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let rec = population::interact(&mut self.state, &self.cfg, &mut self.rng);
        let d = PyDict::new(py);
        d.set_item("initiator", rec.initiator)?;
        d.set_item("partner", rec.partner)?;
        d.set_item("initiator_type", format!("{:?}", rec.initiator_type))?;
        d.set_item("partner_type", format!("{:?}", rec.partner_type))?;
        d.set_item("index_before", rec.index_before)?;
        d.set_item("index_after", rec.index_after)?;
        Ok(d)
    }

    /// Advances `steps` interactions and returns `(t, z, avg_generosity)`
    /// rows at the requested cadence, including the starting point.
    #[pyo3(signature = (steps, record_every = 1))]
    fn run(&mut self, steps: u64, record_every: u64) -> PyResult<Vec<(u64, Vec<u32>, f64)>> {
        let traj = population::run_from(&mut self.state, &self.cfg, steps, record_every, &mut self.rng)
            .map_err(to_py)?;
        Ok(traj.into_iter().map(|p| (p.t, p.z.0, p.avg_generosity)).collect())
    }
}

#[pyfunction]
fn expected_payoff(me: &str, opp: &str, cfg: PyGameConfig, rv: PyRewardVector) -> PyResult<f64> {
    game::expected_payoff_closed(strategy(me)?, strategy(opp)?, &cfg.0, &rv.0).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (me, opp, cfg, rv, tol = 1e-12))]
fn expected_payoff_series(me: &str, opp: &str, cfg: PyGameConfig, rv: PyRewardVector, tol: f64) -> PyResult<f64> {
    game::expected_payoff_series(strategy(me)?, strategy(opp)?, &cfg.0, &rv.0, tol).map_err(to_py)
}

/// Mean and standard error of the row player's total payoff over `games`
/// simulated repeated games.
#[pyfunction]
#[pyo3(signature = (me, opp, cfg, rv, games, seed = 0))]
fn simulate_payoff(me: &str, opp: &str, cfg: PyGameConfig, rv: PyRewardVector, games: u64, seed: u64) -> PyResult<(f64, f64)> {
    if games < 2 {
        return Err(PyValueError::new_err("need at least two games"));
    }
    let (me, opp) = (strategy(me)?, strategy(opp)?);
    let mut rng = rng::stream(seed, "payoff", 0);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..games {
        let x = game::simulate_game(me, opp, &cfg.0, &rv.0, &mut rng).map_err(to_py)?.payoff_me;
        s += x;
        s2 += x * x;
    }
    let n = games as f64;
    let mean = s / n;
    Ok((mean, (((s2 - n * mean * mean) / (n - 1.0)).max(0.0) / n).sqrt()))
}

#[pyfunction]
fn resolvent(g: f64, g_prime: f64, cfg: PyGameConfig) -> PyResult<Vec<Vec<f64>>> {
    let a = game::resolvent_entries(g, g_prime, &cfg.0).map_err(to_py)?;
    Ok(a.iter().map(|r| r.to_vec()).collect())
}

#[pyfunction]
fn stationary_closed(params: PyEhrenfestParams) -> Vec<f64> {
    ehrenfest::stationary_closed(&params.0).p
}

#[pyfunction]
fn stationary_pmf(params: PyEhrenfestParams, z: Vec<u32>) -> PyResult<f64> {
    let z = ehrenfest::CountVector(z);
    z.check(&params.0).map_err(to_py)?;
    Ok(ehrenfest::stationary_closed(&params.0).pmf(&z))
}

#[pyfunction]
fn transition_row(params: PyEhrenfestParams, z: Vec<u32>) -> PyResult<Vec<(Vec<u32>, f64)>> {
    let z = ehrenfest::CountVector(z);
    z.check(&params.0).map_err(to_py)?;
    Ok(ehrenfest::transition_row(&z, &params.0).into_iter().map(|(y, p)| (y.0, p)).collect())
}

#[pyfunction]
fn solve_stationary_exact(params: PyEhrenfestParams) -> PyResult<Vec<(Vec<u32>, f64)>> {
    let pi = ehrenfest::solve_stationary_exact(&params.0).map_err(to_py)?;
    Ok(pi.into_iter().map(|(z, p)| (z.0, p)).collect())
}

#[pyfunction]
fn detailed_balance_residual(params: PyEhrenfestParams) -> PyResult<f64> {
    ehrenfest::detailed_balance_residual(&params.0).map_err(to_py)
}

#[pyfunction]
fn tv_distance_exact(params: PyEhrenfestParams, t: u64, z: Vec<u32>) -> PyResult<f64> {
    ehrenfest::tv_distance_exact(&params.0, t, &ehrenfest::CountVector(z)).map_err(to_py)
}

#[pyfunction]
fn mixing_bound(params: PyEhrenfestParams) -> f64 {
    ehrenfest::mixing_bound(&params.0)
}

/// Empirical `(1 - epsilon)` quantile of the corner coupling time.
#[pyfunction]
#[pyo3(signature = (params, epsilon = 0.25, trials = 1000, seed = 0, step_limit = ehrenfest::DEFAULT_STEP_LIMIT))]
fn estimate_mixing(py: Python<'_>, params: PyEhrenfestParams, epsilon: f64, trials: u32, seed: u64, step_limit: u64) -> PyResult<u64> {
    py.detach(|| ehrenfest::estimate_mixing(&params.0, epsilon, trials, seed, step_limit))
        .map(|e| e.t_hat)
        .map_err(to_py)
}

#[pyfunction]
fn expected_absorption(k: u32, a: f64, b: f64) -> PyResult<f64> {
    ehrenfest::expected_absorption_closed(k, a, b).map_err(to_py)
}

#[pyfunction]
fn grid(k: usize, g_hat: f64) -> PyResult<Vec<f64>> {
    if k < 2 {
        return Err(PyValueError::new_err("need k >= 2"));
    }
    Ok(population::grid(k, g_hat))
}

#[pyfunction]
fn to_ehrenfest(cfg: PyPopulationConfig) -> PyResult<PyEhrenfestParams> {
    population::to_ehrenfest(&cfg.0).map(PyEhrenfestParams).map_err(to_py)
}

#[pyfunction]
fn stationary_of_population(cfg: PyPopulationConfig) -> PyResult<Vec<f64>> {
    population::stationary_of_population(&cfg.0).map(|d| d.p).map_err(to_py)
}

#[pyfunction]
fn avg_stationary_generosity(k: usize, beta: f64, g_hat: f64) -> PyResult<f64> {
    analysis::avg_stationary_generosity(k, beta, g_hat).map_err(to_py)
}

#[pyfunction]
fn mean_field_payoff(g: f64, alpha: f64, beta: f64, cfg: PyGameConfig, rv: PyRewardVector) -> PyResult<f64> {
    analysis::mean_field_payoff(g, alpha, beta, &cfg.0, &rv.0).map_err(to_py)
}

/// `(g_star, regime, phi)` with regime one of `"low"`, `"mid"`, `"high"`.
#[pyfunction]
fn optimal_generosity(alpha: f64, beta: f64, n: u32, cfg: PyGameConfig, rv: PyRewardVector) -> PyResult<(f64, String, f64)> {
    let o = analysis::optimal_generosity(alpha, beta, n, &cfg.0, &rv.0).map_err(to_py)?;
    Ok((o.g_star, o.regime.to_string(), o.phi))
}

#[pyfunction]
fn phi_low_threshold(cfg: PyGameConfig, rv: PyRewardVector) -> PyResult<f64> {
    analysis::phi_low_threshold(&cfg.0, &rv.0).map_err(to_py)
}

#[pyfunction]
fn gap_bound(k: usize, beta: f64) -> PyResult<f64> {
    analysis::gap_bound(k, beta).map_err(to_py)
}

#[pyfunction]
fn granular_expected_payoff<'py>(
    py: Python<'py>,
    alpha: f64,
    beta: f64,
    m: u32,
    k: usize,
    cfg: PyGameConfig,
    rv: PyRewardVector,
) -> PyResult<Bound<'py, PyDict>> {
    let c = analysis::granular_expected_payoff(alpha, beta, m, k, &cfg.0, &rv.0).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("grid", c.grid)?;
    d.set_item("mean_field_on_grid", c.mean_field_on_grid)?;
    d.set_item("stationary_p", c.stationary_p)?;
    d.set_item("avg_generosity", c.avg_generosity)?;
    d.set_item("mean_field", c.mean_field)?;
    d.set_item("granular", c.granular)?;
    d.set_item("abs_diff", c.abs_diff)?;
    Ok(d)
}

#[pymodule]
fn kigt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRewardVector>()?;
    m.add_class::<PyGameConfig>()?;
    m.add_class::<PyEhrenfestParams>()?;
    m.add_class::<PyPopulationConfig>()?;
    m.add_class::<PyPopulation>()?;
    m.add_function(wrap_pyfunction!(expected_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(expected_payoff_series, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(resolvent, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_closed, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_pmf, m)?)?;
    m.add_function(wrap_pyfunction!(transition_row, m)?)?;
    m.add_function(wrap_pyfunction!(solve_stationary_exact, m)?)?;
    m.add_function(wrap_pyfunction!(detailed_balance_residual, m)?)?;
    m.add_function(wrap_pyfunction!(tv_distance_exact, m)?)?;
    m.add_function(wrap_pyfunction!(mixing_bound, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_mixing, m)?)?;
    m.add_function(wrap_pyfunction!(expected_absorption, m)?)?;
    m.add_function(wrap_pyfunction!(grid, m)?)?;
    m.add_function(wrap_pyfunction!(to_ehrenfest, m)?)?;
    m.add_function(wrap_pyfunction!(stationary_of_population, m)?)?;
    m.add_function(wrap_pyfunction!(avg_stationary_generosity, m)?)?;
    m.add_function(wrap_pyfunction!(mean_field_payoff, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_generosity, m)?)?;
    m.add_function(wrap_pyfunction!(phi_low_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(gap_bound, m)?)?;
    m.add_function(wrap_pyfunction!(granular_expected_payoff, m)?)?;
    Ok(())
}
