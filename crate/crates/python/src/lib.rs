//! Python bindings: scenarios, whole runs, step-by-step simulation, sweeps
//! and the radio/kernel primitives.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use swarmcell::export::{self, RunSummary};
use swarmcell::kernels::{self, KernelParams};
use swarmcell::metrics::compute_metrics;
use swarmcell::model::{ControlGains, RadioParams, Vec3};
use swarmcell::orchestrator::{run_with, RunOptions, RunOutput, WorldState};
use swarmcell::{radio, ClassMetrics, ControllerMode, Error, ScenarioConfig, TickMetrics};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn v3(p: (f64, f64, f64)) -> Vec3 {
    Vec3::new(p.0, p.1, p.2)
}

fn parse_mode(mode: &str) -> PyResult<ControllerMode> {
    match mode {
        "qos" | "qos_driven" => Ok(ControllerMode::QosDriven),
        "flocking" | "flocking_baseline" => Ok(ControllerMode::FlockingBaseline),
        other => Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    }
}

fn class_dict<'py>(py: Python<'py>, c: &ClassMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("served_pct", c.served_pct)?;
    d.set_item("mean_rate_mbps", c.mean_rate / 1e6)?;
    d.set_item("fulfilled_pct", c.fulfilled_pct)?;
    Ok(d)
}

fn metrics_dict<'py>(py: Python<'py>, m: &TickMetrics) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("time", m.time)?;
    d.set_item("premium", class_dict(py, &m.premium)?)?;
    d.set_item("regular", class_dict(py, &m.regular)?)?;
    d.set_item("all", class_dict(py, &m.all)?)?;
    d.set_item("p0_objective_mbps", m.p0_objective / 1e6)?;
    d.set_item("active_channels", m.active_channels)?;
    Ok(d)
}

/// Scenario description loaded from TOML.
#[pyclass(name = "Scenario", module = "pyswarmcell", skip_from_py_object)]
#[derive(Clone)]
struct PyScenario {
    cfg: ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { cfg: ScenarioConfig::from_file(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { cfg: ScenarioConfig::from_toml_str(text).map_err(to_py)? })
    }

    fn to_toml(&self) -> String {
        self.cfg.to_toml_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.cfg.validate().map_err(to_py)
    }

    #[getter]
    fn name(&self) -> String {
        self.cfg.name.clone()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.cfg.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.cfg.seed = seed;
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.cfg.duration
    }

    #[setter]
    fn set_duration(&mut self, duration: f64) {
        self.cfg.duration = duration;
    }

    #[getter]
    fn uav_count(&self) -> usize {
        self.cfg.uav_count
    }

    #[setter]
    fn set_uav_count(&mut self, n: usize) {
        self.cfg.uav_count = n;
    }

    #[getter]
    fn mode(&self) -> &'static str {
        match self.cfg.controller_mode {
            ControllerMode::QosDriven => "qos",
            ControllerMode::FlockingBaseline => "flocking",
        }
    }

    #[setter]
    fn set_mode(&mut self, mode: &str) -> PyResult<()> {
        self.cfg.controller_mode = parse_mode(mode)?;
        Ok(())
    }

    #[getter]
    fn user_count(&self) -> usize {
        self.cfg.total_users()
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, seed={}, uavs={}, users={}, duration={})",
            self.cfg.name,
            self.cfg.seed,
            self.cfg.uav_count,
            self.cfg.total_users(),
            self.cfg.duration
        )
    }
}

/// Result of a complete run.
#[pyclass(name = "RunResult", module = "pyswarmcell")]
struct PyRunResult {
    name: String,
    seed: u64,
    out: RunOutput,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn ticks(&self) -> usize {
        self.out.metrics.len()
    }

    /// Per-tick metrics as dicts, rates in Mbps.
    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.out.metrics.iter().map(|m| metrics_dict(py, m)).collect()
    }

    /// Mean over the last 10% of ticks.
    fn steady_state<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &self.out.steady_state())
    }

    /// Channel switches as (time, uav, from, to) tuples.
    fn switch_events(&self) -> Vec<(f64, usize, usize, usize)> {
        self.out.switches.iter().map(|e| (e.time, e.uav_id, e.from, e.to)).collect()
    }

    /// Final UAV positions as (x, y, z) tuples, dead UAVs included.
    fn final_positions(&self) -> Vec<(f64, f64, f64)> {
        self.out.final_world.uavs.iter().map(|u| (u.position.x, u.position.y, u.position.z)).collect()
    }

    fn metrics_csv(&self) -> String {
        export::metrics_csv(&self.out.metrics)
    }

    fn trace_csv(&self) -> String {
        export::trace_csv(&self.out.trace)
    }

    fn summary_json(&self) -> String {
        RunSummary::new(&self.name, self.seed, &self.out).to_json()
    }

    /// Writes the CSV and JSON outputs into `dir`.
    fn write(&self, dir: PathBuf) -> PyResult<()> {
        let summary = RunSummary::new(&self.name, self.seed, &self.out);
        export::write_run(&dir, &summary, &self.out).map_err(to_py)
    }
}

/// Runs a scenario to completion. The GIL is released while simulating.
#[pyfunction]
#[pyo3(signature = (scenario, user_trace = false))]
fn run(py: Python<'_>, scenario: &PyScenario, user_trace: bool) -> PyResult<PyRunResult> {
    let cfg = scenario.cfg.clone();
    let out = py.detach(|| run_with(&cfg, &RunOptions { record_user_trace: user_trace })).map_err(to_py)?;
    Ok(PyRunResult { name: cfg.name.clone(), seed: cfg.seed, out })
}

/// Steady-state metrics for each UAV count, as (count, dict) pairs.
#[pyfunction]
fn sweep<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    uav_counts: Vec<usize>,
) -> PyResult<Vec<(usize, Bound<'py, PyDict>)>> {
    let cfg = scenario.cfg.clone();
    let res = py.detach(|| swarmcell::run_sweep(&cfg, &uav_counts)).map_err(to_py)?;
    res.entries.iter().map(|e| Ok((e.uav_count, metrics_dict(py, &e.steady)?))).collect()
}

/// Tick-by-tick simulation.
#[pyclass(name = "Simulation", module = "pyswarmcell")]
struct PySimulation {
    world: WorldState,
}

#[pymethods]
impl PySimulation {
    #[new]
    fn new(scenario: &PyScenario) -> PyResult<Self> {
        Ok(Self { world: WorldState::from_config(&scenario.cfg).map_err(to_py)? })
    }

    /// Advances `n` ticks.
    #[pyo3(signature = (n = 1))]
    fn step(&mut self, n: usize) -> PyResult<()> {
        for _ in 0..n {
            self.world.step().map_err(to_py)?;
        }
        Ok(())
    }

    #[getter]
    fn tick(&self) -> u64 {
        self.world.tick
    }

    #[getter]
    fn time(&self) -> f64 {
        self.world.time
    }

    fn uav_positions(&self) -> Vec<(f64, f64, f64)> {
        self.world.uavs.iter().map(|u| (u.position.x, u.position.y, u.position.z)).collect()
    }

    fn uav_channels(&self) -> Vec<usize> {
        self.world.uavs.iter().map(|u| u.channel).collect()
    }

    fn alive(&self) -> Vec<bool> {
        self.world.uavs.iter().map(|u| u.alive).collect()
    }

    /// Achieved rate per user in Mbps (0 when unserved) as of the last
    /// completed tick.
    fn user_rates(&self) -> Vec<f64> {
        self.world
            .users
            .iter()
            .map(|u| if u.serving_uav.is_some() { u.achieved_rate / 1e6 } else { 0.0 })
            .collect()
    }

    fn serving_uavs(&self) -> Vec<Option<usize>> {
        self.world.users.iter().map(|u| u.serving_uav).collect()
    }

    /// Fails `fraction` of the alive UAVs now; returns their ids.
    fn inject_failures(&mut self, fraction: f64) -> PyResult<Vec<usize>> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(PyValueError::new_err("fraction must lie in [0, 1]"));
        }
        Ok(self.world.inject_failures(fraction))
    }

    fn metrics<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        metrics_dict(py, &compute_metrics(&self.world))
    }

    /// Control input the given UAV would apply to the current state.
    fn control_input(&self, uav_id: usize) -> PyResult<(f64, f64, f64)> {
        if uav_id >= self.world.uavs.len() {
            return Err(PyIndexError::new_err("no such UAV"));
        }
        let u = kernels::control_input(
            uav_id,
            &self.world.uavs,
            &self.world.users,
            &self.world.kernel,
            self.world.mode,
        );
        Ok((u.x, u.y, u.z))
    }
}

/// Mean air-to-ground path loss in dB with default radio parameters.
#[pyfunction]
fn path_loss(uav: (f64, f64, f64), user: (f64, f64, f64)) -> PyResult<f64> {
    radio::path_loss(v3(uav), v3(user), &RadioParams::default()).map_err(to_py)
}

/// (path loss dB, SINR linear, rate Mbps) for one link.
#[pyfunction]
#[pyo3(signature = (uav, user, interference_mw = 0.0))]
fn link_budget(
    uav: (f64, f64, f64),
    user: (f64, f64, f64),
    interference_mw: f64,
) -> PyResult<(f64, f64, f64)> {
    let lb =
        radio::link_budget(v3(uav), v3(user), interference_mw, &RadioParams::default()).map_err(to_py)?;
    Ok((lb.path_loss, lb.sinr, lb.rate / 1e6))
}

#[pyfunction]
fn bump(z: f64, gamma: f64) -> f64 {
    kernels::bump(z, gamma)
}

#[pyfunction]
#[pyo3(signature = (z, eps = 0.1))]
fn sigma_norm(z: (f64, f64, f64), eps: f64) -> f64 {
    kernels::sigma_norm(v3(z), eps)
}

/// Spacing sigmoid with the default gains.
#[pyfunction]
fn phi_sigmoid(z: f64) -> f64 {
    kernels::phi_sigmoid(z, &KernelParams::new(&ControlGains::default()))
}

#[pymodule]
fn pyswarmcell(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PySimulation>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(path_loss, m)?)?;
    m.add_function(wrap_pyfunction!(link_budget, m)?)?;
    m.add_function(wrap_pyfunction!(bump, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_norm, m)?)?;
    m.add_function(wrap_pyfunction!(phi_sigmoid, m)?)?;
    Ok(())
}
