//! Python bindings: hardware settings, a steppable network, and the
//! experiment drivers. Reports come back as plain dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use spinhop::circuit::calibrate_vdw as core_calibrate;
use spinhop::config::RunConfig;
use spinhop::network::{self as net, WeightMatrix};
use spinhop::oracle::{self, OracleNet};
use spinhop::tasks::maxcut::{self, DEFAULT_PENALTY};
use spinhop::tasks::recall::{recall_experiment, PatternSource, RecallSpec, TrialPlan};
use spinhop::tasks::{self as tasks, Graph};
use spinhop::{CalibrationMode, Error, NetworkState};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NumericFault { .. } => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn weights(rows: Vec<Vec<f64>>) -> PyResult<WeightMatrix> {
    WeightMatrix::from_rows(rows).map_err(py_err)
}

fn graph(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Graph> {
    Graph::new(n, edges.into_iter().map(|(i, j)| (i, j, 1))).map_err(py_err)
}

/// Device, integration and drive settings shared by every trial.
#[pyclass(module = "spinhop")]
#[derive(Clone)]
struct Hardware {
    inner: tasks::Hardware,
}

#[pymethods]
impl Hardware {
    /// `config` is a JSON document in the CLI configuration format; keyword
    /// arguments override it.
    #[new]
    #[pyo3(signature = (config=None, *, calibration=None, dt_ps=None, t_max_ns=None, w_mag=None, v_c=None))]
    fn new(
        config: Option<&str>,
        calibration: Option<String>,
        dt_ps: Option<f64>,
        t_max_ns: Option<f64>,
        w_mag: Option<f64>,
        v_c: Option<f64>,
    ) -> PyResult<Self> {
        let mut cfg = match config {
            Some(text) => RunConfig::from_json(text).map_err(py_err)?,
            None => RunConfig::default(),
        };
        if let Some(c) = calibration {
            cfg.hardware.calibration = c;
        }
        if let Some(v) = dt_ps {
            cfg.sim.dt_ps = v;
        }
        if let Some(v) = t_max_ns {
            cfg.sim.t_max_ns = v;
        }
        if let Some(v) = w_mag {
            cfg.hardware.w_mag_v = v;
        }
        if let Some(v) = v_c {
            cfg.hardware.v_c_v = v;
        }
        Ok(Hardware { inner: cfg.hardware().map_err(py_err)? })
    }

    #[getter]
    fn w_mag(&self) -> f64 {
        self.inner.w_mag
    }

    #[getter]
    fn v_c(&self) -> f64 {
        self.inner.v_c
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.sim.dt
    }

    #[getter]
    fn calibration(&self) -> String {
        self.inner.calibration.to_string()
    }

    /// Builds a fresh network, writes `input` (if given) and runs it to
    /// convergence.
    #[pyo3(signature = (weights, input=None))]
    fn run_trial<'py>(
        &self,
        py: Python<'py>,
        weights: Vec<Vec<f64>>,
        input: Option<Vec<bool>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let w = self::weights(weights)?;
        let report = py.allow_threads(|| self.inner.run_trial(w, input.as_deref())).map_err(py_err)?;
        to_py(py, &report)
    }

    fn network(&self, weights: Vec<Vec<f64>>) -> PyResult<Network> {
        let state = self.inner.build(self::weights(weights)?).map_err(py_err)?;
        Ok(Network { state, sim: self.inner.sim.clone(), v_c: self.inner.v_c })
    }

    fn __repr__(&self) -> String {
        format!(
            "Hardware(calibration={}, dt={:e}, w_mag={}, v_c={})",
            self.inner.calibration, self.inner.sim.dt, self.inner.w_mag, self.inner.v_c
        )
    }
}

/// One network that can be stepped by hand.
#[pyclass(module = "spinhop")]
struct Network {
    state: NetworkState,
    sim: net::SimConfig,
    v_c: f64,
}

#[pymethods]
impl Network {
    #[getter]
    fn n(&self) -> usize {
        self.state.n()
    }

    #[getter]
    fn time(&self) -> f64 {
        self.state.time()
    }

    #[getter]
    fn v_dw(&self) -> f64 {
        self.state.v_dw()
    }

    fn soma_positions(&self) -> Vec<f64> {
        self.state.soma_positions().to_vec()
    }

    fn read_states(&self) -> Vec<bool> {
        self.state.read_states()
    }

    fn energy<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.state.energy())
    }

    /// Advances one step; returns whether any wall moved.
    #[pyo3(signature = (dt=None))]
    fn step(&mut self, dt: Option<f64>) -> PyResult<bool> {
        Ok(self.state.step(dt.unwrap_or(self.sim.dt)).map_err(py_err)?.moved)
    }

    fn charge_up<'py>(&mut self, py: Python<'py>, pattern: Vec<bool>) -> PyResult<Bound<'py, PyAny>> {
        let summary =
            self.state.charge_up(&pattern, self.v_c, self.sim.chargeup_t_cap, &self.sim).map_err(py_err)?;
        to_py(py, &summary)
    }

    fn release_and_converge<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let report = self.state.release_and_converge(&self.sim).map_err(py_err)?;
        to_py(py, &report)
    }

    /// Net delivered power, dissipated power and worst KCL residual of the
    /// present circuit.
    fn power_audit(&self) -> PyResult<(f64, f64, f64)> {
        let a = self.state.power_audit().map_err(py_err)?;
        Ok((a.net_delivered, a.dissipated, a.max_kcl_residual))
    }
}

/// Soma-to-axon voltage for an `n`-neuron network.
#[pyfunction]
#[pyo3(signature = (n, mode="balanced"))]
fn calibrate_vdw(n: usize, mode: &str) -> PyResult<f64> {
    let mode: CalibrationMode = mode.parse().map_err(py_err)?;
    core_calibrate(&Default::default(), n, mode).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (patterns, w_mag=0.1, normalize=false))]
fn train_hebbian(patterns: Vec<Vec<bool>>, w_mag: f64, normalize: bool) -> PyResult<Vec<Vec<f64>>> {
    Ok(net::train_hebbian(&patterns, w_mag, normalize).map_err(py_err)?.to_rows())
}

#[pyfunction]
#[pyo3(signature = (n, edges, w_mag=0.1, penalty=DEFAULT_PENALTY))]
fn maxcut_weights(n: usize, edges: Vec<(usize, usize)>, w_mag: f64, penalty: f64) -> PyResult<Vec<Vec<f64>>> {
    Ok(net::set_weights_maxcut(&graph(n, edges)?, w_mag, penalty).map_err(py_err)?.to_rows())
}

/// Recall statistics over random trials, or over every input with
/// `exhaustive=True`.
#[pyfunction]
#[pyo3(signature = (n, patterns=1, trials=100, exhaustive=false, distortion=None, seed=0, hardware=None))]
#[allow(clippy::too_many_arguments)]
fn recall<'py>(
    py: Python<'py>,
    n: usize,
    patterns: usize,
    trials: usize,
    exhaustive: bool,
    distortion: Option<f64>,
    seed: u64,
    hardware: Option<Hardware>,
) -> PyResult<Bound<'py, PyAny>> {
    let hw = hardware.map(|h| h.inner).unwrap_or_default();
    let spec = RecallSpec {
        n,
        patterns: PatternSource::Random { count: patterns },
        plan: if exhaustive { TrialPlan::Exhaustive } else { TrialPlan::Random { trials } },
        distortion,
        normalize: false,
        seed,
    };
    let out = py.allow_threads(|| recall_experiment(&spec, &hw)).map_err(py_err)?;
    to_py(py, &out)
}

/// Runs max-cut on an unweighted graph. Without `best_known` the optimum is
/// found by brute force when the graph has at most 24 nodes.
#[pyfunction]
#[pyo3(signature = (n, edges, best_known=None, penalty=DEFAULT_PENALTY, hardware=None))]
fn max_cut<'py>(
    py: Python<'py>,
    n: usize,
    edges: Vec<(usize, usize)>,
    best_known: Option<i64>,
    penalty: f64,
    hardware: Option<Hardware>,
) -> PyResult<Bound<'py, PyAny>> {
    let hw = hardware.map(|h| h.inner).unwrap_or_default();
    let g = graph(n, edges)?;
    let out = py
        .allow_threads(|| match best_known {
            None if n <= 24 => maxcut::maxcut_vs_exhaustive(&g, penalty, &hw),
            _ => maxcut::maxcut_experiment(&g, best_known, penalty, &hw),
        })
        .map_err(py_err)?;
    to_py(py, &out)
}

#[pyfunction]
fn exhaustive_max_cut(n: usize, edges: Vec<(usize, usize)>) -> PyResult<(Vec<bool>, i64)> {
    tasks::exhaustive_max_cut(&graph(n, edges)?).map_err(py_err)
}

/// Ideal Hopfield reference: the fixed point reached from `input` under the
/// Hebbian weights of `patterns`.
#[pyfunction]
#[pyo3(signature = (patterns, input, seed=0, max_sweeps=100))]
fn oracle_recall(patterns: Vec<Vec<bool>>, input: Vec<bool>, seed: u64, max_sweeps: usize) -> PyResult<Vec<bool>> {
    let n = OracleNet::hebbian(&patterns, 0.0).map_err(py_err)?;
    if input.len() != n.n {
        return Err(PyValueError::new_err(format!("input has {} bits, expected {}", input.len(), n.n)));
    }
    Ok(oracle::oracle_converge(&n.with_states(input), max_sweeps, seed).map_err(py_err)?.states)
}

#[pymodule]
#[pyo3(name = "spinhop")]
fn spinhop_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Hardware>()?;
    m.add_class::<Network>()?;
    m.add_function(wrap_pyfunction!(calibrate_vdw, m)?)?;
    m.add_function(wrap_pyfunction!(train_hebbian, m)?)?;
    m.add_function(wrap_pyfunction!(maxcut_weights, m)?)?;
    m.add_function(wrap_pyfunction!(recall, m)?)?;
    m.add_function(wrap_pyfunction!(max_cut, m)?)?;
    m.add_function(wrap_pyfunction!(exhaustive_max_cut, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_recall, m)?)?;
    m.add("__doc__", "Simulator of an all-spintronic DW-MTJ Hopfield network.")?;
    Ok(())
}
