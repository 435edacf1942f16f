//! Python bindings: the graph type, both protocol executions, Monte Carlo
//! averaging, and the spectral-gap tools, exposed as the `pushpull_py`
//! extension module.

use std::collections::HashMap;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use pushpull::augmented;
use pushpull::delay::{make_schedule, DelayKind, DelaySpec};
use pushpull::digraph;
use pushpull::harness;
use pushpull::nalgebra::DMatrix;
use pushpull::protocol;
use pushpull::spectral;

fn to_py_err(e: pushpull::Error) -> PyErr {
    match &e {
        pushpull::Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn delay_spec(kind: &str, tau_bar: usize, seed: u64) -> PyResult<DelaySpec> {
    let kind = DelayKind::parse(kind).map_err(to_py_err)?;
    Ok(match kind {
        DelayKind::Zero => DelaySpec::zero(),
        DelayKind::Constant => DelaySpec::constant(tau_bar),
        DelayKind::UniformIid => DelaySpec::uniform(tau_bar, seed),
        DelayKind::Trace => {
            return Err(PyValueError::new_err(
                "trace schedules are not exposed through the bindings; use the CLI",
            ))
        }
    })
}

fn matrix_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("matrix rows have unequal lengths"));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// A fixed directed graph; edges are `(receiver, sender)` pairs with
/// 0-based node indices, and every node has an implicit self-loop.
#[pyclass]
struct Digraph {
    inner: digraph::Digraph,
}

#[pymethods]
impl Digraph {
    #[new]
    fn new(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        digraph::Digraph::from_edge_list(n, &edges)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    /// Loads the edge-list file format used by the CLI.
    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        digraph::Digraph::from_file(path)
            .map(|inner| Self { inner })
            .map_err(to_py_err)
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.inner
            .edges()
            .iter()
            .map(|e| (e.receiver, e.sender))
            .collect()
    }

    fn in_neighbors(&self, node: usize) -> Vec<usize> {
        self.inner.in_neighbors(node).to_vec()
    }

    fn out_neighbors(&self, node: usize) -> Vec<usize> {
        self.inner.out_neighbors(node).to_vec()
    }

    fn in_degree(&self, node: usize) -> usize {
        self.inner.in_degree(node)
    }

    fn out_degree(&self, node: usize) -> usize {
        self.inner.out_degree(node)
    }

    fn is_strongly_connected(&self) -> bool {
        self.inner.is_strongly_connected()
    }

    /// Row-stochastic pull weights as nested lists.
    fn pull_weights(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.pull_weights())
    }

    /// Column-stochastic push weights as nested lists.
    fn push_weights(&self) -> Vec<Vec<f64>> {
        matrix_rows(&self.inner.push_weights())
    }

    /// Exclusive upper bound for safe surplus gains.
    fn gamma_upper_bound(&self) -> f64 {
        spectral::gamma_upper_bound(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Digraph(nodes={}, edges={}, strongly_connected={})",
            self.inner.node_count(),
            self.inner.edge_count(),
            self.inner.is_strongly_connected()
        )
    }
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Per-iteration history of one run. Row 0 is the initial condition.
#[pyclass]
struct Trajectory {
    inner: protocol::Trajectory,
}

#[pymethods]
impl Trajectory {
    /// States per iteration, `x[k][node]`.
    #[getter]
    fn x(&self) -> Vec<Vec<f64>> {
        self.inner.x.clone()
    }

    /// Surpluses per iteration, `s[k][node]`.
    #[getter]
    fn s(&self) -> Vec<Vec<f64>> {
        self.inner.s.clone()
    }

    /// Surplus mass in transit per iteration.
    #[getter]
    fn in_flight_surplus(&self) -> Vec<f64> {
        self.inner.in_flight_surplus.clone()
    }

    /// Consensus error against the initial average, per iteration.
    #[getter]
    fn error(&self) -> Vec<f64> {
        self.inner.error.clone()
    }

    #[getter]
    fn initial_average(&self) -> f64 {
        self.inner.initial_average
    }

    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    fn final_x(&self) -> Vec<f64> {
        self.inner.final_x().to_vec()
    }

    fn final_s(&self) -> Vec<f64> {
        self.inner.final_s().to_vec()
    }

    /// Largest deviation of `sum(x) + sum(s) + in-flight` from its initial
    /// value over the whole run.
    fn max_mass_drift(&self) -> f64 {
        self.inner.max_mass_drift()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trajectory(iterations={}, final_error={:.3e})",
            self.inner.iterations(),
            self.inner.error.last().copied().unwrap_or(f64::NAN)
        )
    }
}

/// Message-level run of the delay-robust protocol.
#[pyfunction]
#[pyo3(signature = (graph, gamma, x0, iters, tau_bar=0, delay_kind="uniform", seed=1))]
fn run_rppac(
    graph: &Digraph,
    gamma: f64,
    x0: Vec<f64>,
    iters: usize,
    tau_bar: usize,
    delay_kind: &str,
    seed: u64,
) -> PyResult<Trajectory> {
    let spec = delay_spec(delay_kind, tau_bar, seed)?;
    let schedule = make_schedule(&spec, &graph.inner).map_err(to_py_err)?;
    protocol::run_rppac(&graph.inner, &schedule, gamma, &x0, iters)
        .map(|inner| Trajectory { inner })
        .map_err(to_py_err)
}

/// Delay-free baseline iteration with static weights.
#[pyfunction]
fn run_ppac(graph: &Digraph, gamma: f64, x0: Vec<f64>, iters: usize) -> PyResult<Trajectory> {
    protocol::run_ppac(&graph.inner, gamma, &x0, iters)
        .map(|inner| Trajectory { inner })
        .map_err(to_py_err)
}

/// Matrix-form run over the delay-augmented node set; matches `run_rppac`
/// on the same schedule.
#[pyfunction]
#[pyo3(signature = (graph, gamma, x0, iters, tau_bar=0, delay_kind="uniform", seed=1))]
fn run_matrix_form(
    graph: &Digraph,
    gamma: f64,
    x0: Vec<f64>,
    iters: usize,
    tau_bar: usize,
    delay_kind: &str,
    seed: u64,
) -> PyResult<Trajectory> {
    let spec = delay_spec(delay_kind, tau_bar, seed)?;
    let schedule = make_schedule(&spec, &graph.inner).map_err(to_py_err)?;
    augmented::run_matrix_form(&graph.inner, &schedule, gamma, &x0, iters)
        .map(|inner| Trajectory { inner })
        .map_err(to_py_err)
}

/// Mean squared deviation from a target average.
#[pyfunction]
fn consensus_error(x: Vec<f64>, x_bar: f64) -> f64 {
    harness::consensus_error(&x, x_bar)
}

/// Mean consensus-error curve over `runs` seeded runs (seeds
/// `seed, seed+1, ...`) with `x_j(0) = j`.
#[pyfunction]
#[pyo3(signature = (graph, gamma, iters, runs, tau_bar=0, delay_kind="uniform", seed=1))]
fn monte_carlo_mean_error(
    graph: &Digraph,
    gamma: f64,
    iters: usize,
    runs: usize,
    tau_bar: usize,
    delay_kind: &str,
    seed: u64,
) -> PyResult<Vec<f64>> {
    if runs == 0 {
        return Err(PyValueError::new_err("runs must be at least 1"));
    }
    let n = graph.inner.node_count();
    let x0: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let mut mean = vec![0.0; iters + 1];
    for run in 0..runs {
        let spec = delay_spec(delay_kind, tau_bar, seed + run as u64)?;
        let schedule = make_schedule(&spec, &graph.inner).map_err(to_py_err)?;
        let trajectory =
            protocol::run_rppac(&graph.inner, &schedule, gamma, &x0, iters).map_err(to_py_err)?;
        for (acc, e) in mean.iter_mut().zip(&trajectory.error) {
            *acc += e;
        }
    }
    for v in &mut mean {
        *v /= runs as f64;
    }
    Ok(mean)
}

/// Eigenvalue moduli (descending) and spectral gap of a dense real matrix
/// given as nested lists.
#[pyfunction]
fn eigen_moduli(matrix: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, f64)> {
    let m = matrix_from_rows(matrix)?;
    let summary = spectral::eigen_moduli(&m).map_err(to_py_err)?;
    Ok((summary.moduli, summary.gap))
}

/// Mean spectral gap of the per-round system matrix over random snapshots.
#[pyfunction]
#[pyo3(signature = (graph, gamma, tau_bar, samples=100, seed=1))]
fn mean_spectral_gap(
    graph: &Digraph,
    gamma: f64,
    tau_bar: usize,
    samples: usize,
    seed: u64,
) -> PyResult<f64> {
    spectral::mean_spectral_gap(&graph.inner, gamma, tau_bar, samples, seed).map_err(to_py_err)
}

/// Mean spectral gap per surplus gain; returns `{gamma: mean_gap}`.
#[pyfunction]
#[pyo3(signature = (graph, tau_bar, gammas, samples=100, seed=1))]
fn sweep_gamma(
    graph: &Digraph,
    tau_bar: usize,
    gammas: Vec<f64>,
    samples: usize,
    seed: u64,
) -> PyResult<HashMap<String, f64>> {
    let table =
        spectral::sweep_gamma(&graph.inner, tau_bar, &gammas, samples, seed).map_err(to_py_err)?;
    Ok(table
        .into_iter()
        .map(|(gamma, gap)| (format!("{gamma}"), gap))
        .collect())
}

/// Mean spectral gap per delay bound; returns `{tau_bar: mean_gap}`.
#[pyfunction]
#[pyo3(signature = (graph, gamma, tau_bars, samples=100, seed=1))]
fn mean_gap_vs_delay(
    graph: &Digraph,
    gamma: f64,
    tau_bars: Vec<usize>,
    samples: usize,
    seed: u64,
) -> PyResult<HashMap<usize, f64>> {
    let table = spectral::mean_gap_vs_delay(&graph.inner, gamma, &tau_bars, samples, seed)
        .map_err(to_py_err)?;
    Ok(table.into_iter().collect())
}

#[pymodule]
fn pushpull_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Digraph>()?;
    m.add_class::<Trajectory>()?;
    m.add_function(wrap_pyfunction!(run_rppac, m)?)?;
    m.add_function(wrap_pyfunction!(run_ppac, m)?)?;
    m.add_function(wrap_pyfunction!(run_matrix_form, m)?)?;
    m.add_function(wrap_pyfunction!(consensus_error, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_mean_error, m)?)?;
    m.add_function(wrap_pyfunction!(eigen_moduli, m)?)?;
    m.add_function(wrap_pyfunction!(mean_spectral_gap, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(mean_gap_vs_delay, m)?)?;
    Ok(())
}
