//! Scenario configuration, Monte Carlo experiment execution, consensus-error
//! metrics, and CSV export.
//!
//! Runs are fixed-horizon and fully reproducible: run `i` of a Monte Carlo
//! batch uses seed `base + i`, and curves are averaged in run-index order so
//! output bytes never depend on scheduling.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use crate::delay::{load_trace, make_schedule, DelayKind, DelaySpec};
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::protocol::{run_rppac, Trajectory};
use crate::rng::{hash3, SplitMix64};
use crate::spectral::gamma_upper_bound;

/// Mean squared deviation from the target average:
/// `(1/n) * sum_j (x_j - x_bar)^2`.
pub fn consensus_error(x: &[f64], x_bar: f64) -> f64 {
    x.iter().map(|&v| (v - x_bar) * (v - x_bar)).sum::<f64>() / x.len() as f64
}

/// How initial states are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum InitMode {
    /// `x_j(0) = j` with 1-based node numbering.
    Index,
    Constant(f64),
    Explicit(Vec<f64>),
    /// One value per line, `#` comments and blank lines ignored.
    FromFile(PathBuf),
    /// Uniform in `[0, 1)`, drawn from the scenario seed.
    Random,
}

impl InitMode {
    /// Parses the CLI syntax `index | const:<v> | file:<path> | random`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "index" {
            Ok(InitMode::Index)
        } else if s == "random" {
            Ok(InitMode::Random)
        } else if let Some(v) = s.strip_prefix("const:") {
            v.parse()
                .map(InitMode::Constant)
                .map_err(|_| Error::Config(format!("invalid constant init value {v:?}")))
        } else if let Some(p) = s.strip_prefix("file:") {
            Ok(InitMode::FromFile(PathBuf::from(p)))
        } else {
            Err(Error::Config(format!(
                "unknown init mode {s:?} (expected index|const:<v>|file:<path>|random)"
            )))
        }
    }
}

const INIT_STREAM: u64 = 0x1417;

/// Materializes the initial state vector for an `n`-node run.
pub fn build_x0(init: &InitMode, n: usize, seed: u64) -> Result<Vec<f64>> {
    match init {
        InitMode::Index => Ok((1..=n).map(|j| j as f64).collect()),
        InitMode::Constant(c) => Ok(vec![*c; n]),
        InitMode::Explicit(values) => {
            if values.len() != n {
                return Err(Error::Config(format!(
                    "explicit init has {} values for a {n}-node graph",
                    values.len()
                )));
            }
            Ok(values.clone())
        }
        InitMode::FromFile(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut values = Vec::new();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                values.push(line.parse::<f64>().map_err(|_| {
                    Error::Config(format!(
                        "init file line {}: expected a number, got {line:?}",
                        lineno + 1
                    ))
                })?);
            }
            if values.len() != n {
                return Err(Error::Config(format!(
                    "init file has {} values for a {n}-node graph",
                    values.len()
                )));
            }
            Ok(values)
        }
        InitMode::Random => {
            let mut rng = SplitMix64::new(hash3(seed, INIT_STREAM, 0));
            Ok((0..n).map(|_| rng.next_f64()).collect())
        }
    }
}

/// Everything a run needs. Defaults mirror the usual experiment setup:
/// `gamma = 0.1`, 300 iterations, 100 Monte Carlo runs, index initialization,
/// uniform delays.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub graph: PathBuf,
    pub delay_kind: DelayKind,
    pub tau_bar: usize,
    pub trace: Option<PathBuf>,
    pub gamma: f64,
    pub init: InitMode,
    pub iters: usize,
    pub runs: usize,
    pub seed: u64,
    /// Skip the conservative gain validation.
    pub force_gamma: bool,
}

impl ScenarioConfig {
    pub fn new(graph: impl Into<PathBuf>) -> Self {
        Self {
            graph: graph.into(),
            delay_kind: DelayKind::UniformIid,
            tau_bar: 0,
            trace: None,
            gamma: 0.1,
            init: InitMode::Index,
            iters: 300,
            runs: 100,
            seed: 1,
            force_gamma: false,
        }
    }
}

/// Per-iteration mean consensus error, length `iters + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorCurve {
    pub values: Vec<f64>,
}

impl ErrorCurve {
    pub fn final_value(&self) -> f64 {
        *self.values.last().unwrap()
    }
}

fn load_and_validate(cfg: &ScenarioConfig) -> Result<(Digraph, Option<DelaySpec>)> {
    let g = Digraph::from_file(&cfg.graph)?;
    if !g.is_strongly_connected() {
        eprintln!(
            "warning: {} is not strongly connected; average consensus is not guaranteed",
            cfg.graph.display()
        );
    }
    if !cfg.force_gamma {
        let bound = gamma_upper_bound(&g);
        if !(cfg.gamma > 0.0 && cfg.gamma < bound) {
            return Err(Error::GammaOutOfBounds {
                gamma: cfg.gamma,
                bound,
            });
        }
    } else if cfg.gamma <= 0.0 {
        return Err(Error::Config(format!(
            "surplus gain must be positive, got {}",
            cfg.gamma
        )));
    }
    let trace_table = match cfg.delay_kind {
        DelayKind::Trace => {
            let path = cfg.trace.as_ref().ok_or_else(|| {
                Error::Config("delay kind \"trace\" requires a trace file".into())
            })?;
            Some(load_trace(path)?)
        }
        _ => None,
    };
    let base_spec = trace_table.map(|t| DelaySpec::from_trace(t, cfg.tau_bar));
    Ok((g, base_spec))
}

fn spec_for_seed(cfg: &ScenarioConfig, trace_spec: &Option<DelaySpec>, seed: u64) -> DelaySpec {
    match cfg.delay_kind {
        DelayKind::Zero => DelaySpec::zero(),
        DelayKind::Constant => DelaySpec::constant(cfg.tau_bar),
        DelayKind::UniformIid => DelaySpec::uniform(cfg.tau_bar, seed),
        DelayKind::Trace => trace_spec.clone().expect("trace spec prepared"),
    }
}

fn run_one(
    cfg: &ScenarioConfig,
    g: &Digraph,
    trace_spec: &Option<DelaySpec>,
    seed: u64,
) -> Result<Trajectory> {
    let x0 = build_x0(&cfg.init, g.node_count(), seed)?;
    let spec = spec_for_seed(cfg, trace_spec, seed);
    let schedule = make_schedule(&spec, g)?;
    run_rppac(g, &schedule, cfg.gamma, &x0, cfg.iters)
}

/// Executes a single run with the scenario seed. Returns the full trajectory
/// and its consensus-error curve.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<(Trajectory, ErrorCurve)> {
    let (g, trace_spec) = load_and_validate(cfg)?;
    let trajectory = run_one(cfg, &g, &trace_spec, cfg.seed)?;
    let curve = ErrorCurve {
        values: trajectory.error.clone(),
    };
    Ok((trajectory, curve))
}

/// Mean consensus-error curve over `cfg.runs` runs with seeds
/// `seed, seed+1, ...`, averaged in run order.
pub fn monte_carlo(cfg: &ScenarioConfig) -> Result<ErrorCurve> {
    if cfg.runs == 0 {
        return Err(Error::Config("runs must be at least 1".into()));
    }
    let (g, trace_spec) = load_and_validate(cfg)?;
    let mut mean = vec![0.0; cfg.iters + 1];
    for run in 0..cfg.runs {
        let trajectory = run_one(cfg, &g, &trace_spec, cfg.seed + run as u64)?;
        for (acc, e) in mean.iter_mut().zip(&trajectory.error) {
            *acc += e;
        }
    }
    for v in &mut mean {
        *v /= cfg.runs as f64;
    }
    Ok(ErrorCurve { values: mean })
}

/// Trajectory CSV: header `k,x_1..x_n,s_1..s_n,error`, one row per iteration,
/// full double precision (values round-trip exactly).
pub fn trajectory_csv(t: &Trajectory) -> String {
    let n = t.node_count();
    let mut out = String::from("k");
    for j in 1..=n {
        out.push_str(&format!(",x_{j}"));
    }
    for j in 1..=n {
        out.push_str(&format!(",s_{j}"));
    }
    out.push_str(",error\n");
    for k in 0..t.x.len() {
        out.push_str(&format!("{k}"));
        for v in &t.x[k] {
            out.push_str(&format!(",{v}"));
        }
        for v in &t.s[k] {
            out.push_str(&format!(",{v}"));
        }
        out.push_str(&format!(",{}\n", t.error[k]));
    }
    out
}

/// Error-curve CSV: header `k,mean_error`.
pub fn curve_csv(c: &ErrorCurve) -> String {
    let mut out = String::from("k,mean_error\n");
    for (k, v) in c.values.iter().enumerate() {
        out.push_str(&format!("{k},{v}\n"));
    }
    out
}

/// Sweep CSV with the given x-axis header, e.g. `gamma,mean_gap`.
pub fn sweep_csv<X: Display>(x_name: &str, rows: &[(X, f64)]) -> String {
    let mut out = format!("{x_name},mean_gap\n");
    for (x, gap) in rows {
        out.push_str(&format!("{x},{gap}\n"));
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Parses the optional line-oriented `key=value` config file. Keys use the
/// long CLI flag names without the leading dashes; `#` comments and blank
/// lines are ignored. Later entries win; flags override everything.
pub fn parse_config_file(path: impl AsRef<Path>) -> Result<HashMap<String, String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}: line {}: expected key=value, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
