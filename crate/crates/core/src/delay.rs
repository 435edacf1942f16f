//! Deterministic per-link delay schedules and arrival bookkeeping.
//!
//! A schedule resolves `(edge, send time) -> delay` for delays that are
//! heterogeneous, time-varying, and bounded per link. Self-delays are
//! identically zero. The realization is a pure function of the spec and its
//! seed, indexed by `(edge id, send time)`, so queries are random-access: the
//! message-level and matrix-form simulators see the same draws regardless of
//! query order. Delays never drop or duplicate messages; reordering across
//! send times is allowed.

use std::collections::HashMap;
use std::path::Path;

use crate::digraph::{Digraph, Edge};
use crate::error::{Error, Result};
use crate::rng::hash3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DelayKind {
    /// Every delay is zero.
    Zero,
    /// Every transmission on a link takes that link's maximum delay.
    Constant,
    /// Each delay drawn independently and uniformly from `{0, ..., bound}`.
    UniformIid,
    /// Delays read from an explicit `(edge, send time) -> delay` table.
    Trace,
}

impl DelayKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(DelayKind::Zero),
            "constant" => Ok(DelayKind::Constant),
            "uniform" => Ok(DelayKind::UniformIid),
            "trace" => Ok(DelayKind::Trace),
            other => Err(Error::Config(format!(
                "unknown delay kind {other:?} (expected zero|constant|uniform|trace)"
            ))),
        }
    }
}

/// Declarative description of a delay process.
#[derive(Clone, Debug)]
pub struct DelaySpec {
    pub kind: DelayKind,
    /// Network-wide maximum delay.
    pub tau_bar: usize,
    /// Optional per-link maxima; when supplied, must cover every edge and
    /// stay within `tau_bar`.
    pub per_link_bounds: Option<HashMap<Edge, usize>>,
    pub seed: u64,
    /// Required for [`DelayKind::Trace`].
    pub trace: Option<HashMap<(Edge, usize), usize>>,
}

impl DelaySpec {
    pub fn zero() -> Self {
        Self {
            kind: DelayKind::Zero,
            tau_bar: 0,
            per_link_bounds: None,
            seed: 0,
            trace: None,
        }
    }

    pub fn constant(tau_bar: usize) -> Self {
        Self {
            kind: DelayKind::Constant,
            tau_bar,
            per_link_bounds: None,
            seed: 0,
            trace: None,
        }
    }

    pub fn uniform(tau_bar: usize, seed: u64) -> Self {
        Self {
            kind: DelayKind::UniformIid,
            tau_bar,
            per_link_bounds: None,
            seed,
            trace: None,
        }
    }

    pub fn from_trace(trace: HashMap<(Edge, usize), usize>, tau_bar: usize) -> Self {
        Self {
            kind: DelayKind::Trace,
            tau_bar,
            per_link_bounds: None,
            seed: 0,
            trace: Some(trace),
        }
    }
}

/// One message landing at a node: who sent it, when, and how late it is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arrival {
    pub sender: usize,
    pub send_time: usize,
    pub delay: usize,
}

/// A resolved delay process over the edges of one graph.
///
/// Immutable and random-access; safe for concurrent reads.
#[derive(Clone, Debug)]
pub struct DelaySchedule {
    kind: DelayKind,
    seed: u64,
    tau_bar: usize,
    edges: Vec<Edge>,
    edge_ids: HashMap<Edge, usize>,
    bounds: Vec<usize>,
    trace: Option<HashMap<(usize, usize), usize>>,
}

/// Resolves a spec against a graph. Validates per-link bounds (coverage and
/// `bound <= tau_bar`) and trace entries (known edges, delays within bounds).
pub fn make_schedule(spec: &DelaySpec, g: &Digraph) -> Result<DelaySchedule> {
    let edges = g.edges().to_vec();
    let edge_ids: HashMap<Edge, usize> = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();

    let mut bounds = vec![spec.tau_bar; edges.len()];
    if let Some(per_link) = &spec.per_link_bounds {
        for (edge, &bound) in per_link {
            let id = edge_ids
                .get(edge)
                .copied()
                .ok_or(Error::UnknownEdge { edge: *edge })?;
            if bound > spec.tau_bar {
                return Err(Error::DelaySpec(format!(
                    "per-link bound {bound} on edge {edge} exceeds tau_bar {}",
                    spec.tau_bar
                )));
            }
            bounds[id] = bound;
        }
        for (id, edge) in edges.iter().enumerate() {
            if !per_link.contains_key(edge) {
                let _ = id;
                return Err(Error::DelaySpec(format!(
                    "per-link bounds supplied but edge {edge} is not covered"
                )));
            }
        }
    }

    let trace = match (spec.kind, &spec.trace) {
        (DelayKind::Trace, Some(table)) => {
            let mut resolved = HashMap::with_capacity(table.len());
            for (&(edge, k), &delay) in table {
                let id = edge_ids
                    .get(&edge)
                    .copied()
                    .ok_or(Error::UnknownEdge { edge })?;
                if delay > bounds[id] {
                    return Err(Error::DelaySpec(format!(
                        "trace delay {delay} on edge {edge} at k={k} exceeds bound {}",
                        bounds[id]
                    )));
                }
                resolved.insert((id, k), delay);
            }
            Some(resolved)
        }
        (DelayKind::Trace, None) => {
            return Err(Error::DelaySpec("trace kind requires a trace table".into()))
        }
        _ => None,
    };

    Ok(DelaySchedule {
        kind: spec.kind,
        seed: spec.seed,
        tau_bar: spec.tau_bar,
        edges,
        edge_ids,
        bounds,
        trace,
    })
}

impl DelaySchedule {
    pub fn tau_bar(&self) -> usize {
        self.tau_bar
    }

    /// Delay of the message sent on `sender -> receiver` at time `k`.
    /// A self-pair always answers 0; an edge absent from the graph is an error.
    pub fn delay(&self, receiver: usize, sender: usize, k: usize) -> Result<usize> {
        if receiver == sender {
            return Ok(0);
        }
        let edge = Edge::new(receiver, sender);
        let id = self
            .edge_ids
            .get(&edge)
            .copied()
            .ok_or(Error::UnknownEdge { edge })?;
        self.delay_by_id(id, k)
    }

    pub(crate) fn delay_by_id(&self, id: usize, k: usize) -> Result<usize> {
        let bound = self.bounds[id];
        match self.kind {
            DelayKind::Zero => Ok(0),
            DelayKind::Constant => Ok(bound),
            DelayKind::UniformIid => {
                Ok((hash3(self.seed, id as u64, k as u64) % (bound as u64 + 1)) as usize)
            }
            DelayKind::Trace => self
                .trace
                .as_ref()
                .and_then(|t| t.get(&(id, k)).copied())
                .ok_or(Error::MissingTraceEntry {
                    edge: self.edges[id],
                    send_time: k,
                }),
        }
    }

    /// Messages landing at `receiver` exactly at time `k`: every
    /// `(sender, send_time = k - d, d)` with `delay(edge, k - d) = d`.
    ///
    /// The implicit self message is not listed; callers account for the
    /// self-loop directly. Sorted by `(sender, send_time)`. Several arrivals
    /// can share an edge when distinct send times land together.
    pub fn arrivals_at(&self, g: &Digraph, receiver: usize, k: usize) -> Result<Vec<Arrival>> {
        let mut out = Vec::new();
        for &sender in g.in_neighbors(receiver) {
            let edge = Edge::new(receiver, sender);
            let id = self
                .edge_ids
                .get(&edge)
                .copied()
                .ok_or(Error::UnknownEdge { edge })?;
            let max_delta = self.bounds[id].min(k);
            for delta in (0..=max_delta).rev() {
                let send_time = k - delta;
                if self.delay_by_id(id, send_time)? == delta {
                    out.push(Arrival {
                        sender,
                        send_time,
                        delay: delta,
                    });
                }
            }
        }
        Ok(out)
    }
}

/// Parses a delay-trace text file: lines `<sender> <receiver> <k> <delay>`
/// with 1-based node indices; `#` comments and blank lines ignored.
pub fn parse_trace(text: &str) -> Result<HashMap<(Edge, usize), usize>> {
    let mut table = HashMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let mut parsed = fields.iter().map(|f| f.parse::<usize>());
        let bad = || {
            Error::DelaySpec(format!(
                "trace line {}: expected \"<sender> <receiver> <k> <delay>\", got {line:?}",
                lineno + 1
            ))
        };
        if fields.len() != 4 {
            return Err(bad());
        }
        let sender = parsed.next().unwrap().map_err(|_| bad())?;
        let receiver = parsed.next().unwrap().map_err(|_| bad())?;
        let k = parsed.next().unwrap().map_err(|_| bad())?;
        let delay = parsed.next().unwrap().map_err(|_| bad())?;
        if sender == 0 || receiver == 0 {
            return Err(bad());
        }
        table.insert((Edge::new(receiver - 1, sender - 1), k), delay);
    }
    Ok(table)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<HashMap<(Edge, usize), usize>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&text)
}
