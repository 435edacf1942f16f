//! Directed graph model: adjacency and degree queries, strong-connectivity
//! checking, and the static push/pull consensus weight matrices.
//!
//! Edges are stored as `(receiver, sender)` pairs: the edge exists when the
//! sender transmits to the receiver. Every node implicitly has a self-loop
//! (it always sees its own variables); self-loops are never stored and never
//! counted in degrees — the `1 + degree` denominators in the weight rules
//! account for them.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A directed edge `(receiver, sender)`: `sender -> receiver`.
///
/// Node indices are 0-based throughout the library; the edge-list file format
/// is 1-based and converted on load.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub receiver: usize,
    pub sender: usize,
}

impl Edge {
    pub fn new(receiver: usize, sender: usize) -> Self {
        Self { receiver, sender }
    }
}

impl fmt::Display for Edge {
    /// Rendered 1-based, `sender -> receiver`, to match the file format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {}", self.sender + 1, self.receiver + 1)
    }
}

/// A fixed directed graph. Immutable after construction and safe to share
/// across concurrent simulation runs.
#[derive(Clone, Debug)]
pub struct Digraph {
    n: usize,
    edges: Vec<Edge>,
    edge_ids: HashMap<Edge, usize>,
    in_adj: Vec<Vec<usize>>,
    out_adj: Vec<Vec<usize>>,
}

impl Digraph {
    /// Builds a graph from `(receiver, sender)` pairs with 0-based indices.
    ///
    /// Rejects out-of-range indices, explicit self-loops, and duplicate pairs
    /// (the edge set is a set).
    pub fn from_edge_list(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::GraphFormat("node count must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let mut edges = Vec::with_capacity(pairs.len());
        for &(receiver, sender) in pairs {
            for index in [receiver, sender] {
                if index >= n {
                    return Err(Error::NodeOutOfRange { index, n });
                }
            }
            if receiver == sender {
                return Err(Error::ExplicitSelfLoop { node: receiver });
            }
            let edge = Edge::new(receiver, sender);
            if !seen.insert(edge) {
                return Err(Error::DuplicateEdge { edge });
            }
            edges.push(edge);
        }
        // Canonical edge ids: sorted by (receiver, sender), independent of
        // the order the pairs were supplied in.
        edges.sort_unstable();
        let edge_ids = edges.iter().enumerate().map(|(i, &e)| (e, i)).collect();
        let mut in_adj = vec![Vec::new(); n];
        let mut out_adj = vec![Vec::new(); n];
        for e in &edges {
            in_adj[e.receiver].push(e.sender);
            out_adj[e.sender].push(e.receiver);
        }
        for list in &mut out_adj {
            list.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            edge_ids,
            in_adj,
            out_adj,
        })
    }

    /// Parses the edge-list text format:
    ///
    /// ```text
    /// # comment
    /// n=<count>
    /// <sender> <receiver>     (1-based, one edge per line)
    /// ```
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if n.is_none() {
                let count = line
                    .strip_prefix("n=")
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::GraphFormat(format!(
                            "line {}: expected header \"n=<count>\", got {line:?}",
                            lineno + 1
                        ))
                    })?;
                n = Some(count);
                continue;
            }
            let n = n.unwrap();
            let mut fields = line.split_whitespace();
            let parse = |field: Option<&str>| -> Result<usize> {
                field
                    .and_then(|v| v.parse::<usize>().ok())
                    .filter(|&v| v >= 1 && v <= n)
                    .ok_or_else(|| {
                        Error::GraphFormat(format!(
                            "line {}: expected \"<sender> <receiver>\" with 1-based indices in 1..={n}, got {line:?}",
                            lineno + 1
                        ))
                    })
            };
            let sender = parse(fields.next())?;
            let receiver = parse(fields.next())?;
            if fields.next().is_some() {
                return Err(Error::GraphFormat(format!(
                    "line {}: trailing fields in {line:?}",
                    lineno + 1
                )));
            }
            pairs.push((receiver - 1, sender - 1));
        }
        match n {
            Some(n) => Self::from_edge_list(n, &pairs),
            None => Err(Error::GraphFormat("missing \"n=<count>\" header".into())),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_edge_list(&text)
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// All edges, sorted by `(receiver, sender)`; the position of an edge in
    /// this slice is its id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_id(&self, edge: Edge) -> Option<usize> {
        self.edge_ids.get(&edge).copied()
    }

    pub fn has_edge(&self, receiver: usize, sender: usize) -> bool {
        self.edge_ids.contains_key(&Edge::new(receiver, sender))
    }

    /// Senders that transmit to `j`, ascending. Excludes `j` itself.
    pub fn in_neighbors(&self, j: usize) -> &[usize] {
        &self.in_adj[j]
    }

    /// Receivers that `j` transmits to, ascending. Excludes `j` itself.
    pub fn out_neighbors(&self, j: usize) -> &[usize] {
        &self.out_adj[j]
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.in_adj[j].len()
    }

    pub fn out_degree(&self, j: usize) -> usize {
        self.out_adj[j].len()
    }

    /// Strongly connected components via Kosaraju's two-pass DFS, iterative.
    /// Components are returned in reverse topological order of the condensation.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for start in 0..n {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut stack = vec![(start, 0usize)];
            while let Some(&mut (v, ref mut next)) = stack.last_mut() {
                if *next < self.out_adj[v].len() {
                    let u = self.out_adj[v][*next];
                    *next += 1;
                    if !visited[u] {
                        visited[u] = true;
                        stack.push((u, 0));
                    }
                } else {
                    order.push(v);
                    stack.pop();
                }
            }
        }
        visited.fill(false);
        let mut components = Vec::new();
        for &start in order.iter().rev() {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut component = vec![start];
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                for &u in &self.in_adj[v] {
                    if !visited[u] {
                        visited[u] = true;
                        component.push(u);
                        stack.push(u);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// True iff a directed path exists between every ordered pair of nodes.
    pub fn is_strongly_connected(&self) -> bool {
        self.strongly_connected_components().len() == 1
    }

    /// Row-stochastic pull weights: `r_ji = 1/(1 + in_degree(j))` for each
    /// in-neighbor `i` of `j` and for `i = j`, zero otherwise.
    pub fn pull_weights(&self) -> DMatrix<f64> {
        let mut r = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let w = 1.0 / (1.0 + self.in_degree(j) as f64);
            r[(j, j)] = w;
            for &i in self.in_neighbors(j) {
                r[(j, i)] = w;
            }
        }
        r
    }

    /// Column-stochastic push weights: `c_lj = 1/(1 + out_degree(j))` for each
    /// out-neighbor `l` of `j` and for `l = j`, zero otherwise.
    pub fn push_weights(&self) -> DMatrix<f64> {
        let mut c = DMatrix::zeros(self.n, self.n);
        for j in 0..self.n {
            let w = 1.0 / (1.0 + self.out_degree(j) as f64);
            c[(j, j)] = w;
            for &l in self.out_neighbors(j) {
                c[(l, j)] = w;
            }
        }
        c
    }
}

/// The static pull (row-stochastic) and push (column-stochastic) weights of a
/// graph, bundled for the delay-free iteration.
#[derive(Clone, Debug)]
pub struct WeightMatrices {
    pub pull: DMatrix<f64>,
    pub push: DMatrix<f64>,
}

impl WeightMatrices {
    pub fn of(g: &Digraph) -> Self {
        Self {
            pull: g.pull_weights(),
            push: g.push_weights(),
        }
    }
}

/// Smallest strictly positive entry of the push-weight matrix. Surplus gains
/// must stay below this bound for the conservative stability guarantee.
pub fn min_push_weight(push: &DMatrix<f64>) -> f64 {
    push.iter()
        .copied()
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min)
}
