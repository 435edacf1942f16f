//! Crate-wide error type and exit-code mapping for the CLI.

use std::path::PathBuf;

use crate::digraph::Edge;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("node index {index} out of range (graph has {n} nodes)")]
    NodeOutOfRange { index: usize, n: usize },

    #[error("duplicate edge {edge}")]
    DuplicateEdge { edge: Edge },

    #[error("explicit self-loop at node {node}; self-loops are implicit")]
    ExplicitSelfLoop { node: usize },

    #[error("edge {edge} is not in the graph")]
    UnknownEdge { edge: Edge },

    #[error("invalid graph file: {0}")]
    GraphFormat(String),

    #[error("invalid delay spec: {0}")]
    DelaySpec(String),

    #[error("delay trace has no entry for edge {edge} at send time {send_time}")]
    MissingTraceEntry { edge: Edge, send_time: usize },

    #[error("surplus gain {gamma} outside (0, {bound}); pass --force-gamma to override")]
    GammaOutOfBounds { gamma: f64, bound: f64 },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("eigenvalue iteration failed to converge for a {size}x{size} matrix")]
    EigenConvergence { size: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// CLI exit code: 1 for validation failures, 2 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 2,
            _ => 1,
        }
    }
}
