//! Surplus-based push-pull average consensus on directed, delay-prone networks.
//!
//! Agents hold a state `x_j` and a surplus `s_j`. Each round every agent
//! broadcasts its unweighted state and a sender-weighted share of its surplus
//! to its out-neighbors, then folds whatever arrived this round (possibly
//! delayed by earlier rounds) into its own variables. Pull weights are
//! row-stochastic and assigned by the receiver from what actually arrived;
//! push weights are column-stochastic and assigned by the sender from its
//! out-degree. The surplus ledger keeps the network-wide mass
//! `sum(x) + sum(s) + surplus in transit` invariant, which is what drives the
//! states to the exact average of the initial values even though links are
//! directional and messages arrive late.
//!
//! The crate provides two executions of the same protocol and tooling around
//! them:
//!
//! - [`protocol`]: per-node message passing with an explicit in-flight queue,
//!   plus the delay-free baseline iteration.
//! - [`augmented`]: the equivalent linear system over a delay-augmented node
//!   set, one stochastic-ish matrix per round, with the decomposition used in
//!   the convergence argument.
//! - [`spectral`]: eigenvalue-modulus summaries and spectral-gap sweeps of the
//!   per-round system matrix.
//! - [`harness`]: scenario configs, Monte Carlo averaging of consensus error,
//!   and CSV export; [`cli`] is the command-line front end.
//!
//! The two executions are kept independent on purpose: they consume the same
//! delay realization through random-access queries, so either one serves as a
//! cross-check oracle for the other.

pub mod augmented;
pub mod cli;
pub mod delay;
pub mod digraph;
mod eigen;
pub mod error;
pub mod harness;
pub mod protocol;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};

// Re-exported so downstream crates use the same matrix types.
pub use nalgebra;
