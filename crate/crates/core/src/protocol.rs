//! Message-level execution of the push-pull surplus protocol: the
//! delay-robust per-node form with an explicit in-flight queue, and the
//! delay-free baseline iteration with static weights.
//!
//! Rounds are synchronous. Within round `k` each node first broadcasts its
//! current `(x, weighted s)` (so zero-delay links land in the same round),
//! then everything due at `k` is delivered, then all nodes update
//! simultaneously from their pre-round state:
//!
//! ```text
//! x_j(k+1) = gamma * s_j(k) + r_j(k) * (x_j(k) + sum of arriving x payloads)
//! s_j(k+1) = x_j(k) - x_j(k+1) + c_jj * s_j(k) + sum of arriving surplus payloads
//! ```
//!
//! where `r_j(k) = 1/(1 + number of arriving messages)` so the receiver-side
//! weights always sum to one over self plus whatever actually landed. The
//! broadcast carries the state unweighted and the surplus pre-weighted by the
//! sender's push weight, so surplus mass in transit is already accounted at
//! full value and `sum(x) + sum(s) + pending surplus` is invariant.

use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::delay::DelaySchedule;
use crate::digraph::{Digraph, WeightMatrices};
use crate::error::{Error, Result};
use crate::harness::consensus_error;

/// Per-agent state: the consensus value and the surplus ledger.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeState {
    pub x: f64,
    pub s: f64,
}

impl NodeState {
    /// Surplus always starts at zero; only the state is free.
    pub fn initial(x: f64) -> Self {
        Self { x, s: 0.0 }
    }
}

/// One broadcast message. The state payload is unweighted; the surplus
/// payload carries the sender-side push weight `c_{receiver,sender} * s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub receiver: usize,
    pub send_time: usize,
    pub x_payload: f64,
    pub surplus_payload: f64,
}

/// Messages sent but not yet delivered, keyed by arrival time.
#[derive(Clone, Debug, Default)]
pub struct InFlightQueue {
    pending: BTreeMap<usize, Vec<Message>>,
}

impl InFlightQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, arrival_time: usize, message: Message) {
        self.pending.entry(arrival_time).or_default().push(message);
    }

    /// Removes and returns everything due at time `k`.
    pub fn take_due(&mut self, k: usize) -> Vec<Message> {
        self.pending.remove(&k).unwrap_or_default()
    }

    /// Total surplus payload still in transit.
    pub fn pending_surplus(&self) -> f64 {
        self.pending
            .values()
            .flatten()
            .map(|m| m.surplus_payload)
            .sum()
    }

    pub fn len(&self) -> usize {
        self.pending.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }
}

/// Per-iteration record of a run: states, surpluses, the surplus mass in
/// transit, and the consensus error against the initial average. Row 0 holds
/// the initial condition, so a `K`-iteration run has `K + 1` rows.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub in_flight_surplus: Vec<f64>,
    pub error: Vec<f64>,
    pub initial_average: f64,
}

impl Trajectory {
    pub(crate) fn with_initial(x0: &[f64]) -> Self {
        let initial_average = x0.iter().sum::<f64>() / x0.len() as f64;
        Self {
            x: vec![x0.to_vec()],
            s: vec![vec![0.0; x0.len()]],
            in_flight_surplus: vec![0.0],
            error: vec![consensus_error(x0, initial_average)],
            initial_average,
        }
    }

    pub(crate) fn push_snapshot(&mut self, x: Vec<f64>, s: Vec<f64>, in_flight: f64) {
        self.error.push(consensus_error(&x, self.initial_average));
        self.x.push(x);
        self.s.push(s);
        self.in_flight_surplus.push(in_flight);
    }

    pub fn node_count(&self) -> usize {
        self.x[0].len()
    }

    /// Number of iterations run (one less than the number of rows).
    pub fn iterations(&self) -> usize {
        self.x.len() - 1
    }

    pub fn final_x(&self) -> &[f64] {
        self.x.last().unwrap()
    }

    pub fn final_s(&self) -> &[f64] {
        self.s.last().unwrap()
    }

    /// `sum(x) + sum(s) + surplus in transit` at row `k`; constant over a run.
    pub fn total_mass(&self, k: usize) -> f64 {
        self.x[k].iter().sum::<f64>() + self.s[k].iter().sum::<f64>() + self.in_flight_surplus[k]
    }

    /// Largest deviation of [`Self::total_mass`] from the initial mass.
    pub fn max_mass_drift(&self) -> f64 {
        let initial = self.total_mass(0);
        (0..self.x.len())
            .map(|k| (self.total_mass(k) - initial).abs())
            .fold(0.0, f64::max)
    }
}

/// Advances one synchronous round: broadcast at `k`, deliver what lands at
/// `k`, update every node. `push` is the static column-stochastic weight
/// matrix of `g`.
pub fn step(
    states: &mut [NodeState],
    inflight: &mut InFlightQueue,
    g: &Digraph,
    schedule: &DelaySchedule,
    push: &nalgebra::DMatrix<f64>,
    gamma: f64,
    k: usize,
) -> Result<()> {
    let n = states.len();
    debug_assert_eq!(n, g.node_count());

    for sender in 0..n {
        for &receiver in g.out_neighbors(sender) {
            let delta = schedule.delay(receiver, sender, k)?;
            inflight.push(
                k + delta,
                Message {
                    sender,
                    receiver,
                    send_time: k,
                    x_payload: states[sender].x,
                    surplus_payload: push[(receiver, sender)] * states[sender].s,
                },
            );
        }
    }

    let mut due: Vec<Vec<Message>> = vec![Vec::new(); n];
    for message in inflight.take_due(k) {
        due[message.receiver].push(message);
    }
    for bin in &mut due {
        bin.sort_by_key(|m| (m.sender, m.send_time));
    }

    let previous = states.to_vec();
    for (j, state) in states.iter_mut().enumerate() {
        let arrivals = &due[j];
        // Receiver weight over self plus every message that landed this round;
        // repeated arrivals on one edge each count.
        let r = 1.0 / (1.0 + arrivals.len() as f64);
        let mut x_sum = previous[j].x;
        for m in arrivals {
            x_sum += m.x_payload;
        }
        let x_next = gamma * previous[j].s + r * x_sum;
        let mut s_next = previous[j].x - x_next + push[(j, j)] * previous[j].s;
        for m in arrivals {
            s_next += m.surplus_payload;
        }
        *state = NodeState {
            x: x_next,
            s: s_next,
        };
    }
    Ok(())
}

/// Runs the delay-robust protocol for `iters` rounds.
///
/// Strong connectivity is required for convergence but not for execution;
/// callers that care should check and warn. The surplus gain is not validated
/// here — scenario configuration enforces the conservative bound.
pub fn run_rppac(
    g: &Digraph,
    schedule: &DelaySchedule,
    gamma: f64,
    x0: &[f64],
    iters: usize,
) -> Result<Trajectory> {
    if x0.len() != g.node_count() {
        return Err(Error::Dimension(format!(
            "x0 has {} entries for a {}-node graph",
            x0.len(),
            g.node_count()
        )));
    }
    let push = g.push_weights();
    let mut states: Vec<NodeState> = x0.iter().map(|&x| NodeState::initial(x)).collect();
    let mut inflight = InFlightQueue::new();
    let mut trajectory = Trajectory::with_initial(x0);
    for k in 0..iters {
        step(&mut states, &mut inflight, g, schedule, &push, gamma, k)?;
        trajectory.push_snapshot(
            states.iter().map(|st| st.x).collect(),
            states.iter().map(|st| st.s).collect(),
            inflight.pending_surplus(),
        );
    }
    Ok(trajectory)
}

/// Delay-free baseline: the surplus iteration with the static pull and push
/// weight matrices. Equals [`run_rppac`] under the zero schedule.
pub fn run_ppac(g: &Digraph, gamma: f64, x0: &[f64], iters: usize) -> Result<Trajectory> {
    if x0.len() != g.node_count() {
        return Err(Error::Dimension(format!(
            "x0 has {} entries for a {}-node graph",
            x0.len(),
            g.node_count()
        )));
    }
    let weights = WeightMatrices::of(g);
    let mut x = DVector::from_column_slice(x0);
    let mut s = DVector::zeros(x0.len());
    let mut trajectory = Trajectory::with_initial(x0);
    for _ in 0..iters {
        let x_next = gamma * &s + &weights.pull * &x;
        let s_next = &x - &x_next + &weights.push * &s;
        x = x_next;
        s = s_next;
        trajectory.push_snapshot(
            x.iter().copied().collect(),
            s.iter().copied().collect(),
            0.0,
        );
    }
    Ok(trajectory)
}
