//! Matrix form of the protocol over a delay-augmented node set.
//!
//! Each agent gets `tau_bar` virtual buffer nodes, so the augmented dimension
//! is `nt = n * (tau_bar + 1)`. The stacked state `[x_tilde; s_tilde]`
//! advances by one matrix per round,
//!
//! ```text
//! [x_tilde(k+1); s_tilde(k+1)] = M(k) [x_tilde(k); s_tilde(k)],
//! M(k) = [ R_tilde(k)  H          ]
//!        [ J(k)        C_tilde(k)-H ]
//! ```
//!
//! `R_tilde` holds the arrival-dependent pull blocks over its first block row
//! and a pure shift register below (buffer `d` copies buffer `d-1`, so buffer
//! `d` holds the state from `d` rounds ago). `C_tilde` deposits freshly sent
//! surplus into the buffer layer matching its assigned delay (first block
//! column) and drains buffers one layer per round (superdiagonal identities).
//! `H` injects `gamma` times the own surplus into the state update; `J`
//! records the state change into the surplus.
//!
//! Pull entries are arrival-indexed (what lands now), push entries are
//! send-indexed (what leaves now); that split is exactly what keeps
//! `R_tilde` row-stochastic and `C_tilde` column-stochastic per round.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::delay::DelaySchedule;
use crate::digraph::Digraph;
use crate::error::{Error, Result};
use crate::protocol::Trajectory;
use crate::rng::SplitMix64;

/// Which messages land at one time step and which delay each edge's fresh
/// transmission is assigned. Indexed by edge id.
#[derive(Clone, Debug)]
pub struct ArrivalSnapshot {
    tau_bar: usize,
    /// `arrivals[edge][d]`: a message sent `d` steps ago lands now.
    arrivals: Vec<Vec<bool>>,
    /// `send_delay[edge]`: delay assigned to the message sent this step.
    /// One delay per edge per step, by construction.
    send_delay: Vec<usize>,
}

impl ArrivalSnapshot {
    /// Reads the snapshot realized by a schedule at time `k`. Send times
    /// before 0 do not exist, so early rounds see fewer arrivals.
    pub fn from_schedule(g: &Digraph, schedule: &DelaySchedule, k: usize) -> Result<Self> {
        let tau_bar = schedule.tau_bar();
        let mut arrivals = vec![vec![false; tau_bar + 1]; g.edge_count()];
        let mut send_delay = vec![0; g.edge_count()];
        for (id, e) in g.edges().iter().enumerate() {
            for (delta, slot) in arrivals[id].iter_mut().enumerate().take(k.min(tau_bar) + 1) {
                *slot = schedule.delay(e.receiver, e.sender, k - delta)? == delta;
            }
            send_delay[id] = schedule.delay(e.receiver, e.sender, k)?;
        }
        Ok(Self {
            tau_bar,
            arrivals,
            send_delay,
        })
    }

    /// The unique snapshot of a delay-free network: every edge delivers
    /// immediately and sends with delay zero.
    pub fn delay_free(g: &Digraph) -> Self {
        Self {
            tau_bar: 0,
            arrivals: vec![vec![true]; g.edge_count()],
            send_delay: vec![0; g.edge_count()],
        }
    }

    /// A free-standing random snapshot matching i.i.d.-uniform delay
    /// statistics: each edge's send delay uniform over `{0..tau_bar}` and
    /// each arrival slot independently present with probability
    /// `1/(tau_bar+1)`.
    pub fn random(g: &Digraph, tau_bar: usize, rng: &mut SplitMix64) -> Self {
        let m = g.edge_count();
        let mut arrivals = vec![vec![false; tau_bar + 1]; m];
        let mut send_delay = vec![0; m];
        for id in 0..m {
            for slot in &mut arrivals[id] {
                *slot = rng.uniform_inclusive(tau_bar as u64) == 0;
            }
            send_delay[id] = rng.uniform_inclusive(tau_bar as u64) as usize;
        }
        Self {
            tau_bar,
            arrivals,
            send_delay,
        }
    }

    /// Builds a snapshot from raw per-edge data; lengths and delay values are
    /// validated against `tau_bar`.
    pub fn from_parts(
        tau_bar: usize,
        arrivals: Vec<Vec<bool>>,
        send_delay: Vec<usize>,
    ) -> Result<Self> {
        if arrivals.len() != send_delay.len() {
            return Err(Error::Dimension(format!(
                "{} arrival rows vs {} send delays",
                arrivals.len(),
                send_delay.len()
            )));
        }
        if let Some(row) = arrivals.iter().find(|row| row.len() != tau_bar + 1) {
            return Err(Error::Dimension(format!(
                "arrival row has {} slots, expected {}",
                row.len(),
                tau_bar + 1
            )));
        }
        if let Some(&d) = send_delay.iter().find(|&&d| d > tau_bar) {
            return Err(Error::DelaySpec(format!(
                "send delay {d} exceeds tau_bar {tau_bar}"
            )));
        }
        Ok(Self {
            tau_bar,
            arrivals,
            send_delay,
        })
    }

    pub fn tau_bar(&self) -> usize {
        self.tau_bar
    }

    pub fn edge_count(&self) -> usize {
        self.send_delay.len()
    }

    pub fn arrives(&self, edge_id: usize, delta: usize) -> bool {
        self.arrivals[edge_id][delta]
    }

    pub fn send_delay(&self, edge_id: usize) -> usize {
        self.send_delay[edge_id]
    }
}

/// The four blocks of the one-round augmented system, all `nt x nt`.
#[derive(Clone, Debug)]
pub struct SystemMatrices {
    pub r_tilde: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub j: DMatrix<f64>,
    pub c_tilde: DMatrix<f64>,
    pub n: usize,
    pub tau_bar: usize,
    pub gamma: f64,
}

impl SystemMatrices {
    /// Augmented dimension `n * (tau_bar + 1)`.
    pub fn augmented_dim(&self) -> usize {
        self.n * (self.tau_bar + 1)
    }
}

/// Builds the per-round blocks for one snapshot.
///
/// Pull side: each node weights self plus every arriving message equally by
/// `1/(1 + arrivals)`, the entry landing in the block column of its delay.
/// Push side: each edge's static push weight lands in the block row of the
/// delay assigned to this round's transmission; the self weight always sits
/// in the top block. Buffer structure as described at module level.
pub fn build_snapshot_matrices(
    g: &Digraph,
    snapshot: &ArrivalSnapshot,
    gamma: f64,
) -> SystemMatrices {
    let n = g.node_count();
    let tau_bar = snapshot.tau_bar();
    let nt = n * (tau_bar + 1);
    debug_assert_eq!(snapshot.edge_count(), g.edge_count());
    let push = g.push_weights();

    // Virtual in-degree: how many messages land at each node this round.
    let mut landing = vec![0usize; n];
    for (id, e) in g.edges().iter().enumerate() {
        for delta in 0..=tau_bar {
            if snapshot.arrives(id, delta) {
                landing[e.receiver] += 1;
            }
        }
    }

    let mut r_tilde = DMatrix::zeros(nt, nt);
    let mut j = DMatrix::zeros(nt, nt);
    let mut c_tilde = DMatrix::zeros(nt, nt);
    let mut h = DMatrix::zeros(nt, nt);

    for v in 0..n {
        let w = 1.0 / (1.0 + landing[v] as f64);
        r_tilde[(v, v)] = w;
        j[(v, v)] = 1.0 - w;
        c_tilde[(v, v)] = push[(v, v)];
        h[(v, v)] = gamma;
    }
    for (id, e) in g.edges().iter().enumerate() {
        let w = 1.0 / (1.0 + landing[e.receiver] as f64);
        for delta in 0..=tau_bar {
            if snapshot.arrives(id, delta) {
                r_tilde[(e.receiver, delta * n + e.sender)] = w;
                j[(e.receiver, delta * n + e.sender)] = -w;
            }
        }
        let delta = snapshot.send_delay(id);
        c_tilde[(delta * n + e.receiver, e.sender)] = push[(e.receiver, e.sender)];
    }
    // State buffers shift down one layer per round ...
    for d in 1..=tau_bar {
        for v in 0..n {
            r_tilde[(d * n + v, (d - 1) * n + v)] = 1.0;
        }
    }
    // ... while surplus buffers drain up one layer per round.
    for d in 0..tau_bar {
        for v in 0..n {
            c_tilde[(d * n + v, (d + 1) * n + v)] = 1.0;
        }
    }

    SystemMatrices {
        r_tilde,
        h,
        j,
        c_tilde,
        n,
        tau_bar,
        gamma,
    }
}

/// Stacks the blocks into the full `2nt x 2nt` one-round matrix.
pub fn assemble_m(sm: &SystemMatrices) -> DMatrix<f64> {
    let nt = sm.augmented_dim();
    let mut m = DMatrix::zeros(2 * nt, 2 * nt);
    m.view_mut((0, 0), (nt, nt)).copy_from(&sm.r_tilde);
    m.view_mut((0, nt), (nt, nt)).copy_from(&sm.h);
    m.view_mut((nt, 0), (nt, nt)).copy_from(&sm.j);
    m.view_mut((nt, nt), (nt, nt))
        .copy_from(&(&sm.c_tilde - &sm.h));
    m
}

/// Splits the round matrix into the block-lower-triangular part and the
/// strictly upper `gamma` injection: `M = M0 + M1` with `M1^2 = 0`.
pub fn split_m0_m1(sm: &SystemMatrices) -> (DMatrix<f64>, DMatrix<f64>) {
    let nt = sm.augmented_dim();
    let mut m0 = DMatrix::zeros(2 * nt, 2 * nt);
    m0.view_mut((0, 0), (nt, nt)).copy_from(&sm.r_tilde);
    m0.view_mut((nt, 0), (nt, nt)).copy_from(&sm.j);
    m0.view_mut((nt, nt), (nt, nt))
        .copy_from(&(&sm.c_tilde - &sm.h));
    let mut m1 = DMatrix::zeros(2 * nt, 2 * nt);
    m1.view_mut((0, nt), (nt, nt)).copy_from(&sm.h);
    (m0, m1)
}

/// Augmented state: the actual nodes followed by `tau_bar` buffer layers.
#[derive(Clone, Debug)]
pub struct AugmentedState {
    pub x_tilde: DVector<f64>,
    pub s_tilde: DVector<f64>,
}

impl AugmentedState {
    /// Buffers start as copies of the initial state (inert pre-history:
    /// nothing was sent before time 0, so these copies are never weighted
    /// in), surpluses start at zero.
    pub fn initial(x0: &[f64], tau_bar: usize) -> Self {
        let n = x0.len();
        let nt = n * (tau_bar + 1);
        let mut x_tilde = DVector::zeros(nt);
        for d in 0..=tau_bar {
            for v in 0..n {
                x_tilde[d * n + v] = x0[v];
            }
        }
        Self {
            x_tilde,
            s_tilde: DVector::zeros(nt),
        }
    }

    pub fn stacked(&self) -> DVector<f64> {
        let nt = self.x_tilde.len();
        let mut v = DVector::zeros(2 * nt);
        v.rows_mut(0, nt).copy_from(&self.x_tilde);
        v.rows_mut(nt, nt).copy_from(&self.s_tilde);
        v
    }
}

/// Iterates the stacked system over the snapshots a schedule realizes,
/// recording the actual-node blocks plus the surplus mass held in buffers.
///
/// Matches [`crate::protocol::run_rppac`] on the same schedule; the two paths
/// share nothing but the delay draws.
pub fn run_matrix_form(
    g: &Digraph,
    schedule: &DelaySchedule,
    gamma: f64,
    x0: &[f64],
    iters: usize,
) -> Result<Trajectory> {
    let n = g.node_count();
    if x0.len() != n {
        return Err(Error::Dimension(format!(
            "x0 has {} entries for a {}-node graph",
            x0.len(),
            n
        )));
    }
    let tau_bar = schedule.tau_bar();
    let nt = n * (tau_bar + 1);
    let mut state = AugmentedState::initial(x0, tau_bar).stacked();
    let mut trajectory = Trajectory::with_initial(x0);
    for k in 0..iters {
        let snapshot = ArrivalSnapshot::from_schedule(g, schedule, k)?;
        let m = assemble_m(&build_snapshot_matrices(g, &snapshot, gamma));
        state = &m * &state;
        let x = state.rows(0, n).iter().copied().collect();
        let s = state.rows(nt, n).iter().copied().collect();
        let buffered = state.rows(nt + n, nt - n).sum();
        trajectory.push_snapshot(x, s, buffered);
    }
    Ok(trajectory)
}

/// Backward words of length `beta` over the realized snapshots after
/// `k_start`: the product of the pull blocks and the product of the damped
/// push blocks,
///
/// ```text
/// R_word = R_tilde(k+beta) ... R_tilde(k+1)
/// E_word = (C_tilde(k+beta)-H) ... (C_tilde(k+1)-H)
/// ```
pub fn word_products(
    g: &Digraph,
    schedule: &DelaySchedule,
    gamma: f64,
    k_start: usize,
    beta: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if beta == 0 {
        return Err(Error::Config("word length beta must be at least 1".into()));
    }
    let nt = g.node_count() * (schedule.tau_bar() + 1);
    let mut r_word = DMatrix::identity(nt, nt);
    let mut e_word = DMatrix::identity(nt, nt);
    for t in 1..=beta {
        let snapshot = ArrivalSnapshot::from_schedule(g, schedule, k_start + t)?;
        let sm = build_snapshot_matrices(g, &snapshot, gamma);
        r_word = &sm.r_tilde * r_word;
        e_word = (&sm.c_tilde - &sm.h) * e_word;
    }
    Ok((r_word, e_word))
}

/// Row-major CSV rendering of a matrix, full double precision.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(m: &DMatrix<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, matrix_csv(m)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::{make_schedule, DelayKind, DelaySpec};
    use crate::digraph::testutil::{demo10, two_node_pair};
    use crate::digraph::Edge;
    use crate::protocol::{run_ppac, run_rppac};
    use std::collections::HashMap;

    fn index_init(n: usize) -> Vec<f64> {
        (1..=n).map(|j| j as f64).collect()
    }

    fn row_sums_one(m: &DMatrix<f64>, tol: f64) -> bool {
        (0..m.nrows()).all(|i| (m.row(i).sum() - 1.0).abs() < tol)
    }

    fn col_sums_one(m: &DMatrix<f64>, tol: f64) -> bool {
        (0..m.ncols()).all(|j| (m.column(j).sum() - 1.0).abs() < tol)
    }

    fn one_way_delayed_schedule(g: &Digraph) -> crate::delay::DelaySchedule {
        let mut per_link = HashMap::new();
        per_link.insert(Edge::new(0, 1), 1);
        per_link.insert(Edge::new(1, 0), 0);
        let spec = DelaySpec {
            kind: DelayKind::Constant,
            tau_bar: 1,
            per_link_bounds: Some(per_link),
            seed: 0,
            trace: None,
        };
        make_schedule(&spec, g).unwrap()
    }

    #[test]
    fn delay_free_snapshot_collapses_to_static_weights() {
        let g = two_node_pair();
        let sm = build_snapshot_matrices(&g, &ArrivalSnapshot::delay_free(&g), 0.1);
        assert_eq!(sm.r_tilde, g.pull_weights());
        assert_eq!(sm.c_tilde, g.push_weights());

        let m = assemble_m(&sm);
        assert_eq!(m.nrows(), 4);
        for j in 0..2 {
            for i in 0..2 {
                assert_eq!(m[(j, i)], 0.5); // R block
                let expected_j = if j == i { 1.0 - 0.5 } else { -0.5 };
                assert_eq!(m[(2 + j, i)], expected_j); // I - R block
                let expected_c = if j == i { 0.5 - 0.1 } else { 0.5 };
                assert!((m[(2 + j, 2 + i)] - expected_c).abs() < 1e-15);
            }
            assert_eq!(m[(j, 2 + j)], 0.1); // gamma injection
        }
    }

    #[test]
    fn augmented_dimension_scales_with_delay_bound() {
        let g = demo10();
        let schedule = make_schedule(&DelaySpec::uniform(5, 1), &g).unwrap();
        let snapshot = ArrivalSnapshot::from_schedule(&g, &schedule, 9).unwrap();
        let sm = build_snapshot_matrices(&g, &snapshot, 0.1);
        assert_eq!(sm.augmented_dim(), 60);
        assert_eq!(assemble_m(&sm).nrows(), 120);
    }

    #[test]
    fn gamma_zero_makes_m_block_lower_triangular() {
        let g = two_node_pair();
        let sm = build_snapshot_matrices(&g, &ArrivalSnapshot::delay_free(&g), 0.0);
        let (m0, m1) = split_m0_m1(&sm);
        assert_eq!(m1, DMatrix::zeros(4, 4));
        assert_eq!(assemble_m(&sm), m0);
    }

    #[test]
    fn one_way_delayed_pair_pull_entries() {
        // At any k >= 1 node 1 hears only the one-round-late message from
        // node 2, so its weight is 1/2 split across self and the delayed
        // block column.
        let g = two_node_pair();
        let schedule = one_way_delayed_schedule(&g);
        let snapshot = ArrivalSnapshot::from_schedule(&g, &schedule, 1).unwrap();
        let sm = build_snapshot_matrices(&g, &snapshot, 0.1);
        assert_eq!(sm.r_tilde[(0, 0)], 0.5); // self in the current block
        assert_eq!(sm.r_tilde[(0, 1)], 0.0); // nothing lands undelayed
        assert_eq!(sm.r_tilde[(0, 2 + 1)], 0.5); // sender 2 one layer back
        assert!(row_sums_one(&sm.r_tilde, 1e-12));
    }

    #[test]
    fn stacked_push_columns_sum_to_one() {
        let g = demo10();
        let mut rng = SplitMix64::new(40);
        for tau_bar in [1usize, 2, 5] {
            for _ in 0..50 {
                let snapshot = ArrivalSnapshot::random(&g, tau_bar, &mut rng);
                let sm = build_snapshot_matrices(&g, &snapshot, 0.1);
                assert!(col_sums_one(&sm.c_tilde, 1e-12));
                assert!(row_sums_one(&sm.r_tilde, 1e-12));
            }
        }
    }

    #[test]
    fn exactly_one_send_layer_per_edge() {
        let g = demo10();
        let n = g.node_count();
        let mut rng = SplitMix64::new(41);
        let tau_bar = 3;
        let snapshot = ArrivalSnapshot::random(&g, tau_bar, &mut rng);
        let sm = build_snapshot_matrices(&g, &snapshot, 0.1);
        for e in g.edges() {
            let layers = (0..=tau_bar)
                .filter(|&d| sm.c_tilde[(d * n + e.receiver, e.sender)] != 0.0)
                .count();
            assert_eq!(layers, 1, "edge {e}");
        }
    }

    #[test]
    fn split_reassembles_exactly_and_m1_squares_to_zero() {
        let g = demo10();
        let mut rng = SplitMix64::new(42);
        let snapshot = ArrivalSnapshot::random(&g, 2, &mut rng);
        let sm = build_snapshot_matrices(&g, &snapshot, 0.1);
        let m = assemble_m(&sm);
        let (m0, m1) = split_m0_m1(&sm);
        assert_eq!(&m0 + &m1, m);
        let nonzero = m1.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, sm.n);
        assert!(m1.iter().filter(|&&v| v != 0.0).all(|&v| v == 0.1));
        let square = &m1 * &m1;
        assert!(square.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn matrix_form_reproduces_the_two_node_delayed_trace() {
        let g = two_node_pair();
        let schedule = one_way_delayed_schedule(&g);
        let traj = run_matrix_form(&g, &schedule, 0.1, &[0.0, 2.0], 2).unwrap();
        assert!((traj.x[2][0] - 1.0).abs() <= 1e-12);
        assert!((traj.x[2][1] - 0.6).abs() <= 1e-12);
        assert!((traj.s[2][0] + 1.0).abs() <= 1e-12);
        assert!((traj.s[2][1] - 0.9).abs() <= 1e-12);
        assert!((traj.in_flight_surplus[2] - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn matrix_form_matches_message_level_under_random_delays() {
        let g = demo10();
        let schedule = make_schedule(&DelaySpec::uniform(2, 7), &g).unwrap();
        let x0 = index_init(10);
        let node_level = run_rppac(&g, &schedule, 0.1, &x0, 60).unwrap();
        let matrix_level = run_matrix_form(&g, &schedule, 0.1, &x0, 60).unwrap();
        for k in 0..=60 {
            for j in 0..10 {
                assert!((node_level.x[k][j] - matrix_level.x[k][j]).abs() < 1e-10);
                assert!((node_level.s[k][j] - matrix_level.s[k][j]).abs() < 1e-10);
            }
            assert!(
                (node_level.in_flight_surplus[k] - matrix_level.in_flight_surplus[k]).abs() < 1e-10
            );
        }
    }

    #[test]
    fn matrix_form_under_zero_schedule_matches_baseline() {
        let g = demo10();
        let schedule = make_schedule(&DelaySpec::zero(), &g).unwrap();
        let x0 = index_init(10);
        let matrix_level = run_matrix_form(&g, &schedule, 0.1, &x0, 100).unwrap();
        let baseline = run_ppac(&g, 0.1, &x0, 100).unwrap();
        for k in 0..=100 {
            for j in 0..10 {
                assert!((matrix_level.x[k][j] - baseline.x[k][j]).abs() < 1e-12);
                assert!((matrix_level.s[k][j] - baseline.s[k][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_is_conserved_in_matrix_form() {
        let g = demo10();
        let schedule = make_schedule(&DelaySpec::uniform(5, 3), &g).unwrap();
        let traj = run_matrix_form(&g, &schedule, 0.1, &index_init(10), 150).unwrap();
        assert!(traj.max_mass_drift() < 1e-9);
    }

    #[test]
    fn single_step_word_of_a_delay_free_network() {
        let g = two_node_pair();
        let schedule = make_schedule(&DelaySpec::zero(), &g).unwrap();
        let (r_word, e_word) = word_products(&g, &schedule, 0.1, 0, 1).unwrap();
        assert_eq!(r_word, g.pull_weights());
        let mut expected = g.push_weights();
        expected[(0, 0)] -= 0.1;
        expected[(1, 1)] -= 0.1;
        assert!((&e_word - &expected).abs().max() < 1e-15);
        assert!(word_products(&g, &schedule, 0.1, 0, 0).is_err());
    }

    #[test]
    fn snapshot_from_parts_validates() {
        assert!(ArrivalSnapshot::from_parts(1, vec![vec![true, false]], vec![0]).is_ok());
        assert!(ArrivalSnapshot::from_parts(1, vec![vec![true]], vec![0]).is_err());
        assert!(ArrivalSnapshot::from_parts(1, vec![vec![true, false]], vec![2]).is_err());
        assert!(ArrivalSnapshot::from_parts(1, vec![], vec![0]).is_err());
    }

    #[test]
    fn matrix_csv_is_row_major_and_lossless() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.25, -0.1, 2.0_f64.sqrt()]);
        let csv = matrix_csv(&m);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "1,0.25");
        let second: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(second, vec![-0.1, 2.0_f64.sqrt()]);
    }
}
