//! Shared fixtures for the integration suites.

use pushpull::digraph::Digraph;
use pushpull::rng::SplitMix64;

/// The 10-node, 17-edge delay-prone demo network as `(receiver, sender)`
/// pairs, 0-based. Matches `data/demo10.edges`.
pub const DEMO10_PAIRS: [(usize, usize); 17] = [
    (1, 0),
    (3, 0),
    (0, 1),
    (1, 2),
    (6, 2),
    (4, 3),
    (7, 3),
    (3, 4),
    (5, 4),
    (6, 5),
    (5, 6),
    (2, 6),
    (3, 7),
    (8, 7),
    (9, 8),
    (6, 9),
    (8, 9),
];

pub fn demo10() -> Digraph {
    Digraph::from_edge_list(10, &DEMO10_PAIRS).unwrap()
}

/// `x_j(0) = j`, 1-based, so the target average of the demo network is 5.5.
pub fn index_init(n: usize) -> Vec<f64> {
    (1..=n).map(|j| j as f64).collect()
}

/// Rejection-samples a strongly connected digraph with 2..=8 nodes.
#[allow(dead_code)]
pub fn random_strongly_connected(rng: &mut SplitMix64) -> Digraph {
    loop {
        let n = 2 + (rng.uniform_inclusive(6) as usize);
        let mut pairs = Vec::new();
        for r in 0..n {
            for s in 0..n {
                if r != s && rng.next_f64() < 0.4 {
                    pairs.push((r, s));
                }
            }
        }
        let g = Digraph::from_edge_list(n, &pairs).unwrap();
        if g.is_strongly_connected() {
            return g;
        }
    }
}
