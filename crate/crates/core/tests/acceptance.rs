//! Acceptance suite: the end-to-end checks the artifact must pass, one test
//! per criterion, each printing a PASS line with its measured margins
//! (visible with `--nocapture`).

mod common;

use common::{demo10, index_init, random_strongly_connected, DEMO10_PAIRS};

use pushpull::augmented::{
    assemble_m, build_snapshot_matrices, run_matrix_form, split_m0_m1, word_products,
    ArrivalSnapshot,
};
use pushpull::delay::{make_schedule, DelayKind, DelaySpec};
use pushpull::digraph::{Digraph, Edge};
use pushpull::protocol::{run_ppac, run_rppac, Trajectory};
use pushpull::rng::SplitMix64;
use pushpull::spectral::{eigen_moduli, eigenvalues, mean_spectral_gap, spectral_gap_of};

const MC_RUNS: usize = 100;
const HORIZON: usize = 300;
const GAMMA: f64 = 0.1;

fn mc_mean_curve(g: &Digraph, tau_bar: usize, gamma: f64, base_seed: u64) -> Vec<f64> {
    let mut mean = vec![0.0; HORIZON + 1];
    for run in 0..MC_RUNS {
        let trajectory = mc_run(g, tau_bar, gamma, base_seed + run as u64);
        for (acc, e) in mean.iter_mut().zip(&trajectory.error) {
            *acc += e;
        }
    }
    for v in &mut mean {
        *v /= MC_RUNS as f64;
    }
    mean
}

fn mc_run(g: &Digraph, tau_bar: usize, gamma: f64, seed: u64) -> Trajectory {
    let spec = if tau_bar == 0 {
        DelaySpec::zero()
    } else {
        DelaySpec::uniform(tau_bar, seed)
    };
    let schedule = make_schedule(&spec, g).unwrap();
    run_rppac(g, &schedule, gamma, &index_init(g.node_count()), HORIZON).unwrap()
}

#[test]
fn a1_matrix_form_matches_message_level() {
    let g = demo10();
    let x0 = index_init(10);
    let mut worst: f64 = 0.0;
    for tau_bar in [0usize, 2, 5] {
        for seed in [1u64, 2, 3] {
            let spec = DelaySpec::uniform(tau_bar, seed);
            let schedule = make_schedule(&spec, &g).unwrap();
            let node_level = run_rppac(&g, &schedule, GAMMA, &x0, HORIZON).unwrap();
            let matrix_level = run_matrix_form(&g, &schedule, GAMMA, &x0, HORIZON).unwrap();
            for k in 0..=HORIZON {
                for j in 0..10 {
                    worst = worst.max((node_level.x[k][j] - matrix_level.x[k][j]).abs());
                    worst = worst.max((node_level.s[k][j] - matrix_level.s[k][j]).abs());
                }
            }
        }
    }
    assert!(worst < 1e-10, "max x/s deviation {worst:e}");
    println!("PASS cross-check of the two executions: max deviation {worst:.2e} < 1e-10");
}

#[test]
fn a2_convergence_to_the_exact_average() {
    let g = demo10();
    let mut finals = Vec::new();
    let mut max_surplus: f64 = 0.0;
    for tau_bar in [0usize, 2, 5] {
        let mean = mc_mean_curve(&g, tau_bar, GAMMA, 1);
        finals.push(*mean.last().unwrap());
        for run in 0..MC_RUNS {
            let trajectory = mc_run(&g, tau_bar, GAMMA, 1 + run as u64);
            let s_max = trajectory
                .final_s()
                .iter()
                .fold(0.0f64, |m, &v| m.max(v.abs()));
            max_surplus = max_surplus.max(s_max);
        }
    }
    assert!(finals[0] < 1e-4, "delay-free error {:e}", finals[0]);
    assert!(finals[1] < 1e-3, "tau=2 error {:e}", finals[1]);
    assert!(finals[2] < 1e-2, "tau=5 error {:e}", finals[2]);
    assert!(
        finals[0] <= finals[1] && finals[1] <= finals[2],
        "errors not ordered by delay bound: {finals:?}"
    );
    assert!(max_surplus < 1e-1, "final surplus {max_surplus:e}");
    println!(
        "PASS convergence: mean errors at k=300 {:.2e} / {:.2e} / {:.2e} (tau 0/2/5), \
         max final surplus {max_surplus:.2e}",
        finals[0], finals[1], finals[2]
    );
}

#[test]
fn a3_mass_conservation_along_every_run() {
    let g = demo10();
    let mut worst: f64 = 0.0;
    for tau_bar in [0usize, 2, 5] {
        for run in 0..MC_RUNS {
            let trajectory = mc_run(&g, tau_bar, GAMMA, 1 + run as u64);
            worst = worst.max(trajectory.max_mass_drift());
        }
    }
    assert!(worst < 1e-9, "max mass drift {worst:e}");
    println!("PASS mass conservation: max drift {worst:.2e} < 1e-9 over 300 runs");
}

#[test]
fn a4_round_matrices_stay_stochastic() {
    let g = demo10();
    let n = g.node_count();
    let mut worst_row: f64 = 0.0;
    let mut worst_col: f64 = 0.0;
    let mut snapshots = 0usize;
    for tau_bar in [2usize, 5] {
        let mut rng = SplitMix64::new(100 + tau_bar as u64);
        for _ in 0..1000 {
            let snapshot = ArrivalSnapshot::random(&g, tau_bar, &mut rng);
            let sm = build_snapshot_matrices(&g, &snapshot, GAMMA);
            let nt = sm.augmented_dim();
            for i in 0..nt {
                worst_row = worst_row.max((sm.r_tilde.row(i).sum() - 1.0).abs());
                worst_col = worst_col.max((sm.c_tilde.column(i).sum() - 1.0).abs());
            }
            for e in g.edges() {
                let layers = (0..=tau_bar)
                    .filter(|&d| sm.c_tilde[(d * n + e.receiver, e.sender)] != 0.0)
                    .count();
                assert_eq!(layers, 1, "edge {e} occupies {layers} send layers");
            }
            snapshots += 1;
        }
    }
    assert!(worst_row < 1e-12 && worst_col < 1e-12);
    println!(
        "PASS stochasticity over {snapshots} snapshots: worst row {worst_row:.2e}, \
         worst column {worst_col:.2e}, one send layer per edge"
    );
}

/// Greedy nearest matching of two complex multisets; returns the largest
/// pairing distance.
fn multiset_match_distance(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for &(re, im) in a {
        let mut best = f64::INFINITY;
        let mut best_idx = usize::MAX;
        for (i, &(bre, bim)) in b.iter().enumerate() {
            if used[i] {
                continue;
            }
            let d = (re - bre).hypot(im - bim);
            if d < best {
                best = d;
                best_idx = i;
            }
        }
        used[best_idx] = true;
        worst = worst.max(best);
    }
    worst
}

#[test]
fn a5_decomposition_algebra_and_word_products() {
    let g = demo10();
    let mut worst_union: f64 = 0.0;
    let mut worst_rho_r: f64 = 0.0;
    let mut rho_e_max: f64 = 0.0;
    for tau_bar in [2usize, 5] {
        let mut rng = SplitMix64::new(500 + tau_bar as u64);
        for _ in 0..20 {
            let snapshot = ArrivalSnapshot::random(&g, tau_bar, &mut rng);
            let sm = build_snapshot_matrices(&g, &snapshot, GAMMA);
            let m = assemble_m(&sm);
            let (m0, m1) = split_m0_m1(&sm);
            assert_eq!(&m0 + &m1, m, "split must reassemble exactly");
            assert!(
                (&m1 * &m1).iter().all(|&v| v == 0.0),
                "gamma injection must square to zero exactly"
            );

            let spectrum_m0 = eigenvalues(&m0).unwrap();
            let mut union = eigenvalues(&sm.r_tilde).unwrap();
            union.extend(eigenvalues(&(&sm.c_tilde - &sm.h)).unwrap());
            worst_union = worst_union.max(multiset_match_distance(&spectrum_m0, &union));
        }

        let schedule = make_schedule(&DelaySpec::uniform(tau_bar, 7), &g).unwrap();
        let beta = tau_bar + 1;
        for window in 0..20 {
            let (r_word, e_word) =
                word_products(&g, &schedule, GAMMA, window * beta, beta).unwrap();
            let rho_r = eigen_moduli(&r_word).unwrap().spectral_radius();
            let rho_e = eigen_moduli(&e_word).unwrap().spectral_radius();
            worst_rho_r = worst_rho_r.max((rho_r - 1.0).abs());
            rho_e_max = rho_e_max.max(rho_e);
        }
    }
    assert!(
        worst_union < 1e-8,
        "spectrum union mismatch {worst_union:e}"
    );
    assert!(
        worst_rho_r <= 1e-9,
        "pull word radius off by {worst_rho_r:e}"
    );
    assert!(rho_e_max < 1.0, "damped push word radius {rho_e_max}");
    println!(
        "PASS decomposition algebra: spectrum-union mismatch {worst_union:.2e}, \
         |rho(R word) - 1| <= {worst_rho_r:.2e}, max rho(E word) {rho_e_max:.4} < 1"
    );
}

#[test]
fn a6_zero_delays_reduce_to_the_baseline() {
    let mut graphs = vec![demo10()];
    let mut rng = SplitMix64::new(606);
    for _ in 0..20 {
        graphs.push(random_strongly_connected(&mut rng));
    }
    let mut worst: f64 = 0.0;
    for g in &graphs {
        let n = g.node_count();
        let x0 = index_init(n);
        let schedule = make_schedule(&DelaySpec::zero(), g).unwrap();
        let robust = run_rppac(g, &schedule, GAMMA, &x0, HORIZON).unwrap();
        let baseline = run_ppac(g, GAMMA, &x0, HORIZON).unwrap();
        for k in 0..=HORIZON {
            for j in 0..n {
                worst = worst.max((robust.x[k][j] - baseline.x[k][j]).abs());
                worst = worst.max((robust.s[k][j] - baseline.s[k][j]).abs());
            }
        }
    }
    assert!(worst < 1e-12, "max deviation {worst:e}");
    println!(
        "PASS delay-free reduction on {} graphs: max deviation {worst:.2e} < 1e-12",
        graphs.len()
    );
}

#[test]
fn a7_spectral_trends() {
    let g = demo10();
    let gap0 = mean_spectral_gap(&g, GAMMA, 0, 100, 70).unwrap();
    let gap2 = mean_spectral_gap(&g, GAMMA, 2, 100, 70).unwrap();
    let gap5 = mean_spectral_gap(&g, GAMMA, 5, 100, 70).unwrap();
    assert!(
        gap0 > gap2 && gap2 > gap5,
        "gaps not ordered: {gap0} / {gap2} / {gap5}"
    );

    let delay_free = ArrivalSnapshot::delay_free(&g);
    let gap_small_gain = spectral_gap_of(&g, 0.01, &delay_free).unwrap();
    assert!(gap0 > gap_small_gain, "{gap0} vs {gap_small_gain}");

    for gamma in [0.05, 0.1, 0.2, 0.3] {
        let sm = build_snapshot_matrices(&g, &delay_free, gamma);
        let summary = eigen_moduli(&assemble_m(&sm)).unwrap();
        assert!(
            (summary.moduli[0] - 1.0).abs() < 1e-9,
            "leading modulus {} at gamma={gamma}",
            summary.moduli[0]
        );
        assert!(
            summary.moduli[1] < 1.0 - 1e-6,
            "second modulus {} at gamma={gamma}",
            summary.moduli[1]
        );
    }
    println!(
        "PASS spectral trends: mean gaps {gap0:.4} > {gap2:.4} > {gap5:.4} (tau 0/2/5), \
         gap(0.1)={gap0:.4} > gap(0.01)={gap_small_gain:.4}, leading eigenvalue simple"
    );
}

#[test]
fn a8_moderate_gain_beats_small_and_large() {
    let g = demo10();
    let final_of = |gamma: f64| *mc_mean_curve(&g, 2, gamma, 1).last().unwrap();
    let err_small = final_of(0.01);
    let err_mid = final_of(0.1);
    let err_large = final_of(0.3);
    assert!(
        err_mid < err_small && err_mid < err_large,
        "tau=2 errors: 0.01 -> {err_small:e}, 0.1 -> {err_mid:e}, 0.3 -> {err_large:e}"
    );
    println!(
        "PASS gain ordering at tau=2: error(0.1)={err_mid:.2e} below \
         error(0.01)={err_small:.2e} and error(0.3)={err_large:.2e}"
    );
}

#[test]
fn a9_two_node_hand_traces() {
    let g = Digraph::from_edge_list(2, &[(0, 1), (1, 0)]).unwrap();
    let tol = 1e-12;

    let schedule = make_schedule(&DelaySpec::zero(), &g).unwrap();
    let t = run_rppac(&g, &schedule, 0.1, &[0.0, 2.0], 2).unwrap();
    for (got, want) in [
        (&t.x[1], [1.0, 1.0]),
        (&t.s[1], [-1.0, 1.0]),
        (&t.x[2], [0.9, 1.1]),
        (&t.s[2], [0.1, -0.1]),
    ] {
        for j in 0..2 {
            assert!((got[j] - want[j]).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    let mut per_link = std::collections::HashMap::new();
    per_link.insert(Edge::new(0, 1), 1);
    per_link.insert(Edge::new(1, 0), 0);
    let spec = DelaySpec {
        kind: DelayKind::Constant,
        tau_bar: 1,
        per_link_bounds: Some(per_link),
        seed: 0,
        trace: None,
    };
    let schedule = make_schedule(&spec, &g).unwrap();
    for trajectory in [
        run_rppac(&g, &schedule, 0.1, &[0.0, 2.0], 2).unwrap(),
        run_matrix_form(&g, &schedule, 0.1, &[0.0, 2.0], 2).unwrap(),
    ] {
        for (got, want) in [
            (&trajectory.x[1], [0.0, 1.0]),
            (&trajectory.s[1], [0.0, 1.0]),
            (&trajectory.x[2], [1.0, 0.6]),
            (&trajectory.s[2], [-1.0, 0.9]),
        ] {
            for j in 0..2 {
                assert!((got[j] - want[j]).abs() <= tol, "{got:?} vs {want:?}");
            }
        }
        assert!((trajectory.in_flight_surplus[2] - 0.5).abs() <= tol);
    }
    println!("PASS hand-traced two-node runs, including the 0.5 in-flight surplus ledger");
}

#[test]
fn demo_pairs_match_the_shipped_edge_file() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/demo10.edges");
    let g = Digraph::from_file(path).unwrap();
    let fixture = demo10();
    assert_eq!(g.node_count(), fixture.node_count());
    assert_eq!(g.edges(), fixture.edges());
    for &(receiver, sender) in &DEMO10_PAIRS {
        assert!(g.has_edge(receiver, sender));
    }
}
