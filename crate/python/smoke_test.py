#!/usr/bin/env python3
"""Smoke test for the pushpull_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/
(release preferred), copies it next to a temp dir as an importable module,
and exercises the main surface end to end. Build the library first with

    cargo build -p pushpull-py --release

and then run

    python3 python/smoke_test.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libpushpull_py.so", "pushpull_py.so", "libpushpull_py.dylib")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "pushpull_py cdylib not found under target/; "
            "run `cargo build -p pushpull-py --release` first"
        )
    stage = Path(tempfile.mkdtemp(prefix="pushpull-py-"))
    shutil.copy2(built, stage / "pushpull_py.so")
    sys.path.insert(0, str(stage))
    import pushpull_py

    return pushpull_py


def approx(a, b, tol):
    return abs(a - b) < tol


def main():
    pp = import_module()
    print(f"loaded pushpull_py {pp.__version__}")

    # the 10-node demo network, (receiver, sender) pairs, 0-based
    edges = [
        (1, 0), (3, 0), (0, 1), (1, 2), (6, 2), (4, 3), (7, 3), (3, 4),
        (5, 4), (6, 5), (5, 6), (2, 6), (3, 7), (8, 7), (9, 8), (6, 9),
        (8, 9),
    ]
    g = pp.Digraph(10, edges)
    print(repr(g))
    assert g.node_count() == 10 and g.edge_count() == 17
    assert g.is_strongly_connected()
    assert g.in_degree(3) == 3 and g.out_degree(0) == 2
    assert approx(g.gamma_upper_bound(), 1.0 / 3.0, 1e-12)

    rows = g.pull_weights()
    assert all(approx(sum(row), 1.0, 1e-12) for row in rows)
    cols = g.push_weights()
    assert all(approx(sum(col[j] for col in cols), 1.0, 1e-12) for j in range(10))

    x0 = [float(j) for j in range(1, 11)]

    # the two executions of the protocol must agree on the same delay draw
    node_level = pp.run_rppac(g, 0.1, x0, 300, tau_bar=2, seed=7)
    matrix_level = pp.run_matrix_form(g, 0.1, x0, 300, tau_bar=2, seed=7)
    worst = max(
        abs(a - b)
        for xs in (zip(node_level.x, matrix_level.x), zip(node_level.s, matrix_level.s))
        for row_a, row_b in xs
        for a, b in zip(row_a, row_b)
    )
    assert worst < 1e-10, f"executions disagree by {worst}"
    print(f"message-level vs matrix-form: max deviation {worst:.2e}")

    # conservation, convergence to the exact average, surplus release
    assert node_level.max_mass_drift() < 1e-9
    assert node_level.initial_average == 5.5
    assert all(approx(x, 5.5, 1e-3) for x in node_level.final_x())
    assert all(abs(s) < 1e-1 for s in node_level.final_s())
    print(f"converged: final error {node_level.error[-1]:.2e}")

    # delay-free robust run equals the baseline
    robust = pp.run_rppac(g, 0.1, x0, 100, tau_bar=0, delay_kind="zero")
    baseline = pp.run_ppac(g, 0.1, x0, 100)
    worst = max(
        abs(a - b)
        for row_a, row_b in zip(robust.x, baseline.x)
        for a, b in zip(row_a, row_b)
    )
    assert worst < 1e-12
    print(f"delay-free reduction: max deviation {worst:.2e}")

    assert approx(pp.consensus_error(x0, 5.5), 8.25, 1e-12)

    curve = pp.monte_carlo_mean_error(g, 0.1, 300, 20, tau_bar=2, seed=1)
    assert len(curve) == 301 and curve[-1] < 1e-3
    print(f"monte carlo mean error at k=300: {curve[-1]:.2e}")

    moduli, gap = pp.eigen_moduli([[0.0, 1.0], [1.0, 1.0]])
    assert approx(moduli[0], 1.6180, 1e-4) and approx(moduli[1], 0.6180, 1e-4)

    gaps = pp.mean_gap_vs_delay(g, 0.1, [0, 2, 5], samples=50, seed=7)
    assert gaps[0] > gaps[2] > gaps[5]
    print(f"mean spectral gaps: tau 0/2/5 -> {gaps[0]:.4f}/{gaps[2]:.4f}/{gaps[5]:.4f}")

    table = pp.sweep_gamma(g, 0, [0.01, 0.1], samples=1, seed=1)
    assert table["0.1"] > table["0.01"]

    print("OK")


if __name__ == "__main__":
    main()
