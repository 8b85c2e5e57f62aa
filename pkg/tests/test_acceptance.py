"""Acceptance criteria, one test per criterion.

Each test records a ``CRITERION <n> PASS|FAIL`` line; the lines are printed
again at the end of the pytest run. ``python tests/test_acceptance.py`` runs
the suite standalone.
"""

import csv
import io
import itertools
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from nads.bench import GAP_PERCENTS, ExperimentConfig, StartSpec, emit_outputs, run_experiment
from nads.cli import main as cli_main
from nads.gip import GipParams, SeedSet, propagate
from nads.graph import (WeightScheme, barbell9, build_graph, generate_synthetic, read_graph,
                        star4)
from nads.heuristics import katz_scores, simple_greedy, single_discount
from nads.oracle import brute_force_optimum, dense_matrix, dense_propagate, verify_local_maximum
from nads.search import SearchConfig, cds, nads, phase_streams, swap_neighborhood

RESULTS: list[str] = []
FIXTURE = GipParams(theta_l=2, theta_h=50, gamma=0.0, l0=1, h0=1)


def record(number: int, ok: bool, detail: str) -> None:
    line = f"CRITERION {number:>2} {'PASS' if ok else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def random_instance(rng, n_max, p_range=(0.15, 0.6), kinds=("uniform", "inverse_degree")):
    n = int(rng.integers(3, n_max + 1))
    p = rng.uniform(*p_range)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p] or [(0, 1)]
    kind = rng.choice(list(kinds))
    w = float(rng.choice([0.05, 0.1, 0.2, 0.3]))
    return build_graph(edges, WeightScheme(str(kind), w), node_ids=range(n))


def test_criterion_01_oracle_equivalence():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        g = random_instance(rng, 30)
        alpha = g.avg_edge_weight
        p = GipParams(theta_l=rng.uniform(0.5, 0.99 / alpha), theta_h=rng.uniform(1, 80),
                      gamma=float(rng.choice([0.0, 0.1, 0.3])), l0=float(rng.choice([0.5, 1.0])),
                      h0=float(rng.choice([1.0, 2.0])), include_t0=bool(rng.integers(2)))
        k = int(rng.integers(0, g.n + 1))
        seeds = sorted(rng.choice(g.n, size=k, replace=False).tolist())
        fast, slow = propagate(g, p, seeds).score, dense_propagate(g, p, seeds)
        worst = max(worst, abs(fast - slow) / max(abs(slow), 1e-300) if slow else abs(fast))
    elapsed = time.perf_counter() - t0
    record(1, worst <= 1e-9 and elapsed < 10,
           f"200 instances, max rel diff {worst:.2e} (tol 1e-9), {elapsed:.2f}s (< 10s)")


def test_criterion_02_local_optimum_certificate():
    rng = np.random.default_rng(202)
    t0 = time.perf_counter()
    failures = []
    for i in range(50):
        g = random_instance(rng, 12)
        budget = int(rng.integers(1, min(3, g.n - 1) + 1))
        start = SeedSet.of(rng.choice(g.n, size=budget, replace=False).tolist())
        p = GipParams(gamma=float(rng.choice([0.0, 0.1])))
        if p.theta_l * g.avg_edge_weight >= 1:
            p = GipParams(theta_l=0.9 / g.avg_edge_weight, gamma=p.gamma)
        mesh = math.comb(g.n, budget)
        for solver in (nads, cds):
            r = solver(g, p, start=start)
            scores = [t.score for t in r.trace]
            if r.stats.evaluations > mesh:
                failures.append(f"{i}:{solver.__name__} used {r.stats.evaluations} > {mesh}")
            if any(b <= a for a, b in zip(scores, scores[1:])):
                failures.append(f"{i}:{solver.__name__} trace not strictly increasing")
            if str(r.termination) != "local_optimum(2)":
                failures.append(f"{i}:{solver.__name__} ended with {r.termination}")
            elif not verify_local_maximum(g, p, r.seeds, 2).is_local_maximum:
                failures.append(f"{i}:{solver.__name__} output not 2-local max")
    elapsed = time.perf_counter() - t0
    record(2, not failures and elapsed < 60,
           f"50 instances x 2 methods, {len(failures)} failures {failures[:3]}, {elapsed:.1f}s (< 60s)")


def test_criterion_03_full_radius_is_global():
    rng = np.random.default_rng(303)
    mismatches = []
    for i in range(40):
        g = random_instance(rng, 10, kinds=("uniform",))
        start = SeedSet.of(rng.choice(g.n, size=2, replace=False).tolist())
        p = GipParams(gamma=float(rng.choice([0.0, 0.1])))
        r = nads(g, p, SearchConfig(phase3_enabled=True, d_max=4), start=start)
        best = brute_force_optimum(g, p, 2).optimum_score
        if r.score != best:
            mismatches.append((i, r.score, best))
    record(3, not mismatches, f"40 instances (n <= 10, B = 2, d_max = 4), exact mismatches: {mismatches[:3]}")


def test_criterion_04_neighborhood_counting():
    rng = np.random.default_rng(404)
    bad = []
    for i in range(100):
        g = random_instance(rng, 25, (0.05, 0.4))
        n = g.n
        budget = int(rng.integers(1, n))
        z = tuple(sorted(rng.choice(n, size=budget, replace=False).tolist()))
        full = [y.nodes for y in swap_neighborhood(z, 2, n)]
        near, far = phase_streams(g, z)
        phase1 = {tuple(sorted((set(z) - {r}) | {a})) for r in z for a in near}
        phase2 = {tuple(sorted((set(z) - {r}) | {a})) for r in z for a in far}
        if len(full) != budget * (n - budget) or len(set(full)) != len(full):
            bad.append((i, "count"))
        if phase1 & phase2 or phase1 | phase2 != set(full):
            bad.append((i, "partition"))
    record(4, not bad, f"100 random (n, B, z); |N(z,2)| = B(n-B) and phase split exact; failures {bad[:3]}")


def test_criterion_05_search_space_reduction():
    g = generate_synthetic("random_attachment", rng_seed=0, n=1000, m=2)
    z = single_discount(g, 10).selected
    near, far = phase_streams(g, z.nodes)
    ratio = (10 * len(near)) / (10 * (len(near) + len(far)))
    avg_deg = 2 * g.edge_count / g.n
    record(5, ratio <= 0.65,
           f"n=1000, avg degree {avg_deg:.2f}, B=10 SD seeds: |N∩C|/|N| = {ratio:.3f} (<= 0.65)")


def test_criterion_06_greedy_failure_fixture():
    tol = 1e-12
    star = star4()
    checks = {}
    checks["star4 greedy B=2 -> 0"] = abs(simple_greedy(star, FIXTURE, 2).objective - 0) <= tol
    r = nads(star, FIXTURE, start=single_discount(star, 2).selected)
    checks["star4 nads from SD -> 0.2"] = abs(r.score - 0.2) <= tol
    bar = barbell9()
    on = nads(bar, FIXTURE, SearchConfig(phase3_enabled=True, d_max=4), start=SeedSet.of((3, 5)))
    off = nads(bar, FIXTURE, SearchConfig(), start=SeedSet.of((3, 5)))
    checks["barbell9 {3,5} phase3 d_max=4 -> 0.2"] = abs(on.score - 0.2) <= tol
    checks[f"barbell9 {{3,5}} phase3 off -> 0 (got {off.score:.6g})"] = abs(off.score - 0) <= tol
    failed = [k for k, ok in checks.items() if not ok]
    record(6, not failed, "; ".join(f"{k}: {'ok' if v else 'MISMATCH'}" for k, v in checks.items()))


def test_criterion_07_katz():
    g = build_graph([(0, 1)], WeightScheme("uniform", 0.5))
    c = katz_scores(g, 0.1)
    closed = float(np.max(np.abs(c - 0.45 / 0.55)))
    rng = np.random.default_rng(707)
    worst, used = 0.0, 0
    while used < 20:
        g = random_instance(rng, 50, (0.03, 0.2))
        gamma = float(rng.choice([0.1, 0.3, 0.5]))
        M = (1 - gamma) * dense_matrix(g)
        if max(abs(np.linalg.eigvals(M))) >= 0.95:
            continue
        exact = np.linalg.solve(np.eye(g.n) - M, np.ones(g.n)) - 1
        worst = max(worst, float(np.max(np.abs(katz_scores(g, gamma) - exact))))
        used += 1
    record(7, closed <= 1e-9 and worst <= 1e-8,
           f"2-node closed form err {closed:.1e} (1e-9); 20 dense solves max err {worst:.1e} (1e-8)")


FACEBOOK_NAMES = ("facebook_combined.txt", "facebook_combined.txt.gz")


def _real_graph_path():
    explicit = os.environ.get("NADS_REAL_GRAPH")
    if explicit:
        return Path(explicit)
    base = Path(os.environ.get("NADS_DATA_DIR", "data"))
    for name in FACEBOOK_NAMES:
        if (base / name).exists():
            return base / name
    return None


def test_criterion_08_real_graph_relative():
    path = _real_graph_path()
    if path is None or not path.exists():
        record(8, False, "no ~4k-node real graph available (set NADS_DATA_DIR to a directory holding "
                         "facebook_combined.txt, or NADS_REAL_GRAPH); criterion not evaluated")
    g = read_graph(path)
    params = GipParams()
    t0 = time.perf_counter()
    wins, rows = 0, []
    for budget in (5, 10, 15, 20):
        start = single_discount(g, budget).selected
        cfg = SearchConfig(time_budget=60.0)
        a = nads(g, params, cfg, start=start).score
        b = cds(g, params, cfg, start=start).score
        wins += a >= b
        rows.append(f"B={budget}: {a:.4f} vs {b:.4f}")
    elapsed = time.perf_counter() - t0
    record(8, wins >= 3 and elapsed <= 600,
           f"{path.name} n={g.n}: nads >= cds in {wins}/4 ({'; '.join(rows)}), {elapsed:.0f}s (<= 600s)")


def test_surrogate_real_scale_informational():
    # not criterion 8: same protocol on a synthetic graph of the same size, short budgets
    g = generate_synthetic("random_attachment", rng_seed=0, n=4039, m=22)
    wins = 0
    for budget in (5, 10, 15, 20):
        start = single_discount(g, budget).selected
        cfg = SearchConfig(time_budget=3.0)
        wins += nads(g, GipParams(), cfg, start=start).score >= cds(g, GipParams(), cfg, start=start).score
    RESULTS.append(f"INFO  synthetic 4039-node stand-in (3s/run): nads >= cds in {wins}/4 budgets")


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_criterion_09_gap_series(tmp_path):
    g = generate_synthetic("random_attachment", rng_seed=12, n=300, m=2)
    cfg = ExperimentConfig(graph_path="synthetic:ra300", methods=["sd", "kc", "cc", "ci", "nads", "cds"],
                           budgets=[4, 8], starts=StartSpec.parse("pseudo_random:3:5"),
                           time_budget_per_B=0.25, dataset="ra300")
    report = run_experiment(cfg, graph=g)
    emit_outputs(report, tmp_path)
    problems = []
    for budget in (4, 8):
        table = _read(tmp_path / f"gaps_{budget}.csv")
        cols = [c for c in table[0] if c.startswith("g")]
        if cols != [f"g{p}" for p in GAP_PERCENTS]:
            problems.append(f"columns {cols}")
        series = {}
        for row in _read(tmp_path / f"gap_series_{budget}.csv"):
            series.setdefault((row["method"], row["start"]), []).append(
                (float(row["elapsed_s"]), float(row["gap"])))
        for key, pts in series.items():
            gaps = [gp for _, gp in sorted(pts)]
            if any(not 0 <= gp <= 1 for gp in gaps):
                problems.append(f"{key} out of range")
            if any(b > a for a, b in zip(gaps, gaps[1:])):
                problems.append(f"{key} increases")
        for row in table:
            vals = [float(row[c]) for c in cols]
            if any(not 0 <= v <= 1 for v in vals) or any(b > a for a, b in zip(vals, vals[1:])):
                problems.append(f"table row {row['method']}/{row['start']}")
        best_final = min(gps[-1][1] for gps in series.values())
        if best_final != 0.0:
            problems.append(f"B={budget} best final gap {best_final}")
    record(9, not problems, f"gaps in [0,1], nonincreasing, best final 0, columns g15..g100; problems {problems[:3]}")


def _mask(path: Path) -> str:
    text = path.read_text()
    if not path.suffix == ".csv":
        return text
    rows = list(csv.reader(io.StringIO(text)))
    drop = [i for i, h in enumerate(rows[0]) if h in ("time_s", "elapsed_s")]
    return "\n".join(",".join(v for i, v in enumerate(r) if i not in drop) for r in rows)


def test_criterion_10_determinism(tmp_path, capsys):
    ini = tmp_path / "exp.ini"
    ini.write_text("[experiment]\ngraph_path = synthetic:random_attachment:n=400,m=3,seed=2\n"
                   "methods = sd, sg, kc, cc, ci, nads, cds\nbudgets = 3, 6\n"
                   "weights = uniform:0.05\nstarts = pseudo_random:3:11\neval_budget = 400\n[search]\nrng_seed = 4\n")
    for run in ("a", "b"):
        assert cli_main(["run", "--config", str(ini), "--out", str(tmp_path / run), "--rng-seed", "11"]) == 0
    capsys.readouterr()
    a_files = sorted(p.name for p in (tmp_path / "a").iterdir())
    b_files = sorted(p.name for p in (tmp_path / "b").iterdir())
    diff = [] if a_files == b_files else ["file lists differ"]
    for name in a_files:
        if name in b_files and _mask(tmp_path / "a" / name) != _mask(tmp_path / "b" / name):
            diff.append(name)
    record(10, not diff, f"{len(a_files)} output files compared with time columns masked; differing: {diff[:4]}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
