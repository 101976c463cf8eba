"""End-to-end quality gate.

Each test pins one measurable guarantee of the package, with its tolerance
and, where relevant, its wall-clock budget stated inline. Every test prints
a single [PASS] line; a failed test is the corresponding [FAIL] line in the
pytest report.
"""

import itertools
import math
import time

import numpy as np
import pytest

from trafficqubo import (ConflictGraph, GlobalAssignment, PipelineConfig,
                         SolverConfig, baseline_shortest, build_qubo,
                         congestion_cost, energy, generate_grid, is_valid,
                         leiden, merge_and_filter, modularity, pair_score,
                         repair, run_pipeline, solve_exhaustive, solve_sa,
                         solve_tabu)
from trafficqubo.geo import haversine_m, offset_latlon

from oracles import (best_partition_exhaustive, brute_force_weights,
                     dense_matrix_energy, exhaustive_dict, law_of_cosines_m,
                     make_random_cw, make_scenario, ref_pair_score)


def test_criterion_01_penalty_scale_enforces_feasibility():
    """Across 200 random instances (n in 2..6, k = 2), the unconstrained
    global minimum over all 2^(n*k) states is a feasible one-hot state and
    matches the feasible minimum to 1e-9; budget 30 s."""
    rng = np.random.default_rng(20260816)
    t0 = time.perf_counter()
    for trial in range(200):
        n = int(rng.integers(2, 7))
        cw = make_random_cw(rng, n, 2)
        q = build_qubo(cw, n, 2)
        full = solve_exhaustive(q)
        feas = solve_exhaustive(q, feasible_only=True)
        assert is_valid(q, full.assignment), f"trial {trial}: minimum infeasible"
        tol = 1e-9 * max(1.0, abs(feas.energy))
        assert abs(full.energy - feas.energy) <= tol, f"trial {trial}"
        if trial % 40 == 0:
            want_e, want_x = exhaustive_dict(q)
            assert abs(full.energy - want_e) <= tol
            assert list(full.assignment) == want_x
    elapsed = time.perf_counter() - t0
    assert elapsed < 30.0, f"budget exceeded: {elapsed:.1f}s"
    print(f"[PASS] penalty scale: 200/200 minima feasible in {elapsed:.1f}s")


def test_criterion_02_matrix_formula_equivalence():
    """The sparse coefficient build evaluates identically (rel 1e-9) to a
    dense symmetric-matrix quadratic form on arbitrary states."""
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(30):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, 4))
        cw = make_random_cw(rng, n, k)
        q = build_qubo(cw, n, k)
        states = [rng.integers(0, 2, size=q.n_var).tolist() for _ in range(40)]
        states.append([0] * q.n_var)
        states.append([1] * q.n_var)
        for bits in states:
            want = dense_matrix_energy(cw, n, k, q.lam, bits)
            got = energy(q, bits)
            assert got == pytest.approx(want, rel=1e-9, abs=1e-9)
            checked += 1
    print(f"[PASS] matrix equivalence: {checked} states across 30 instances")


def test_criterion_03_congestion_matches_brute_force():
    """On 50 generated scenarios of up to 10 vehicles, every pair weight and
    every delay penalty equals the triple-loop reference at rel 1e-9."""
    t0 = time.perf_counter()
    total_keys = 0
    for seed in range(50):
        n = 4 + seed % 7
        _, _, routes, cw = make_scenario(seed, n=n, rows=4 + seed % 2,
                                         cols=4 + (seed // 2) % 2,
                                         spacing_m=200.0 + 10.0 * (seed % 5),
                                         k=2, l_min_m=200.0, l_max_m=2500.0)
        ref_w, ref_pi = brute_force_weights(routes, 10.0, 600.0, 4.0)
        assert set(cw.weights) == set(ref_w), f"seed {seed}: key sets differ"
        for key, want in ref_w.items():
            assert cw.weights[key] == pytest.approx(want, rel=1e-9, abs=1e-12), \
                f"seed {seed}: {key}"
        assert set(cw.pi) == set(ref_pi)
        for vid, want in ref_pi.items():
            assert cw.pi[vid] == pytest.approx(want, rel=1e-9)
        total_keys += len(ref_w)
    elapsed = time.perf_counter() - t0
    print(f"[PASS] congestion scoring: 50 scenarios, {total_keys} weights, "
          f"{elapsed:.1f}s")


def test_criterion_04_heuristics_reach_optimum():
    """On a 10-vehicle instance with a known feasible optimum, simulated
    annealing and tabu search each hit the optimum on >= 95 of 100 seeds at
    default budgets, and every repaired solution is never worse than the
    fastest-route baseline; budget 60 s."""
    t0 = time.perf_counter()
    net = generate_grid(5, 5, 200.0, 10.0, 48.72, 21.26)
    _, _, routes, cw = make_scenario(3, n=10, rows=5, cols=5, spacing_m=200.0,
                                     k=2, l_min_m=300.0, l_max_m=3000.0,
                                     attraction=net.nodes["n2_2"],
                                     attraction_radius_m=400.0)
    q = build_qubo(cw, 10, 2)
    opt = solve_exhaustive(q, feasible_only=True).energy
    base = congestion_cost(cw, baseline_shortest(routes))
    assert opt < base, "scenario lost its optimization headroom"

    tol = 1e-9 * max(1.0, abs(opt))
    hits = {"sa": 0, "tabu": 0}
    for seed in range(100):
        for name, func in (("sa", solve_sa), ("tabu", solve_tabu)):
            res = func(q, SolverConfig(seed=seed))
            fixed = repair(q, res.assignment)
            assert energy(q, fixed) <= base + 1e-9, f"{name} seed {seed} above baseline"
            if abs(res.energy - opt) <= tol:
                hits[name] += 1
    elapsed = time.perf_counter() - t0
    assert hits["sa"] >= 95, f"sa hit only {hits['sa']}/100"
    assert hits["tabu"] >= 95, f"tabu hit only {hits['tabu']}/100"
    assert elapsed < 60.0, f"budget exceeded: {elapsed:.1f}s"
    print(f"[PASS] heuristic quality: sa {hits['sa']}/100, tabu {hits['tabu']}/100, "
          f"{elapsed:.1f}s")


def test_criterion_05_attraction_scenario_improves():
    """A 20x20 grid with 500 vehicles drawn to one attraction (k = 2,
    alpha = 10 s, window = 600 s, gamma = 4 s): the optimized assignment cuts
    total congestion by at least 5% against everyone-takes-the-fastest-route;
    budget 300 s."""
    t0 = time.perf_counter()
    net = generate_grid(20, 20, 300.0, 13.9, 48.72, 21.26)
    _, _, routes, cw = make_scenario(0, n=500, rows=20, cols=20,
                                     spacing_m=300.0, speed_mps=13.9, k=2,
                                     l_min_m=600.0, l_max_m=8000.0,
                                     attraction=net.nodes["n10_10"],
                                     attraction_radius_m=500.0)
    q = build_qubo(cw, 500, 2)
    res = solve_sa(q, SolverConfig(seed=0))
    fixed = repair(q, res.assignment)
    assert is_valid(q, fixed)
    choice = {i: fixed[i * 2:i * 2 + 2].index(1) for i in range(500)}
    optimized = congestion_cost(cw, GlobalAssignment(choice))
    base = congestion_cost(cw, baseline_shortest(routes))
    improvement = 100.0 * (base - optimized) / base
    elapsed = time.perf_counter() - t0
    assert improvement >= 5.0, f"improvement {improvement:.2f}% < 5%"
    assert elapsed < 300.0, f"budget exceeded: {elapsed:.1f}s"
    print(f"[PASS] city scenario: {improvement:.2f}% improvement "
          f"({base:.0f} -> {optimized:.0f}) in {elapsed:.1f}s")


def _connected(g, comm):
    comm = set(comm)
    start = next(iter(comm))
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nb in g.adj.get(node, {}):
            if nb in comm and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return seen == comm


def test_criterion_06_clustering_structure():
    """Decomposition guarantees: 25 planted blocks of 100 vehicles are cut
    into connected clusters with sum |C|^2 <= n^2 / 20 and every kept cluster
    >= the size floor; on a 10-node two-clique graph the partition equals the
    best of all 115,975 set partitions."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(12)
    blocks = [list(range(b * 100, (b + 1) * 100)) for b in range(25)]
    adj = {}

    def add(u, v, w):
        adj.setdefault(u, {})[v] = adj.get(u, {}).get(v, 0.0) + w
        adj.setdefault(v, {})[u] = adj.get(v, {}).get(u, 0.0) + w

    for blk in blocks:
        for u, v in itertools.combinations(blk, 2):
            if rng.random() < 0.12:
                add(u, v, float(rng.uniform(1.0, 3.0)))
    for _ in range(2500):
        b1, b2 = rng.choice(25, size=2, replace=False)
        add(blocks[b1][int(rng.integers(100))],
            blocks[b2][int(rng.integers(100))], 0.05)
    g = ConflictGraph(sorted(adj), adj)

    parts = leiden(g, 1.0, seed=0)
    for comm in parts:
        assert _connected(g, comm)
    cs = merge_and_filter(parts, g, m_min=50, max_clusters=25,
                          all_vehicles=list(range(2500)))
    assert all(len(c) >= 50 for c in cs.clusters)
    sum_sq = sum(len(c) ** 2 for c in cs.clusters)
    assert sum_sq <= 2500 ** 2 / 20, f"sum of squared sizes {sum_sq}"
    covered = sorted(v for c in cs.clusters for v in c) + sorted(cs.residual)
    assert sorted(covered) == list(range(2500))

    clique_adj = {}
    for blk in ([0, 1, 2, 3, 4], [5, 6, 7, 8, 9]):
        for u, v in itertools.combinations(blk, 2):
            clique_adj.setdefault(u, {})[v] = 5.0
            clique_adj.setdefault(v, {})[u] = 5.0
    clique_adj[0][5] = 0.5
    clique_adj[5][0] = 0.5
    g2 = ConflictGraph(list(range(10)), clique_adj)
    best_q, best_parts = best_partition_exhaustive(g2, 1.0)
    got = leiden(g2, 1.0, seed=0)
    assert {frozenset(c) for c in got} == best_parts
    assert modularity(g2, got, 1.0) == pytest.approx(best_q, rel=1e-12)
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0, f"budget exceeded: {elapsed:.1f}s"
    print(f"[PASS] clustering: {len(cs.clusters)} clusters, sum|C|^2 = {sum_sq}, "
          f"two-clique exact, {elapsed:.1f}s")


def test_criterion_07_pair_score_properties():
    """10,000 random inputs: scores stay in [0, alpha], vanish at or beyond
    gamma * mean speed, never increase with distance, and match the direct
    formula at 1e-12."""
    rng = np.random.default_rng(99)
    for _ in range(10_000):
        d = float(rng.uniform(0.0, 500.0))
        v1 = float(rng.uniform(0.0, 35.0))
        v2 = float(rng.uniform(0.0, 35.0))
        alpha = float(rng.uniform(0.5, 40.0))
        gamma = float(rng.uniform(0.2, 12.0))
        s = pair_score(d, v1, v2, alpha, gamma)
        assert 0.0 <= s <= alpha
        assert s == pytest.approx(ref_pair_score(d, v1, v2, alpha, gamma),
                                  abs=1e-12)
        v_mean = 0.5 * (v1 + v2)
        if v_mean > 0.0:
            if d >= gamma * v_mean:
                assert s == 0.0
            assert pair_score(0.0, v1, v2, alpha, gamma) == pytest.approx(alpha)
        assert pair_score(d * 0.5, v1, v2, alpha, gamma) >= s
    print("[PASS] pair score: 10000 random property checks")


def test_criterion_08_distance_formulas_agree():
    """1,000 random pairs under 50 km: haversine and the spherical law of
    cosines agree within 5 m."""
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(1000):
        lat = float(rng.uniform(-70.0, 70.0))
        lon = float(rng.uniform(-180.0, 180.0))
        bearing = float(rng.uniform(0.0, 2.0 * math.pi))
        dist = float(rng.uniform(1.0, 49_500.0))
        lat2, lon2 = offset_latlon(lat, lon, dist * math.cos(bearing),
                                   dist * math.sin(bearing))
        gap = abs(haversine_m(lat, lon, lat2, lon2)
                  - law_of_cosines_m(lat, lon, lat2, lon2))
        worst = max(worst, gap)
    assert worst <= 5.0, f"worst gap {worst:.3f} m"
    print(f"[PASS] distances: worst haversine/law-of-cosines gap {worst:.2e} m")


def test_criterion_09_reproducible_runs(tmp_path):
    """Two full pipeline runs with the same configuration and seed produce a
    byte-identical manifest and byte-identical artifacts."""
    def cfg():
        return PipelineConfig(grid_rows=5, grid_cols=5, grid_spacing_m=250.0,
                              n=15, l_min_m=100.0, l_max_m=2500.0,
                              solver="sa", seed=7)

    m1 = run_pipeline(cfg(), tmp_path / "a")
    m2 = run_pipeline(cfg(), tmp_path / "b")
    assert (tmp_path / "a/manifest.json").read_bytes() == \
        (tmp_path / "b/manifest.json").read_bytes()
    assert m1.artifacts == m2.artifacts
    for name in m1.artifacts:
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes(), name
    print(f"[PASS] reproducibility: {len(m1.artifacts)} artifacts byte-identical")


def test_criterion_10_repair_always_valid():
    """repair() turns arbitrary bit strings into valid one-hot assignments on
    100 random instances, including padded short blocks, with no exceptions."""
    rng = np.random.default_rng(31)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(1, 9))
        k = int(rng.integers(1, 5))
        cw = make_random_cw(rng, n, k, partial=bool(trial % 2))
        q = build_qubo(cw, n, k)
        for _ in range(20):
            bits = rng.integers(0, 2, size=q.n_var).tolist()
            fixed = repair(q, bits)
            assert is_valid(q, fixed)
            checked += 1
    print(f"[PASS] repair: {checked} arbitrary states made valid")
