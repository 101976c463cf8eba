import csv
import json

import numpy as np
import pytest

from trafficqubo import (CongestionWeights, GlobalAssignment, Route,
                         baseline_random, baseline_shortest, build_qubo,
                         build_report, cluster_cost, congestion_cost,
                         delta_energy, energy, export_heatmap, improvement_pct,
                         load_assignment, overlap_degrees, qubo_density,
                         save_assignment)

from conftest import meridian_point
from oracles import assignment_cost, make_random_cw, make_scenario


def test_congestion_cost_matches_energy_of_one_hot():
    rng = np.random.default_rng(0)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        k = int(rng.integers(1, 4))
        cw = make_random_cw(rng, n, k, partial=True)
        q = build_qubo(cw, n, k)
        choice = {i: int(rng.integers(len(cw.pi[i]))) for i in range(n)}
        ga = GlobalAssignment(choice)
        bits = [0] * q.n_var
        for i, alt in choice.items():
            bits[i * k + alt] = 1
        cost = congestion_cost(cw, ga)
        assert cost == pytest.approx(assignment_cost(cw, choice), rel=1e-12)
        assert cost == pytest.approx(energy(q, bits), rel=1e-9, abs=1e-9)


def test_congestion_cost_requires_full_coverage():
    cw = CongestionWeights({(0, 1, 0, 0): 1.0},
                           {0: [0.0, 1.0], 1: [0.0, 2.0]}, 10.0, 4.0)
    with pytest.raises(ValueError):
        congestion_cost(cw, GlobalAssignment({0: 0}))
    with pytest.raises(ValueError):
        congestion_cost(cw, GlobalAssignment({0: 0, 1: 5}))


def test_cluster_cost_counts_only_internal_pairs():
    cw = CongestionWeights({(0, 1, 0, 0): 2.0, (1, 2, 0, 0): 5.0,
                            (0, 2, 0, 0): 11.0},
                           {0: [0.0], 1: [1.5], 2: [0.0]}, 10.0, 4.0)
    ga = GlobalAssignment({0: 0, 1: 0, 2: 0})
    assert cluster_cost(cw, ga, [0, 1]) == pytest.approx(2.0 + 1.5)
    assert cluster_cost(cw, ga, [2]) == pytest.approx(0.0)
    total = congestion_cost(cw, ga)
    internal = cluster_cost(cw, ga, [0, 1]) + cluster_cost(cw, ga, [2])
    assert total - internal == pytest.approx(5.0 + 11.0)


def test_delta_energy_and_improvement_pct():
    assert delta_energy(9.0, 10.0) == pytest.approx(-0.1)
    with pytest.raises(ValueError):
        delta_energy(1.0, 0.0)
    assert improvement_pct(10.0, 8.0) == pytest.approx(20.0)
    assert improvement_pct(0.0, 0.0) == 0.0
    with pytest.raises(ValueError):
        improvement_pct(0.0, 1.0)


def stub(vid, alt, duration):
    return Route(vid, alt, ["E"], duration, duration * 10.0,
                 [meridian_point(0.0, "E", 0.0)], 10.0)


def test_baseline_shortest_lowest_index_on_ties():
    routes = {0: [stub(0, 0, 40.0), stub(0, 1, 30.0)],
              1: [stub(1, 0, 25.0), stub(1, 1, 25.0)]}
    ga = baseline_shortest(routes)
    assert ga.choice == {0: 1, 1: 0}
    assert set(ga.provenance.values()) == {"shortest"}


def test_baseline_random_uniform_and_deterministic():
    routes = {vid: [stub(vid, a, 10.0 + a) for a in range(3)] for vid in range(40)}
    a = baseline_random(routes, seed=5)
    b = baseline_random(routes, seed=5)
    c = baseline_random(routes, seed=6)
    assert a.choice == b.choice
    assert a.choice != c.choice
    assert set(a.choice.values()) <= {0, 1, 2}
    assert len(set(a.choice.values())) > 1


def test_qubo_density_examples():
    assert qubo_density(1, {}) == 0.0
    coeffs = {(0, 1): 2.0, (0, 0): -1.0, (2, 3): 0.0, (1, 3): 4.0}
    # strictly-upper nonzeros: (0,1) and (1,3) out of C(4,2) = 6
    assert qubo_density(4, coeffs) == pytest.approx(2.0 / 6.0)


def test_overlap_histogram_counts_degree_zero():
    cw = CongestionWeights({(0, 1, 0, 0): 1.0, (0, 2, 0, 0): 1.0},
                           {i: [0.0] for i in range(4)}, 10.0, 4.0)
    assert overlap_degrees(cw) == {2: 1, 1: 2, 0: 1}


def test_heatmap_conservation_and_outputs(tmp_path):
    net, _, routes, cw = make_scenario(seed=4, n=8, rows=4, cols=4,
                                       spacing_m=220.0, k=2, l_max_m=2500.0)
    ga = baseline_shortest(routes)
    csv_path = tmp_path / "heatmap.csv"
    geo_path = tmp_path / "heatmap.geojson"
    totals = export_heatmap(net, routes, ga, alpha_s=10.0, window_s=600.0,
                            gamma_s=4.0, csv_path=csv_path, geojson_path=geo_path)

    pi_sum = sum(cw.pi[vid][alt] for vid, alt in ga.choice.items())
    assert sum(totals.values()) + pi_sum == pytest.approx(
        congestion_cost(cw, ga), abs=1e-6)

    with open(csv_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert {r["edge_id"] for r in rows} == set(totals)
    for r in rows:
        assert float(r["score"]) == pytest.approx(totals[r["edge_id"]], rel=1e-12)

    geo = json.loads(geo_path.read_text())
    assert geo["type"] == "FeatureCollection"
    assert len(geo["features"]) == len(net.edges)
    feature = geo["features"][0]
    eid = feature["properties"]["edge_id"]
    edge = net.edge_by_id[eid]
    assert feature["geometry"]["coordinates"][0] == [edge.geometry[0][1],
                                                     edge.geometry[0][0]]
    assert feature["properties"]["score"] == pytest.approx(totals[eid])


def test_report_structure_and_numbers():
    _, _, routes, cw = make_scenario(seed=5, n=8, rows=4, cols=4,
                                     spacing_m=220.0, k=2, l_max_m=2500.0)
    shortest = baseline_shortest(routes)
    rand = baseline_random(routes, seed=0)
    ga = GlobalAssignment({vid: 0 for vid in routes},
                          {vid: "solver:sa" for vid in routes})
    clusters = [sorted(routes)[:4], sorted(routes)[4:]]
    report = build_report(cw, ga, clusters, {"shortest": shortest, "random": rand},
                          validity_rate=1.0, final_valid=True,
                          qubo_densities=[0.25, 0.5])
    d = report.to_dict()
    total = congestion_cost(cw, ga)
    assert d["total_cost"] == pytest.approx(total)
    assert len(d["per_cluster_costs"]) == 2
    internal = sum(d["per_cluster_costs"])
    assert d["cross_cluster_cost"] == pytest.approx(total - internal, abs=1e-9)
    assert d["baseline_costs"]["shortest"] == pytest.approx(
        congestion_cost(cw, shortest))
    if congestion_cost(cw, shortest) != 0.0:
        want = improvement_pct(congestion_cost(cw, shortest), total)
        assert d["improvements_pct"]["shortest"] == pytest.approx(want)
    assert d["validity_rate"] == 1.0
    assert d["final_assignment_valid"] is True
    assert d["qubo_densities"] == [0.25, 0.5]
    assert isinstance(d["overlap_histogram"], dict)
    assert json.dumps(d)


def test_assignment_round_trip(tmp_path):
    ga = GlobalAssignment({0: 1, 1: 0, 2: 1},
                          {0: "solver:sa", 1: "repair", 2: "shortest"})
    path = tmp_path / "assignment.csv"
    save_assignment(ga, path)
    back = load_assignment(path)
    assert back.choice == ga.choice
    assert back.provenance == ga.provenance


def test_load_assignment_rejects_duplicates(tmp_path):
    path = tmp_path / "assignment.csv"
    path.write_text("vehicle_id,alt,provenance\n0,0,shortest\n0,1,repair\n")
    with pytest.raises(ValueError):
        load_assignment(path)
