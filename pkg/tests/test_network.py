import math

import pytest

from trafficqubo import (EmptyNetworkError, NetworkFormatError, clip_network,
                         generate_grid, load_network, save_network)
from trafficqubo.geo import haversine_m
from trafficqubo.network import Edge, RoadNetwork


def test_grid_shape_and_ids(grid3):
    assert len(grid3.nodes) == 9
    assert len(grid3.edges) == 24
    assert "n0_0" in grid3.nodes and "n2_2" in grid3.nodes
    ids = [e.edge_id for e in grid3.edges]
    assert len(set(ids)) == len(ids)


def test_grid_spacing_within_tolerance(grid3):
    for edge in grid3.edges:
        lat1, lon1 = grid3.nodes[edge.from_node]
        lat2, lon2 = grid3.nodes[edge.to_node]
        d = haversine_m(lat1, lon1, lat2, lon2)
        assert abs(d - 250.0) / 250.0 < 1e-3
        assert abs(edge.length_m - d) / d < 5e-3


def test_grid_is_strongly_connected(grid3):
    seen = {"n0_0"}
    stack = ["n0_0"]
    while stack:
        node = stack.pop()
        for edge in grid3.out_edges[node]:
            if edge.to_node not in seen:
                seen.add(edge.to_node)
                stack.append(edge.to_node)
    assert seen == set(grid3.nodes)


def test_save_load_round_trip_is_byte_identical(grid3, tmp_path):
    p1 = tmp_path / "net1.txt"
    p2 = tmp_path / "net2.txt"
    save_network(grid3, p1)
    net2 = load_network(p1)
    save_network(net2, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert set(net2.nodes) == set(grid3.nodes)
    assert [e.edge_id for e in net2.edges] == [e.edge_id for e in grid3.edges]
    for a, b in zip(grid3.edges, net2.edges):
        assert a.length_m == b.length_m
        assert a.speed_mps == b.speed_mps
        assert a.geometry == b.geometry


def test_two_way_line_expands_to_reverse_twin(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text(
        "NODES 2\n"
        "a 48.0 21.0\n"
        "b 48.001 21.0\n"
        "EDGES 1\n"
        "e1 a b 111.2 10.0 0 2 48.0 21.0 48.001 21.0\n")
    net = load_network(path)
    assert [e.edge_id for e in net.edges] == ["e1", "e1_r"]
    fwd, rev = net.edges
    assert (fwd.from_node, fwd.to_node) == ("a", "b")
    assert (rev.from_node, rev.to_node) == ("b", "a")
    assert rev.geometry == tuple(reversed(fwd.geometry))
    assert all(e.oneway for e in net.edges)


def test_format_errors_carry_line_numbers(tmp_path):
    cases = [
        ("NODES x\n", "line 1"),
        ("NODES 1\na 48.0\nEDGES 0\n", "line 2"),
        ("NODES 1\na 48.0 21.0\nEDGES 1\ne1 a a\n", "line 4"),
        ("NODES 2\na 48.0 21.0\nb 48.001 21.0\nEDGES 1\n"
         "e1 a b 111.2 10.0 7 2 48.0 21.0 48.001 21.0\n", "oneway"),
        ("NODES 1\na 48.0 21.0\nEDGES 0\nextra\n", "trailing"),
    ]
    for body, needle in cases:
        path = tmp_path / "bad.txt"
        path.write_text(body)
        with pytest.raises(NetworkFormatError) as err:
            load_network(path)
        assert needle in str(err.value)


def test_dangling_edge_reference_rejected(tmp_path):
    path = tmp_path / "net.txt"
    path.write_text(
        "NODES 1\n"
        "a 48.0 21.0\n"
        "EDGES 1\n"
        "e1 a missing 111.2 10.0 1 2 48.0 21.0 48.001 21.0\n")
    with pytest.raises(NetworkFormatError):
        load_network(path)


def test_geometry_must_match_declared_length():
    nodes = {"a": (48.0, 21.0), "b": (48.001, 21.0)}
    geom = ((48.0, 21.0), (48.001, 21.0))
    arc = haversine_m(48.0, 21.0, 48.001, 21.0)
    with pytest.raises(NetworkFormatError):
        RoadNetwork(nodes, [Edge("e1", "a", "b", arc * 1.2, 10.0, True, geom)])
    net = RoadNetwork(nodes, [Edge("e1", "a", "b", arc, 10.0, True, geom)])
    assert net.edges[0].travel_time_s == pytest.approx(arc / 10.0)


def test_duplicate_edge_id_rejected():
    nodes = {"a": (48.0, 21.0), "b": (48.001, 21.0)}
    arc = haversine_m(48.0, 21.0, 48.001, 21.0)
    geom = ((48.0, 21.0), (48.001, 21.0))
    e = Edge("e1", "a", "b", arc, 10.0, True, geom)
    twin = Edge("e1", "b", "a", arc, 10.0, True, tuple(reversed(geom)))
    with pytest.raises(NetworkFormatError):
        RoadNetwork(nodes, [e, twin])


def test_clip_keeps_disc_and_drops_severed_edges():
    net = generate_grid(5, 5, 300.0, 10.0, 48.72, 21.26)
    center = net.nodes["n2_2"]
    clipped = clip_network(net, center[0], center[1], 0.35)
    for node, (lat, lon) in clipped.nodes.items():
        assert haversine_m(center[0], center[1], lat, lon) <= 350.0 + 1e-6
    kept = set(clipped.nodes)
    for edge in clipped.edges:
        assert edge.from_node in kept and edge.to_node in kept
    assert "n2_2" in kept and "n0_0" not in kept


def test_clip_empty_disc_raises():
    net = generate_grid(3, 3, 300.0, 10.0, 48.72, 21.26)
    with pytest.raises(EmptyNetworkError):
        clip_network(net, 10.0, 10.0, 0.5)


def test_generate_grid_rejects_degenerate_shapes():
    with pytest.raises(ValueError):
        generate_grid(1, 5, 300.0, 10.0, 48.72, 21.26)
    with pytest.raises(ValueError):
        generate_grid(3, 3, -5.0, 10.0, 48.72, 21.26)
