import math

import numpy as np
import pytest

from trafficqubo.geo import (haversine_m, haversine_rad_m, offset_latlon,
                             point_along_polyline, polyline_length_m,
                             project_onto_polyline)

from oracles import EARTH_RADIUS_M, law_of_cosines_m


def test_haversine_matches_law_of_cosines_under_50km():
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(1000):
        lat = float(rng.uniform(-70.0, 70.0))
        lon = float(rng.uniform(-180.0, 180.0))
        bearing = float(rng.uniform(0.0, 2.0 * math.pi))
        dist = float(rng.uniform(1.0, 49_000.0))
        lat2, lon2 = offset_latlon(lat, lon, dist * math.cos(bearing),
                                   dist * math.sin(bearing))
        d_hav = haversine_m(lat, lon, lat2, lon2)
        d_loc = law_of_cosines_m(lat, lon, lat2, lon2)
        worst = max(worst, abs(d_hav - d_loc))
    assert worst <= 5.0


def test_haversine_known_values():
    assert haversine_m(0.0, 0.0, 0.0, 0.0) == 0.0
    quarter = math.pi / 2.0 * EARTH_RADIUS_M
    assert haversine_m(0.0, 0.0, 0.0, 90.0) == pytest.approx(quarter, rel=1e-12)
    assert haversine_m(0.0, 0.0, 90.0, 0.0) == pytest.approx(quarter, rel=1e-12)
    one_deg = math.radians(1.0) * EARTH_RADIUS_M
    assert haversine_m(10.0, 20.0, 11.0, 20.0) == pytest.approx(one_deg, rel=1e-12)


def test_haversine_rad_variant_agrees():
    rng = np.random.default_rng(7)
    for _ in range(50):
        lat1, lat2 = rng.uniform(-80, 80, 2)
        lon1, lon2 = rng.uniform(-180, 180, 2)
        a = haversine_m(lat1, lon1, lat2, lon2)
        b = haversine_rad_m(math.radians(lat1), math.radians(lon1),
                            math.radians(lat2), math.radians(lon2))
        assert a == pytest.approx(b, rel=1e-12)


def test_offset_latlon_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(200):
        lat = float(rng.uniform(-60, 60))
        lon = float(rng.uniform(-180, 180))
        north = float(rng.uniform(-2000, 2000))
        east = float(rng.uniform(-2000, 2000))
        lat2, lon2 = offset_latlon(lat, lon, north, east, anchor_lat=lat)
        want = math.hypot(north, east)
        got = haversine_m(lat, lon, lat2, lon2)
        assert got == pytest.approx(want, rel=2e-3, abs=0.05)


def test_polyline_length_and_interpolation():
    p0 = (48.0, 21.0)
    p1 = offset_latlon(*p0, 100.0, 0.0)
    p2 = offset_latlon(*p1, 0.0, 50.0, anchor_lat=p1[0])
    pts = [p0, p1, p2]
    segs = [haversine_m(*pts[0], *pts[1]), haversine_m(*pts[1], *pts[2])]
    total = polyline_length_m(pts)
    assert total == pytest.approx(sum(segs), rel=1e-12)

    start = point_along_polyline(pts, segs, 0.0)
    assert start == pytest.approx(p0, abs=1e-12)
    end = point_along_polyline(pts, segs, total)
    assert end == pytest.approx(p2, abs=1e-12)
    mid = point_along_polyline(pts, segs, segs[0])
    assert mid == pytest.approx(p1, abs=1e-9)
    past = point_along_polyline(pts, segs, total + 10.0)
    assert past == pytest.approx(p2, abs=1e-12)


def test_point_along_polyline_skips_zero_segments():
    p0 = (48.0, 21.0)
    p1 = offset_latlon(*p0, 80.0, 0.0)
    pts = [p0, p0, p1]
    segs = [0.0, haversine_m(*p0, *p1)]
    got = point_along_polyline(pts, segs, segs[1] / 2.0)
    direct = point_along_polyline([p0, p1], [segs[1]], segs[1] / 2.0)
    assert got == pytest.approx(direct, abs=1e-12)


def test_project_onto_polyline_recovers_arc():
    p0 = (48.0, 21.0)
    p1 = offset_latlon(*p0, 200.0, 0.0)
    p2 = offset_latlon(*p1, 0.0, 150.0, anchor_lat=p1[0])
    pts = [p0, p1, p2]
    segs = [haversine_m(*pts[0], *pts[1]), haversine_m(*pts[1], *pts[2])]
    rng = np.random.default_rng(11)
    for _ in range(50):
        arc = float(rng.uniform(0.0, sum(segs)))
        lat, lon = point_along_polyline(pts, segs, arc)
        back = project_onto_polyline(pts, segs, lat, lon)
        assert back == pytest.approx(arc, abs=0.01)


def test_project_onto_polyline_clamps_outside_points():
    p0 = (48.0, 21.0)
    p1 = offset_latlon(*p0, 100.0, 0.0)
    pts = [p0, p1]
    segs = [haversine_m(*p0, *p1)]
    before = offset_latlon(*p0, -50.0, 0.0)
    after = offset_latlon(*p1, 50.0, 0.0)
    assert project_onto_polyline(pts, segs, *before) == pytest.approx(0.0, abs=1e-9)
    assert project_onto_polyline(pts, segs, *after) == pytest.approx(segs[0], abs=1e-9)
