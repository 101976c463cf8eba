import math

import pytest

from trafficqubo import Route, RoutePoint, generate_grid

EARTH_RADIUS_M = 6_371_008.8


def meridian_point(t, edge_id, offset_m, speed=15.0, dirs=("a", "b"),
                   base_lat=48.0, lon=21.0):
    """Point offset_m metres due north of base_lat; meridional arcs make the
    spherical distance between two such points exactly their offset gap."""
    lat = base_lat + math.degrees(offset_m / EARTH_RADIUS_M)
    return RoutePoint(t, lat, lon, edge_id, speed, dirs[0], dirs[1], offset_m)


@pytest.fixture
def grid3():
    return generate_grid(3, 3, 250.0, 10.0, 48.72, 21.26)


@pytest.fixture
def worked_pair():
    """Two single-alternative vehicles sharing edge E in the same direction.

    At step 1 they are 30 m apart at 15 m/s, so with alpha=10 and gamma=4 the
    score is 10 * (1 - 30 / 60) = 5.0; the step-2 gap of 120 m is outside the
    4 * 15 = 60 m interaction range and scores zero.
    """
    r0 = Route(0, 0, ["E"], 20.0, 300.0, [
        meridian_point(0.0, "E", 0.0),
        meridian_point(10.0, "E", 150.0),
        meridian_point(20.0, "E", 300.0),
    ], 10.0)
    r1 = Route(1, 0, ["F", "E"], 20.0, 300.0, [
        meridian_point(0.0, "F", 0.0, dirs=("c", "a")),
        meridian_point(10.0, "E", 120.0),
        meridian_point(20.0, "E", 180.0),
    ], 10.0)
    return {0: [r0], 1: [r1]}
