"""Geodesic helpers shared by the network, routing and congestion stages.

All distances are meters on a sphere of mean Earth radius. Coordinates are
WGS84-style (lat, lon) degree pairs; no projection library is involved
because every computation here stays within a few kilometers of its anchor.
"""

from math import asin, cos, degrees, radians, sin, sqrt

EARTH_RADIUS_M = 6_371_008.8


def haversine_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters between two (lat, lon) degree pairs."""
    phi1 = radians(lat1)
    phi2 = radians(lat2)
    dphi = phi2 - phi1
    dlam = radians(lon2 - lon1)
    a = sin(dphi / 2.0) ** 2 + cos(phi1) * cos(phi2) * sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * asin(min(1.0, sqrt(a)))


def haversine_rad_m(phi1: float, lam1: float, phi2: float, lam2: float) -> float:
    """Same as haversine_m but on pre-converted radian inputs (hot loops)."""
    a = sin((phi2 - phi1) / 2.0) ** 2 + cos(phi1) * cos(phi2) * sin((lam2 - lam1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * asin(min(1.0, sqrt(a)))


def offset_latlon(lat: float, lon: float, north_m: float, east_m: float,
                  anchor_lat: float | None = None) -> tuple[float, float]:
    """Shift a coordinate by meters using an equirectangular approximation.

    The east-west scale uses the cosine of the anchor latitude (defaults to
    the point's own latitude), which keeps rectangular grids rectangular.
    """
    if anchor_lat is None:
        anchor_lat = lat
    dlat = degrees(north_m / EARTH_RADIUS_M)
    dlon = degrees(east_m / (EARTH_RADIUS_M * cos(radians(anchor_lat))))
    return lat + dlat, lon + dlon


def polyline_length_m(points: list[tuple[float, float]]) -> float:
    """Cumulative haversine length of a (lat, lon) polyline."""
    total = 0.0
    for (a_lat, a_lon), (b_lat, b_lon) in zip(points, points[1:]):
        total += haversine_m(a_lat, a_lon, b_lat, b_lon)
    return total


def point_along_polyline(points: list[tuple[float, float]],
                         seg_lengths: list[float],
                         arc_m: float) -> tuple[float, float]:
    """Point at arc length ``arc_m`` along a polyline, clamped to its ends.

    ``seg_lengths`` are the per-segment haversine lengths (precomputed once
    per edge). Interpolation inside a segment is linear in lat/lon, which is
    accurate well below a meter at road-segment scale.
    """
    if arc_m <= 0.0:
        return points[0]
    for (a, b), seg in zip(zip(points, points[1:]), seg_lengths):
        if seg == 0.0:
            continue
        if arc_m <= seg:
            f = arc_m / seg
            return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))
        arc_m -= seg
    return points[-1]


def project_onto_polyline(points: list[tuple[float, float]],
                          seg_lengths: list[float],
                          lat: float, lon: float) -> float:
    """Arc length along the polyline of the point nearest to (lat, lon).

    Used to recover a vehicle's offset along an edge from a stored sample
    position. Works in a local planar frame anchored at each segment start;
    fine for points that lie on (or within a meter of) the line.
    """
    best_d2 = float("inf")
    best_arc = 0.0
    walked = 0.0
    coslat = cos(radians(lat))
    for (a, b), seg in zip(zip(points, points[1:]), seg_lengths):
        if seg == 0.0:
            continue
        ax = (a[1] - lon) * coslat
        ay = a[0] - lat
        bx = (b[1] - lon) * coslat
        by = b[0] - lat
        dx, dy = bx - ax, by - ay
        denom = dx * dx + dy * dy
        f = 0.0 if denom == 0.0 else min(1.0, max(0.0, -(ax * dx + ay * dy) / denom))
        px, py = ax + f * dx, ay + f * dy
        d2 = px * px + py * py
        if d2 < best_d2:
            best_d2 = d2
            best_arc = walked + f * seg
        walked += seg
    return best_arc
