"""Route alternatives and their time-sampled trajectories.

Alternatives come from Yen's k-shortest loopless path search over edge
travel time. Ties are broken by the lexicographic order of the edge-id
sequence, so route sets are reproducible across runs and platforms. Each
alternative is then sampled at a fixed time step: the vehicle advances along
every edge at that edge's constant speed and the sample position is
interpolated on the edge geometry.
"""

import csv
import heapq
import logging
from dataclasses import dataclass
from pathlib import Path

from .geo import point_along_polyline, polyline_length_m, project_onto_polyline, haversine_m
from .network import Edge, RoadNetwork

logger = logging.getLogger(__name__)

_TIME_EPS = 1e-9


class NoPathError(ValueError):
    """Destination unreachable from origin in the directed network."""


@dataclass(frozen=True)
class RoutePoint:
    """One time sample of a vehicle moving along a route.

    ``offset_m`` is the arc length already covered on the current edge's
    geometry; it orders vehicles on the same edge into leaders and followers.
    """
    t: float
    lat: float
    lon: float
    edge_id: str
    speed_mps: float
    dir_from: str
    dir_to: str
    offset_m: float


@dataclass
class Route:
    vehicle_id: int
    alt: int
    edges: list[str]
    duration_s: float
    length_m: float
    points: list[RoutePoint]
    alpha_s: float


@dataclass
class RoutingConfig:
    k: int = 2
    alpha_s: float = 10.0
    window_s: float = 600.0

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha_s <= 0.0 or self.window_s <= 0.0:
            raise ValueError("alpha_s and window_s must be positive")


def _dijkstra(net: RoadNetwork, source: str, target: str,
              banned_edges: frozenset[str] = frozenset(),
              banned_nodes: frozenset[str] = frozenset()) -> tuple[float, tuple[str, ...]] | None:
    """Cheapest path by travel time; ties resolved toward the
    lexicographically smallest edge-id sequence.

    The heap key is (cost, edge-id tuple), and since every edge has strictly
    positive travel time the lexicographic product order satisfies the usual
    Dijkstra finalization argument.
    """
    if source == target:
        return 0.0, ()
    heap: list[tuple[float, tuple[str, ...], str]] = [(0.0, (), source)]
    done: set[str] = set()
    while heap:
        cost, seq, node = heapq.heappop(heap)
        if node in done:
            continue
        if node == target:
            return cost, seq
        done.add(node)
        for edge in net.out_edges.get(node, ()):
            if edge.edge_id in banned_edges or edge.to_node in banned_nodes:
                continue
            if edge.to_node in done:
                continue
            heapq.heappush(heap, (cost + edge.travel_time_s, seq + (edge.edge_id,),
                                  edge.to_node))
    return None


def k_shortest_routes(net: RoadNetwork, origin: str, dest: str, k: int) -> list[list[str]]:
    """Up to ``k`` loopless edge-id paths ordered by (travel time, edge ids).

    Returns fewer than ``k`` paths when the graph runs out of loopless
    alternatives. Raises NoPathError when the destination is unreachable.
    """
    if origin not in net.nodes or dest not in net.nodes:
        raise NoPathError(f"unknown endpoint {origin!r} or {dest!r}")
    if origin == dest:
        raise NoPathError("origin equals destination")
    first = _dijkstra(net, origin, dest)
    if first is None:
        raise NoPathError(f"no path from {origin!r} to {dest!r}")

    accepted: list[tuple[float, tuple[str, ...]]] = [first]
    seen: set[tuple[str, ...]] = {first[1]}
    candidates: list[tuple[float, tuple[str, ...]]] = []

    while len(accepted) < k:
        _, prev = accepted[-1]
        prefix_cost = 0.0
        for j in range(len(prev)):
            root = prev[:j]
            spur_node = origin if j == 0 else net.edge_by_id[prev[j - 1]].to_node
            banned_edges = {path[j] for _, path in accepted
                            if len(path) > j and path[:j] == root}
            banned_nodes = {origin}
            walk = origin
            for edge_id in root:
                banned_nodes.add(walk)
                walk = net.edge_by_id[edge_id].to_node
            banned_nodes.discard(spur_node)
            spur = _dijkstra(net, spur_node, dest,
                             frozenset(banned_edges), frozenset(banned_nodes))
            if spur is not None:
                total = prefix_cost + spur[0]
                path = root + spur[1]
                if path not in seen:
                    seen.add(path)
                    heapq.heappush(candidates, (total, path))
            prefix_cost += net.edge_by_id[prev[j]].travel_time_s
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))

    return [list(path) for _, path in accepted]


def _edge_chain_ok(net: RoadNetwork, edge_ids: list[str]) -> bool:
    for prev_id, next_id in zip(edge_ids, edge_ids[1:]):
        if net.edge_by_id[prev_id].to_node != net.edge_by_id[next_id].from_node:
            return False
    return True


def sample_route(net: RoadNetwork, vehicle_id: int, alt: int, edge_ids: list[str],
                 alpha_s: float, window_s: float) -> Route:
    """Trajectory samples at t = 0, alpha, 2*alpha, ... up to
    min(route duration, window).

    A sample that falls exactly on an edge boundary belongs to the edge being
    entered, except at the end of the route where it closes out the last
    edge.
    """
    if not edge_ids:
        raise ValueError("route needs at least one edge")
    if not _edge_chain_ok(net, edge_ids):
        raise ValueError(f"edge ids do not chain: {edge_ids}")

    edges: list[Edge] = [net.edge_by_id[eid] for eid in edge_ids]
    duration = sum(e.travel_time_s for e in edges)
    length = sum(e.length_m for e in edges)

    # per-edge geometry segment lengths, computed once
    seg_cache: dict[str, tuple[list[tuple[float, float]], list[float], float]] = {}
    for e in edges:
        if e.edge_id not in seg_cache:
            pts = list(e.geometry)
            segs = [haversine_m(a[0], a[1], b[0], b[1]) for a, b in zip(pts, pts[1:])]
            seg_cache[e.edge_id] = (pts, segs, sum(segs))

    t_max = min(duration, window_s)
    n_samples = int((t_max + _TIME_EPS) // alpha_s) + 1

    points: list[RoutePoint] = []
    idx = 0
    t_start = 0.0
    for step in range(n_samples):
        t = step * alpha_s
        while idx < len(edges) - 1 and t >= t_start + edges[idx].travel_time_s - _TIME_EPS:
            t_start += edges[idx].travel_time_s
            idx += 1
        e = edges[idx]
        frac = min(1.0, max(0.0, (t - t_start) / e.travel_time_s))
        pts, segs, geom_len = seg_cache[e.edge_id]
        offset = frac * geom_len
        lat, lon = point_along_polyline(pts, segs, offset)
        points.append(RoutePoint(t, lat, lon, e.edge_id, e.speed_mps,
                                 e.from_node, e.to_node, offset))

    return Route(vehicle_id, alt, list(edge_ids), duration, length, points, alpha_s)


def build_routes(net: RoadNetwork, vehicles, cfg: RoutingConfig) -> dict[int, list[Route]]:
    """k-shortest alternatives, sampled, for every vehicle."""
    cfg.validate()
    routes: dict[int, list[Route]] = {}
    for v in vehicles:
        paths = k_shortest_routes(net, v.origin, v.destination, cfg.k)
        routes[v.vehicle_id] = [
            sample_route(net, v.vehicle_id, alt, path, cfg.alpha_s, cfg.window_s)
            for alt, path in enumerate(paths)
        ]
    n_routes = sum(len(r) for r in routes.values())
    logger.info("routed %d vehicles into %d alternatives", len(routes), n_routes)
    return routes


def save_routes(routes: dict[int, list[Route]], summary_path: str | Path,
                points_path: str | Path) -> None:
    with open(summary_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "alt", "duration_s", "length_m"])
        for vid in sorted(routes):
            for r in routes[vid]:
                writer.writerow([vid, r.alt, repr(r.duration_s), repr(r.length_m)])
    with open(points_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "alt", "t", "lat", "lon", "edge_id",
                         "speed", "dir_from", "dir_to"])
        for vid in sorted(routes):
            for r in routes[vid]:
                for p in r.points:
                    writer.writerow([vid, r.alt, repr(p.t), repr(p.lat), repr(p.lon),
                                     p.edge_id, repr(p.speed_mps), p.dir_from, p.dir_to])


def load_routes(summary_path: str | Path, points_path: str | Path,
                net: RoadNetwork, alpha_s: float) -> dict[int, list[Route]]:
    """Rebuild routes from the two CSVs.

    Edge offsets are recovered by projecting each stored position back onto
    its edge geometry; the edge list is the consecutive deduplication of the
    sampled edge ids (the part of the route inside the window).
    """
    meta: dict[tuple[int, int], tuple[float, float]] = {}
    with open(summary_path, newline="") as fh:
        for row in csv.DictReader(fh):
            meta[(int(row["vehicle_id"]), int(row["alt"]))] = (
                float(row["duration_s"]), float(row["length_m"]))

    points: dict[tuple[int, int], list[RoutePoint]] = {key: [] for key in meta}
    geom_cache: dict[str, tuple[list[tuple[float, float]], list[float]]] = {}
    with open(points_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["vehicle_id"]), int(row["alt"]))
            if key not in points:
                raise ValueError(f"{points_path}: point for unknown route {key}")
            eid = row["edge_id"]
            if eid not in geom_cache:
                pts = list(net.edge_by_id[eid].geometry)
                segs = [haversine_m(a[0], a[1], b[0], b[1])
                        for a, b in zip(pts, pts[1:])]
                geom_cache[eid] = (pts, segs)
            pts, segs = geom_cache[eid]
            lat, lon = float(row["lat"]), float(row["lon"])
            offset = project_onto_polyline(pts, segs, lat, lon)
            points[key].append(RoutePoint(float(row["t"]), lat, lon, eid,
                                          float(row["speed"]), row["dir_from"],
                                          row["dir_to"], offset))

    routes: dict[int, list[Route]] = {}
    for (vid, alt) in sorted(meta):
        duration, length = meta[(vid, alt)]
        pts = sorted(points[(vid, alt)], key=lambda p: p.t)
        edge_ids = [p.edge_id for p in pts]
        edges = [eid for i, eid in enumerate(edge_ids) if i == 0 or eid != edge_ids[i - 1]]
        routes.setdefault(vid, []).append(
            Route(vid, alt, edges, duration, length, pts, alpha_s))
    for vid, lst in routes.items():
        if [r.alt for r in lst] != list(range(len(lst))):
            raise ValueError(f"vehicle {vid}: alternative indices must be dense 0..k-1")
    return routes
