"""Directed road networks: text-file IO, synthetic grids, radius clipping.

A network is a set of nodes with WGS84 coordinates plus directed edges, each
carrying a polyline geometry, a length in meters and a free-flow speed in
meters per second. Bidirectional roads are stored as two independent directed
edges with distinct ids.

File format (token-separated, ``#`` starts a comment line)::

    NODES <n>
    <node_id> <lat> <lon>            (n lines)
    EDGES <m>
    <edge_id> <from_id> <to_id> <length_m> <speed_mps> <oneway 0|1> \
        <n_pts> <lat_1> <lon_1> ... <lat_n> <lon_n>   (m lines)

A ``oneway 0`` line expands into two directed edges on load (the reverse one
gets the id suffix ``_r`` and reversed geometry); saved files are always in
canonical one-line-per-directed-edge form, so save -> load -> save is
byte-stable.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .geo import haversine_m, offset_latlon, polyline_length_m

logger = logging.getLogger(__name__)

GEOMETRY_LENGTH_RTOL = 0.005


class NetworkFormatError(ValueError):
    """Malformed network file; message carries the offending line number."""


class EmptyNetworkError(ValueError):
    """An operation produced a network with no nodes or no edges."""


@dataclass(frozen=True)
class Edge:
    edge_id: str
    from_node: str
    to_node: str
    length_m: float
    speed_mps: float
    oneway: bool
    geometry: tuple[tuple[float, float], ...]

    @property
    def travel_time_s(self) -> float:
        return self.length_m / self.speed_mps


@dataclass
class RoadNetwork:
    """Validated directed road graph with an adjacency index."""

    nodes: dict[str, tuple[float, float]]
    edges: list[Edge]
    edge_by_id: dict[str, Edge] = field(init=False, repr=False)
    out_edges: dict[str, list[Edge]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.edge_by_id = {}
        self.out_edges = {node: [] for node in self.nodes}
        for e in self.edges:
            _validate_edge(e, self.nodes)
            if e.edge_id in self.edge_by_id:
                raise NetworkFormatError(f"duplicate edge id {e.edge_id!r}")
            self.edge_by_id[e.edge_id] = e
            self.out_edges[e.from_node].append(e)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def _validate_edge(e: Edge, nodes: dict[str, tuple[float, float]]) -> None:
    if e.from_node not in nodes or e.to_node not in nodes:
        raise NetworkFormatError(
            f"edge {e.edge_id!r} references unknown node "
            f"{e.from_node if e.from_node not in nodes else e.to_node!r}")
    if e.length_m <= 0.0:
        raise NetworkFormatError(f"edge {e.edge_id!r} has non-positive length {e.length_m}")
    if e.speed_mps <= 0.0:
        raise NetworkFormatError(f"edge {e.edge_id!r} has non-positive speed {e.speed_mps}")
    if len(e.geometry) < 2:
        raise NetworkFormatError(f"edge {e.edge_id!r} geometry needs >= 2 points")
    for end, node in ((e.geometry[0], e.from_node), (e.geometry[-1], e.to_node)):
        ref = nodes[node]
        if abs(end[0] - ref[0]) > 1e-6 or abs(end[1] - ref[1]) > 1e-6:
            raise NetworkFormatError(
                f"edge {e.edge_id!r} geometry endpoint {end} does not sit on node {node!r}")
    geom_len = polyline_length_m(list(e.geometry))
    if abs(geom_len - e.length_m) > GEOMETRY_LENGTH_RTOL * e.length_m:
        raise NetworkFormatError(
            f"edge {e.edge_id!r} geometry length {geom_len:.3f} m deviates more than "
            f"{GEOMETRY_LENGTH_RTOL:.1%} from declared {e.length_m:.3f} m")


def _f(x: float) -> str:
    # repr of a float is the shortest decimal string that parses back to the
    # exact same double, which keeps round trips byte-stable
    return repr(float(x))


def load_network(path: str | Path) -> RoadNetwork:
    """Parse a network file. Raises NetworkFormatError with a line number."""
    lines = Path(path).read_text().splitlines()
    rows: list[tuple[int, list[str]]] = []
    for lineno, raw in enumerate(lines, start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        rows.append((lineno, stripped.split()))

    cursor = 0

    def take(section: str) -> tuple[int, list[str]]:
        nonlocal cursor
        if cursor >= len(rows):
            raise NetworkFormatError(f"unexpected end of file while reading {section}")
        row = rows[cursor]
        cursor += 1
        return row

    lineno, head = take("header")
    if len(head) != 2 or head[0] != "NODES":
        raise NetworkFormatError(f"line {lineno}: expected 'NODES <count>'")
    n_nodes = _parse_count(head[1], lineno)

    nodes: dict[str, tuple[float, float]] = {}
    for _ in range(n_nodes):
        lineno, tok = take("node list")
        if len(tok) != 3:
            raise NetworkFormatError(f"line {lineno}: node line needs 'id lat lon'")
        node_id = tok[0]
        if node_id in nodes:
            raise NetworkFormatError(f"line {lineno}: duplicate node id {node_id!r}")
        nodes[node_id] = (_parse_float(tok[1], lineno), _parse_float(tok[2], lineno))

    lineno, head = take("edge header")
    if len(head) != 2 or head[0] != "EDGES":
        raise NetworkFormatError(f"line {lineno}: expected 'EDGES <count>'")
    n_edges = _parse_count(head[1], lineno)

    edges: list[Edge] = []
    for _ in range(n_edges):
        lineno, tok = take("edge list")
        if len(tok) < 7:
            raise NetworkFormatError(f"line {lineno}: truncated edge line")
        edge_id, from_id, to_id = tok[0], tok[1], tok[2]
        length = _parse_float(tok[3], lineno)
        speed = _parse_float(tok[4], lineno)
        if tok[5] not in ("0", "1"):
            raise NetworkFormatError(f"line {lineno}: oneway flag must be 0 or 1")
        oneway = tok[5] == "1"
        n_pts = _parse_count(tok[6], lineno)
        if len(tok) != 7 + 2 * n_pts:
            raise NetworkFormatError(
                f"line {lineno}: expected {2 * n_pts} coordinate tokens, got {len(tok) - 7}")
        coords = [_parse_float(v, lineno) for v in tok[7:]]
        geometry = tuple(zip(coords[0::2], coords[1::2]))
        edges.append(Edge(edge_id, from_id, to_id, length, speed, True, geometry))
        if not oneway:
            edges.append(Edge(edge_id + "_r", to_id, from_id, length, speed, True,
                              tuple(reversed(geometry))))

    if cursor != len(rows):
        lineno = rows[cursor][0]
        raise NetworkFormatError(f"line {lineno}: trailing content after edge list")
    try:
        return RoadNetwork(nodes, edges)
    except NetworkFormatError as exc:
        raise NetworkFormatError(f"{path}: {exc}") from exc


def _parse_count(tok: str, lineno: int) -> int:
    try:
        value = int(tok)
    except ValueError:
        raise NetworkFormatError(f"line {lineno}: expected an integer, got {tok!r}") from None
    if value < 0:
        raise NetworkFormatError(f"line {lineno}: negative count {value}")
    return value


def _parse_float(tok: str, lineno: int) -> float:
    try:
        return float(tok)
    except ValueError:
        raise NetworkFormatError(f"line {lineno}: expected a number, got {tok!r}") from None


def save_network(net: RoadNetwork, path: str | Path) -> None:
    """Write the canonical text form (every directed edge on its own line)."""
    out: list[str] = [f"NODES {net.n_nodes}"]
    for node_id, (lat, lon) in net.nodes.items():
        out.append(f"{node_id} {_f(lat)} {_f(lon)}")
    out.append(f"EDGES {net.n_edges}")
    for e in net.edges:
        coords = " ".join(f"{_f(lat)} {_f(lon)}" for lat, lon in e.geometry)
        out.append(f"{e.edge_id} {e.from_node} {e.to_node} {_f(e.length_m)} "
                   f"{_f(e.speed_mps)} 1 {len(e.geometry)} {coords}")
    Path(path).write_text("\n".join(out) + "\n")


def generate_grid(rows: int, cols: int, spacing_m: float, speed_mps: float,
                  origin_lat: float, origin_lon: float, seed: int = 0) -> RoadNetwork:
    """Rectangular grid network with bidirectional streets.

    Node ``n<r>_<c>`` sits ``r * spacing_m`` north and ``c * spacing_m`` east
    of the origin under an equirectangular approximation anchored at the
    origin latitude. Every neighboring node pair is joined by two directed
    edges with straight-line geometry and a uniform speed. The result is a
    pure function of the arguments; ``seed`` is accepted for signature
    stability with randomized generators but the grid itself is never
    randomized (equal-cost alternatives rely on exact symmetry).
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid needs rows >= 2 and cols >= 2")
    if spacing_m <= 0 or speed_mps <= 0:
        raise ValueError("spacing and speed must be positive")

    nodes: dict[str, tuple[float, float]] = {}
    for r in range(rows):
        for c in range(cols):
            nodes[f"n{r}_{c}"] = offset_latlon(
                origin_lat, origin_lon, r * spacing_m, c * spacing_m,
                anchor_lat=origin_lat)

    edges: list[Edge] = []
    counter = 0

    def link(a: str, b: str) -> None:
        nonlocal counter
        pa, pb = nodes[a], nodes[b]
        length = haversine_m(pa[0], pa[1], pb[0], pb[1])
        edges.append(Edge(f"e{counter:05d}", a, b, length, speed_mps, True, (pa, pb)))
        edges.append(Edge(f"e{counter + 1:05d}", b, a, length, speed_mps, True, (pb, pa)))
        counter += 2

    for r in range(rows):
        for c in range(cols):
            if c + 1 < cols:
                link(f"n{r}_{c}", f"n{r}_{c + 1}")
            if r + 1 < rows:
                link(f"n{r}_{c}", f"n{r + 1}_{c}")

    logger.debug("generated %dx%d grid: %d nodes, %d directed edges",
                 rows, cols, len(nodes), len(edges))
    return RoadNetwork(nodes, edges)


def clip_network(net: RoadNetwork, center_lat: float, center_lon: float,
                 radius_km: float) -> RoadNetwork:
    """Subnetwork of nodes within ``radius_km`` of the center.

    Edges survive only when both endpoints survive. Raises EmptyNetworkError
    when nothing is left.
    """
    radius_m = radius_km * 1000.0
    kept_nodes = {
        node_id: pos for node_id, pos in net.nodes.items()
        if haversine_m(pos[0], pos[1], center_lat, center_lon) <= radius_m
    }
    kept_edges = [e for e in net.edges
                  if e.from_node in kept_nodes and e.to_node in kept_nodes]
    if not kept_nodes or not kept_edges:
        raise EmptyNetworkError(
            f"clip at ({center_lat}, {center_lon}) r={radius_km} km leaves an empty network")
    return RoadNetwork(kept_nodes, kept_edges)
