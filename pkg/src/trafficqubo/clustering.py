"""Decomposition of the vehicle interaction graph into solver-sized clusters.

Vehicles that can never meet do not need to be optimized jointly. The pair
weights collapse into an undirected conflict graph, a community detection
pass (local moving, refinement, aggregation, iterated until stable) cuts it
along weak seams, and a post pass merges undersized communities and caps the
cluster count. Vehicles left outside every kept cluster fall back to their
fastest route downstream.

The community quality function is modularity with a resolution knob: higher
resolution favors more, smaller communities. The refinement phase only ever
merges nodes that share an edge, and a final safety pass splits any
disconnected community into its components (which can only raise quality),
so emitted communities are always connected in the conflict graph.
"""

import csv
import logging
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .congestion import CongestionWeights

logger = logging.getLogger(__name__)

_GAIN_EPS = 1e-12


@dataclass
class ConflictGraph:
    """Undirected weighted graph over vehicles with positive interaction."""
    nodes: list[int]
    adj: dict[int, dict[int, float]]

    @property
    def total_weight(self) -> float:
        return 0.5 * sum(w for nbrs in self.adj.values() for w in nbrs.values())

    def weight(self, i: int, j: int) -> float:
        return self.adj.get(i, {}).get(j, 0.0)


@dataclass
class ClusterSet:
    clusters: list[list[int]]
    residual: list[int]
    rho: float
    m_min: int
    max_clusters: int


def build_conflict_graph(cw: CongestionWeights) -> ConflictGraph:
    """Sum pair weights over alternative combinations; keep positive pairs."""
    pair_totals: dict[tuple[int, int], float] = {}
    for key in sorted(cw.weights):
        i, j, _a, _b = key
        w = cw.weights[key]
        if w < 0.0:
            raise ValueError(f"negative weight at {key}")
        pair_totals[(i, j)] = pair_totals.get((i, j), 0.0) + w

    adj: dict[int, dict[int, float]] = {}
    for (i, j), w in pair_totals.items():
        if w <= 0.0:
            continue
        adj.setdefault(i, {})[j] = w
        adj.setdefault(j, {})[i] = w
    nodes = sorted(adj)
    return ConflictGraph(nodes, {i: adj[i] for i in nodes})


def modularity(g: ConflictGraph, partition: list[set[int]], rho: float) -> float:
    """Resolution-scaled modularity of a partition of the graph's nodes."""
    m2 = 2.0 * g.total_weight
    if m2 == 0.0:
        return 0.0
    label: dict[int, int] = {}
    for idx, comm in enumerate(partition):
        for v in comm:
            label[v] = idx
    intra = [0.0] * len(partition)
    deg = [0.0] * len(partition)
    for v in g.nodes:
        deg[label[v]] += sum(g.adj[v].values())
        for u, w in g.adj[v].items():
            if label[u] == label[v]:
                intra[label[v]] += w
    return sum(intra[c] / m2 - rho * (deg[c] / m2) ** 2
               for c in range(len(partition)))


class _AggGraph:
    """Index-based graph used internally by the community loop."""

    def __init__(self, n: int, adj: list[dict[int, float]], self_w: list[float]):
        self.n = n
        self.adj = adj
        self.self_w = self_w
        self.deg = [sum(nbrs.values()) + 2.0 * s for nbrs, s in zip(adj, self_w)]
        self.m2 = sum(self.deg)


def _local_move(g: _AggGraph, comm: np.ndarray, rho: float,
                rng: np.random.Generator) -> None:
    """Queue-driven single-node moves until no move improves quality."""
    tot = {}
    for v in range(g.n):
        tot[comm[v]] = tot.get(comm[v], 0.0) + g.deg[v]
    next_label = (max(comm) + 1) if g.n else 0

    order = rng.permutation(g.n)
    queue = deque(int(v) for v in order)
    in_queue = [True] * g.n
    while queue:
        v = queue.popleft()
        in_queue[v] = False
        k_v = g.deg[v]
        current = int(comm[v])
        k_vc: dict[int, float] = {}
        for u, w in g.adj[v].items():
            c = int(comm[u])
            k_vc[c] = k_vc.get(c, 0.0) + w

        tot[current] -= k_v

        def score(c: int) -> float:
            return k_vc.get(c, 0.0) - rho * tot.get(c, 0.0) * k_v / g.m2

        best_c, best_s = current, score(current)
        for c in sorted(k_vc):
            if c == current:
                continue
            s = score(c)
            if s > best_s + _GAIN_EPS:
                best_c, best_s = c, s
        if 0.0 > best_s + _GAIN_EPS:
            best_c, best_s = next_label, 0.0
            next_label += 1

        comm[v] = best_c
        tot[best_c] = tot.get(best_c, 0.0) + k_v
        if best_c != current:
            for u in g.adj[v]:
                if comm[u] != best_c and not in_queue[u]:
                    queue.append(u)
                    in_queue[u] = True


def _refine(g: _AggGraph, comm: np.ndarray, rho: float,
            rng: np.random.Generator) -> np.ndarray:
    """Split every community into connected subcommunities.

    Starts from singletons and only merges a still-singleton node into a
    subcommunity of its own community that it shares an edge with, so each
    resulting subcommunity is connected by construction.
    """
    ref = np.arange(g.n)
    sub_tot = list(g.deg)
    sub_size = [1] * g.n
    for v in (int(x) for x in rng.permutation(g.n)):
        if sub_size[ref[v]] != 1:
            continue
        k_v = g.deg[v]
        k_vs: dict[int, float] = {}
        for u, w in g.adj[v].items():
            if comm[u] == comm[v]:
                s = int(ref[u])
                if s != ref[v]:
                    k_vs[s] = k_vs.get(s, 0.0) + w
        best_s, best_gain = -1, _GAIN_EPS
        for s in sorted(k_vs):
            gain = k_vs[s] - rho * sub_tot[s] * k_v / g.m2
            if gain > best_gain:
                best_s, best_gain = s, gain
        if best_s >= 0:
            sub_size[best_s] += sub_size[ref[v]]
            sub_tot[best_s] += sub_tot[ref[v]]
            ref[v] = best_s
    return ref


def _aggregate(g: _AggGraph, ref: np.ndarray,
               comm: np.ndarray) -> tuple[_AggGraph, np.ndarray, np.ndarray]:
    """Collapse refined subcommunities into single nodes.

    Returns the new graph, the old-node -> new-node map, and the carried
    community membership for the new nodes.
    """
    labels = sorted(set(int(r) for r in ref))
    compact = {label: idx for idx, label in enumerate(labels)}
    node_of = np.array([compact[int(r)] for r in ref])
    n_new = len(labels)

    adj: list[dict[int, float]] = [dict() for _ in range(n_new)]
    self_w = [0.0] * n_new
    for v in range(g.n):
        cv = int(node_of[v])
        self_w[cv] += g.self_w[v]
        for u, w in g.adj[v].items():
            cu = int(node_of[u])
            if cu == cv:
                self_w[cv] += 0.5 * w
            else:
                adj[cv][cu] = adj[cv].get(cu, 0.0) + w

    new_comm = np.zeros(n_new, dtype=np.int64)
    for v in range(g.n):
        new_comm[int(node_of[v])] = comm[v]
    return _AggGraph(n_new, adj, self_w), node_of, new_comm


def _split_disconnected(g: ConflictGraph, communities: list[list[int]]) -> list[list[int]]:
    out: list[list[int]] = []
    for members in communities:
        member_set = set(members)
        remaining = set(members)
        while remaining:
            start = min(remaining)
            seen = {start}
            frontier = deque([start])
            while frontier:
                v = frontier.popleft()
                for u in g.adj[v]:
                    if u in member_set and u not in seen:
                        seen.add(u)
                        frontier.append(u)
            out.append(sorted(seen))
            remaining -= seen
    return out


def leiden(g: ConflictGraph, rho: float, seed: int) -> list[set[int]]:
    """Community detection on the conflict graph; deterministic per seed."""
    if rho <= 0.0:
        raise ValueError("resolution rho must be positive")
    if not g.nodes:
        return []
    index_of = {v: i for i, v in enumerate(g.nodes)}
    base_adj: list[dict[int, float]] = [
        {index_of[u]: w for u, w in g.adj[v].items()} for v in g.nodes
    ]
    graph = _AggGraph(len(g.nodes), base_adj, [0.0] * len(g.nodes))
    rng = np.random.default_rng(seed)

    node_map = np.arange(graph.n)
    comm = np.arange(graph.n)
    while True:
        _local_move(graph, comm, rho, rng)
        if len(set(int(c) for c in comm)) == graph.n:
            break
        ref = _refine(graph, comm, rho, rng)
        if len(set(int(r) for r in ref)) == graph.n:
            break
        graph, node_of, comm = _aggregate(graph, ref, comm)
        node_map = node_of[node_map]

    membership = comm[node_map]
    groups: dict[int, list[int]] = {}
    for base_idx, label in enumerate(membership):
        groups.setdefault(int(label), []).append(g.nodes[base_idx])
    communities = [sorted(members) for _, members in sorted(groups.items())]
    communities = _split_disconnected(g, communities)
    communities.sort(key=lambda c: c[0])
    logger.info("community detection: %d nodes -> %d communities (rho=%g)",
                len(g.nodes), len(communities), rho)
    return [set(c) for c in communities]


def merge_and_filter(partition: list[set[int]], g: ConflictGraph, m_min: int,
                     max_clusters: int, all_vehicles: list[int] | None = None,
                     rho: float = 0.0) -> ClusterSet:
    """Enforce a minimum cluster size and a cluster-count cap.

    Undersized clusters merge into the neighbor they share the most weight
    with; undersized clusters with no weighted neighbor are batched together
    in id order until each batch reaches the minimum (a final short batch
    joins the previous one, or the residual when none exists). If the whole
    graph holds fewer than ``m_min`` vehicles they stay as one cluster. When
    more than ``max_clusters`` clusters remain, the ones with the largest
    internal weight are kept and the rest are demoted to the residual.
    """
    if m_min < 1 or max_clusters < 1:
        raise ValueError("m_min and max_clusters must be >= 1")
    clusters: list[set[int]] = [set(c) for c in partition]
    demoted: list[int] = []

    def inter_weight(a: set[int], b: set[int]) -> float:
        small, large = (a, b) if len(a) <= len(b) else (b, a)
        return sum(w for v in sorted(small) for u, w in sorted(g.adj.get(v, {}).items())
                   if u in large)

    total_in_graph = sum(len(c) for c in clusters)
    if clusters and total_in_graph < m_min:
        merged = sorted(v for c in clusters for v in c)
        clusters = [set(merged)]
    else:
        isolated: list[set[int]] = []
        while True:
            small = sorted((c for c in clusters if len(c) < m_min),
                           key=lambda c: (len(c), min(c)))
            if not small:
                break
            victim = small[0]
            clusters.remove(victim)
            best = None
            best_key = None
            for other in clusters:
                w = inter_weight(victim, other)
                if w <= 0.0:
                    continue
                key = (-w, min(other))
                if best_key is None or key < best_key:
                    best, best_key = other, key
            if best is None:
                isolated.append(victim)
            else:
                best |= victim

        if isolated:
            isolated.sort(key=lambda c: min(c))
            batches: list[set[int]] = []
            batch: set[int] = set()
            for chunk in isolated:
                batch |= chunk
                if len(batch) >= m_min:
                    batches.append(batch)
                    batch = set()
            if batch:
                if batches:
                    batches[-1] |= batch
                else:
                    demoted.extend(sorted(batch))
            clusters.extend(batches)

    if len(clusters) > max_clusters:
        def intra_weight(c: set[int]) -> float:
            return sum(w for v in sorted(c) for u, w in sorted(g.adj.get(v, {}).items())
                       if u in c and u > v)
        ranked = sorted(clusters, key=lambda c: (-intra_weight(c), -len(c), min(c)))
        for dropped in ranked[max_clusters:]:
            demoted.extend(sorted(dropped))
        clusters = ranked[:max_clusters]

    clustered = set(v for c in clusters for v in c)
    pool = set(all_vehicles) if all_vehicles is not None else set(g.nodes)
    residual = sorted((pool - clustered) | set(demoted))
    out = ClusterSet([sorted(c) for c in sorted(clusters, key=lambda c: min(c))],
                     residual, rho, m_min, max_clusters)
    logger.info("clusters: %d kept (sizes %s), %d residual vehicles",
                len(out.clusters), [len(c) for c in out.clusters], len(out.residual))
    return out


def save_clusters(cs: ClusterSet, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "cluster_id"])
        rows = [(v, idx) for idx, members in enumerate(cs.clusters) for v in members]
        rows += [(v, -1) for v in cs.residual]
        for v, idx in sorted(rows):
            writer.writerow([v, idx])


def load_clusters(path: str | Path, rho: float, m_min: int,
                  max_clusters: int) -> ClusterSet:
    groups: dict[int, list[int]] = {}
    residual: list[int] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            cid = int(row["cluster_id"])
            vid = int(row["vehicle_id"])
            if cid < 0:
                residual.append(vid)
            else:
                groups.setdefault(cid, []).append(vid)
    clusters = [sorted(groups[cid]) for cid in sorted(groups)]
    return ClusterSet(clusters, sorted(residual), rho, m_min, max_clusters)
