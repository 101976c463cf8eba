"""Assignment quality metrics, baselines and exports.

The headline metric is the global congestion cost of a full assignment: the
sum of pair weights realized by the chosen alternatives over all vehicle
pairs (not just pairs inside one cluster) plus the chosen duration
penalties. For a valid assignment this equals the QUBO energy of the
corresponding bit vector on the unclustered instance, which pins the two
code paths to each other.
"""

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .congestion import CongestionWeights, detect_conflicts
from .network import RoadNetwork
from .routing import Route

logger = logging.getLogger(__name__)


@dataclass
class GlobalAssignment:
    """One chosen alternative per vehicle, with a provenance label each
    ("solver:sa", "shortest", "random", "repair", ...)."""
    choice: dict[int, int]
    provenance: dict[int, str] = field(default_factory=dict)

    def label_all(self, label: str) -> "GlobalAssignment":
        self.provenance = {v: label for v in self.choice}
        return self


def congestion_cost(cw: CongestionWeights, ga: GlobalAssignment) -> float:
    """Realized pair congestion plus duration penalties, over all pairs."""
    for vid in cw.pi:
        if vid not in ga.choice:
            raise ValueError(f"assignment misses vehicle {vid}")
        if not 0 <= ga.choice[vid] < len(cw.pi[vid]):
            raise ValueError(f"vehicle {vid} chose alternative {ga.choice[vid]} "
                             f"of {len(cw.pi[vid])}")
    total = 0.0
    for key in sorted(cw.weights):
        i, j, a_i, a_j = key
        if ga.choice[i] == a_i and ga.choice[j] == a_j:
            total += cw.weights[key]
    for vid in sorted(cw.pi):
        total += cw.pi[vid][ga.choice[vid]]
    return total


def delta_energy(e_a: float, e_b: float) -> float:
    """Relative energy gap (e_a - e_b) / e_b."""
    if e_b == 0.0:
        raise ValueError("reference energy is zero; the relative gap is undefined")
    return (e_a - e_b) / e_b


def improvement_pct(baseline: float, optimized: float) -> float:
    """Percentage cost reduction against a baseline."""
    if baseline == 0.0:
        if optimized == 0.0:
            return 0.0
        raise ValueError("baseline cost is zero but optimized cost is not")
    return 100.0 * (baseline - optimized) / baseline


def baseline_shortest(routes: dict[int, list[Route]]) -> GlobalAssignment:
    """Every vehicle takes its fastest alternative (lowest index on ties)."""
    choice: dict[int, int] = {}
    for vid in sorted(routes):
        durations = [r.duration_s for r in routes[vid]]
        choice[vid] = int(np.argmin(durations))
    return GlobalAssignment(choice).label_all("shortest")


def baseline_random(routes: dict[int, list[Route]], seed: int) -> GlobalAssignment:
    """Every vehicle picks uniformly among its alternatives."""
    rng = np.random.default_rng(seed)
    choice: dict[int, int] = {}
    for vid in sorted(routes):
        choice[vid] = int(rng.integers(len(routes[vid])))
    return GlobalAssignment(choice).label_all("random")


def qubo_density(n_var: int, coeffs: dict[tuple[int, int], float]) -> float:
    """Share of possible strictly-upper-triangular entries that are nonzero."""
    if n_var < 1:
        raise ValueError("density needs n_var >= 1")
    if n_var == 1:
        return 0.0
    nnz = sum(1 for (u, v), c in coeffs.items() if u < v and c != 0.0)
    return nnz / (n_var * (n_var - 1) / 2)


def overlap_degrees(cw: CongestionWeights) -> dict[int, int]:
    """Histogram of conflict degrees: how many other vehicles each vehicle
    shares at least one positive pair weight with."""
    partners: dict[int, set[int]] = {vid: set() for vid in cw.pi}
    for (i, j, _a, _b), w in cw.weights.items():
        if w > 0.0:
            partners[i].add(j)
            partners[j].add(i)
    hist: dict[int, int] = {}
    for vid in sorted(partners):
        degree = len(partners[vid])
        hist[degree] = hist.get(degree, 0) + 1
    return hist


def export_heatmap(net: RoadNetwork, routes: dict[int, list[Route]],
                   ga: GlobalAssignment, *, alpha_s: float, window_s: float,
                   gamma_s: float, csv_path: str | Path,
                   geojson_path: str | Path) -> dict[str, float]:
    """Per-edge congestion of the chosen routes, as CSV and GeoJSON.

    Conflict detection is rerun restricted to the one chosen route per
    vehicle, so the per-edge scores sum exactly to the pair-weight part of
    the global congestion cost (the duration penalties are route-level and
    have no edge to sit on).
    """
    chosen: dict[int, list[Route]] = {}
    for vid, alt in ga.choice.items():
        chosen[vid] = [routes[vid][alt]]
    entries = detect_conflicts(chosen, alpha_s, window_s, gamma_s)

    totals = {e.edge_id: 0.0 for e in net.edges}
    for entry in entries:
        totals[entry.edge_id] = totals.get(entry.edge_id, 0.0) + entry.score

    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["edge_id", "score"])
        for edge_id in sorted(totals):
            writer.writerow([edge_id, repr(totals[edge_id])])

    features = []
    for e in net.edges:
        features.append({
            "type": "Feature",
            "geometry": {
                "type": "LineString",
                "coordinates": [[lon, lat] for lat, lon in e.geometry],
            },
            "properties": {"edge_id": e.edge_id, "score": totals[e.edge_id]},
        })
    payload = {"type": "FeatureCollection", "features": features}
    Path(geojson_path).write_text(json.dumps(payload, indent=1))
    logger.info("heatmap: %d edges, %d with positive score",
                len(totals), sum(1 for s in totals.values() if s > 0.0))
    return totals


@dataclass
class EvaluationReport:
    total_cost: float
    per_cluster_costs: list[float]
    cross_cluster_cost: float
    baseline_costs: dict[str, float]
    improvements_pct: dict[str, float]
    delta_energy: dict[str, float]
    validity_rate: float
    final_assignment_valid: bool
    qubo_densities: list[float]
    overlap_histogram: dict[int, int]

    def to_dict(self) -> dict:
        return {
            "total_cost": self.total_cost,
            "per_cluster_costs": self.per_cluster_costs,
            "cross_cluster_cost": self.cross_cluster_cost,
            "baseline_costs": self.baseline_costs,
            "improvements_pct": self.improvements_pct,
            "delta_energy": self.delta_energy,
            "validity_rate": self.validity_rate,
            "final_assignment_valid": self.final_assignment_valid,
            "qubo_densities": self.qubo_densities,
            "overlap_histogram": {str(k): v for k, v in self.overlap_histogram.items()},
        }


def cluster_cost(cw: CongestionWeights, ga: GlobalAssignment,
                 members: list[int]) -> float:
    """Cost restricted to pairs inside one cluster plus its members'
    duration penalties."""
    member_set = set(members)
    total = 0.0
    for key in sorted(cw.weights):
        i, j, a_i, a_j = key
        if i in member_set and j in member_set \
                and ga.choice[i] == a_i and ga.choice[j] == a_j:
            total += cw.weights[key]
    for vid in sorted(member_set):
        total += cw.pi[vid][ga.choice[vid]]
    return total


def build_report(cw: CongestionWeights, ga: GlobalAssignment,
                 clusters: list[list[int]] | None,
                 baselines: dict[str, GlobalAssignment],
                 validity_rate: float, final_valid: bool,
                 qubo_densities: list[float]) -> EvaluationReport:
    total = congestion_cost(cw, ga)
    if clusters:
        per_cluster = [cluster_cost(cw, ga, members) for members in clusters]
    else:
        per_cluster = [total]
    cross = total - sum(per_cluster)

    base_costs = {name: congestion_cost(cw, base) for name, base in baselines.items()}
    improvements = {name: improvement_pct(cost, total)
                    for name, cost in base_costs.items()}
    deltas = {}
    for name, cost in base_costs.items():
        if cost != 0.0:
            deltas[f"optimized_vs_{name}"] = delta_energy(total, cost)

    return EvaluationReport(total, per_cluster, cross, base_costs, improvements,
                            deltas, validity_rate, final_valid, qubo_densities,
                            overlap_degrees(cw))


def save_assignment(ga: GlobalAssignment, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "alt", "provenance"])
        for vid in sorted(ga.choice):
            writer.writerow([vid, ga.choice[vid], ga.provenance.get(vid, "")])


def load_assignment(path: str | Path) -> GlobalAssignment:
    choice: dict[int, int] = {}
    provenance: dict[int, str] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vid = int(row["vehicle_id"])
            if vid in choice:
                raise ValueError(f"{path}: duplicate vehicle id {vid}")
            choice[vid] = int(row["alt"])
            provenance[vid] = row.get("provenance", "")
    return GlobalAssignment(choice, provenance)
