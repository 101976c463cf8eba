"""Leader-follower congestion scoring between sampled trajectories.

Two vehicles interact at a time step when they occupy the same directed edge
at that step. The pair contributes a score that decays linearly with the gap
between them, measured as great-circle distance, and vanishes once the gap
exceeds gamma times their mean speed (a headway of a few seconds). Scores
accumulate over all shared steps into per-(edge, leader, follower,
alternatives) entries, then collapse into a symmetric pair weight tensor
indexed by vehicle pair and alternative choice.
"""

import csv
import logging
from dataclasses import dataclass
from math import radians
from pathlib import Path

from .geo import haversine_rad_m
from .routing import Route

logger = logging.getLogger(__name__)


class MixedSamplingError(ValueError):
    """Routes sampled at different time steps cannot be compared."""


@dataclass(frozen=True)
class CongestionEntry:
    """Accumulated interaction on one edge for one ordered vehicle pair."""
    edge_id: str
    leader: int
    follower: int
    leader_alt: int
    follower_alt: int
    score: float


@dataclass
class CongestionWeights:
    """Symmetric pair weights plus per-vehicle duration penalties.

    ``weights`` maps (i, j, a_i, a_j) with i < j to the summed interaction of
    vehicle i driving alternative a_i against vehicle j driving a_j, in both
    leader-follower orders. Absent keys mean zero. ``pi`` maps each vehicle
    to its per-alternative extra duration over that vehicle's fastest
    alternative (so every vehicle has at least one zero).
    """
    weights: dict[tuple[int, int, int, int], float]
    pi: dict[int, list[float]]
    alpha_s: float
    gamma_s: float

    @property
    def n_vehicles(self) -> int:
        return len(self.pi)

    def pair_weight(self, i: int, j: int, a_i: int, a_j: int) -> float:
        if i == j:
            raise ValueError("pair weight needs two distinct vehicles")
        if i < j:
            return self.weights.get((i, j, a_i, a_j), 0.0)
        return self.weights.get((j, i, a_j, a_i), 0.0)


def pair_score(distance_m: float, v_leader: float, v_follower: float,
               alpha_s: float, gamma_s: float) -> float:
    """Score of one leader-follower encounter at one time step.

    Linear decay from alpha_s at zero gap to zero at gamma_s * mean speed.
    A stationary pair (mean speed zero) scores alpha_s only at exactly zero
    gap, since any positive gap can never close.
    """
    if distance_m < 0.0 or v_leader < 0.0 or v_follower < 0.0:
        raise ValueError("pair_score needs non-negative distance and speeds")
    v_mean = 0.5 * (v_leader + v_follower)
    if v_mean == 0.0:
        return alpha_s if distance_m == 0.0 else 0.0
    return alpha_s * max(1.0 - distance_m / (gamma_s * v_mean), 0.0)


def detect_conflicts(routes: dict[int, list[Route]], alpha_s: float,
                     window_s: float, gamma_s: float) -> list[CongestionEntry]:
    """Scan all sampled routes for same-edge co-occurrences.

    At every sample step, vehicles on the same directed edge are ordered by
    arc length from the edge start; each ordered pair with the leader
    strictly ahead contributes one score. An exact dead heat is counted once
    with the lower vehicle id leading. Pairs formed by two alternatives of
    the same vehicle never score.
    """
    groups: dict[tuple[int, str, str, str],
                 list[tuple[int, int, float, float, float, float]]] = {}
    for vid in sorted(routes):
        for route in routes[vid]:
            if abs(route.alpha_s - alpha_s) > 1e-12:
                raise MixedSamplingError(
                    f"vehicle {vid} alt {route.alt} sampled at {route.alpha_s}s, "
                    f"expected {alpha_s}s")
            for p in route.points:
                if p.t > window_s + 1e-9:
                    continue
                step = int(round(p.t / alpha_s))
                key = (step, p.edge_id, p.dir_from, p.dir_to)
                groups.setdefault(key, []).append(
                    (vid, route.alt, p.offset_m, radians(p.lat), radians(p.lon),
                     p.speed_mps))

    scores: dict[tuple[str, int, int, int, int], float] = {}
    for (step, edge_id, _df, _dt), members in groups.items():
        if len(members) < 2:
            continue
        for a in range(len(members)):
            vid_a, alt_a, off_a, phi_a, lam_a, spd_a = members[a]
            for b in range(a + 1, len(members)):
                vid_b, alt_b, off_b, phi_b, lam_b, spd_b = members[b]
                if vid_a == vid_b:
                    continue
                if off_a > off_b or (off_a == off_b and vid_a < vid_b):
                    lead, follow = members[a], members[b]
                else:
                    lead, follow = members[b], members[a]
                d = haversine_rad_m(phi_a, lam_a, phi_b, lam_b)
                s = pair_score(d, lead[5], follow[5], alpha_s, gamma_s)
                if s > 0.0:
                    key = (edge_id, lead[0], follow[0], lead[1], follow[1])
                    scores[key] = scores.get(key, 0.0) + s

    entries = [CongestionEntry(*key, score) for key, score in sorted(scores.items())]
    logger.info("congestion scan: %d step-edge groups, %d scored entries",
                len(groups), len(entries))
    return entries


def build_weights(entries: list[CongestionEntry], routes: dict[int, list[Route]],
                  *, alpha_s: float, gamma_s: float) -> CongestionWeights:
    """Fold ordered entries into the symmetric tensor and compute duration
    penalties from the route durations."""
    weights: dict[tuple[int, int, int, int], float] = {}
    for e in entries:
        if e.leader < e.follower:
            key = (e.leader, e.follower, e.leader_alt, e.follower_alt)
        else:
            key = (e.follower, e.leader, e.follower_alt, e.leader_alt)
        weights[key] = weights.get(key, 0.0) + e.score

    pi: dict[int, list[float]] = {}
    for vid in sorted(routes):
        durations = [r.duration_s for r in routes[vid]]
        if not durations:
            raise ValueError(f"vehicle {vid} has no routes")
        fastest = min(durations)
        pi[vid] = [d - fastest for d in durations]

    return CongestionWeights(weights, pi, alpha_s, gamma_s)


def save_weights(cw: CongestionWeights, weights_path: str | Path,
                 penalties_path: str | Path) -> None:
    with open(weights_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "a_i", "a_j", "weight"])
        for (i, j, a_i, a_j) in sorted(cw.weights):
            writer.writerow([i, j, a_i, a_j, repr(cw.weights[(i, j, a_i, a_j)])])
    with open(penalties_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "alt", "pi_seconds"])
        for vid in sorted(cw.pi):
            for alt, value in enumerate(cw.pi[vid]):
                writer.writerow([vid, alt, repr(value)])


def load_weights(weights_path: str | Path, penalties_path: str | Path,
                 *, alpha_s: float, gamma_s: float) -> CongestionWeights:
    weights: dict[tuple[int, int, int, int], float] = {}
    with open(weights_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (int(row["i"]), int(row["j"]), int(row["a_i"]), int(row["a_j"]))
            if key[0] >= key[1]:
                raise ValueError(f"{weights_path}: weight rows need i < j, got {key}")
            weights[key] = float(row["weight"])
    pi: dict[int, list[float]] = {}
    with open(penalties_path, newline="") as fh:
        for row in csv.DictReader(fh):
            pi.setdefault(int(row["vehicle_id"]), []).append(float(row["pi_seconds"]))
    return CongestionWeights(weights, pi, alpha_s, gamma_s)
