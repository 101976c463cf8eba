"""Synthetic travel demand: origin-destination pairs over a road network.

Two sampling modes share one rejection loop. In uniform mode both endpoints
are drawn uniformly from the node set. In attraction mode the destination is
drawn only from nodes within a configured radius of an attraction point,
which concentrates traffic the way a stadium or a shopping center would.
Either way a draw is accepted only when the straight-line distance between
origin and destination falls inside [l_min_m, l_max_m] and the endpoints
differ.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .geo import haversine_m
from .network import RoadNetwork

logger = logging.getLogger(__name__)

ATTEMPT_BUDGET_PER_VEHICLE = 1000


class InfeasibleDemandError(RuntimeError):
    """Rejection sampling ran out of attempts for the requested demand."""


@dataclass(frozen=True)
class Vehicle:
    vehicle_id: int
    origin: str
    destination: str


@dataclass
class DemandConfig:
    n: int
    l_min_m: float = 600.0
    l_max_m: float = 8000.0
    seed: int = 0
    attraction: tuple[float, float] | None = None
    attraction_radius_m: float = 500.0

    def validate(self) -> None:
        if self.n < 1:
            raise ValueError("demand needs n >= 1")
        if not (0.0 <= self.l_min_m <= self.l_max_m):
            raise ValueError(f"invalid OD distance band [{self.l_min_m}, {self.l_max_m}]")
        if self.attraction_radius_m <= 0.0:
            raise ValueError("attraction radius must be positive")


def generate_vehicles(net: RoadNetwork, cfg: DemandConfig) -> list[Vehicle]:
    """Sample ``cfg.n`` vehicles; deterministic for a fixed seed.

    Raises InfeasibleDemandError after 1000 * n rejected attempts, which is
    the signal that the distance band (or the attraction radius) does not fit
    the network extent.
    """
    cfg.validate()
    node_ids = list(net.nodes)
    if len(node_ids) < 2:
        raise InfeasibleDemandError("need at least two nodes to sample demand")

    if cfg.attraction is not None:
        a_lat, a_lon = cfg.attraction
        dest_pool = [
            node_id for node_id in node_ids
            if haversine_m(net.nodes[node_id][0], net.nodes[node_id][1],
                           a_lat, a_lon) <= cfg.attraction_radius_m
        ]
        if not dest_pool:
            raise InfeasibleDemandError(
                f"no nodes within {cfg.attraction_radius_m} m of attraction "
                f"({a_lat}, {a_lon})")
    else:
        dest_pool = node_ids

    rng = np.random.default_rng(cfg.seed)
    budget = ATTEMPT_BUDGET_PER_VEHICLE * cfg.n
    vehicles: list[Vehicle] = []
    attempts = 0
    while len(vehicles) < cfg.n:
        if attempts >= budget:
            raise InfeasibleDemandError(
                f"gave up after {budget} attempts with {len(vehicles)}/{cfg.n} "
                f"vehicles accepted; widen [l_min_m, l_max_m] or the network")
        attempts += 1
        origin = node_ids[int(rng.integers(len(node_ids)))]
        dest = dest_pool[int(rng.integers(len(dest_pool)))]
        if origin == dest:
            continue
        o_pos, d_pos = net.nodes[origin], net.nodes[dest]
        dist = haversine_m(o_pos[0], o_pos[1], d_pos[0], d_pos[1])
        if cfg.l_min_m <= dist <= cfg.l_max_m:
            vehicles.append(Vehicle(len(vehicles), origin, dest))

    logger.info("sampled %d vehicles in %d attempts (%.1f%% accepted)",
                cfg.n, attempts, 100.0 * cfg.n / attempts)
    return vehicles


def save_vehicles(vehicles: list[Vehicle], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vehicle_id", "origin_node", "dest_node"])
        for v in vehicles:
            writer.writerow([v.vehicle_id, v.origin, v.destination])


def load_vehicles(path: str | Path) -> list[Vehicle]:
    vehicles: list[Vehicle] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            vehicles.append(Vehicle(int(row["vehicle_id"]), row["origin_node"],
                                    row["dest_node"]))
    expected = list(range(len(vehicles)))
    if [v.vehicle_id for v in vehicles] != expected:
        raise ValueError(f"{path}: vehicle ids must be dense 0..n-1")
    return vehicles
