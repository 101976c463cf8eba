"""End-to-end runs: config, staged execution over persisted files, manifest.

Every stage reads its inputs from files in the run directory and writes its
outputs back there, so a full run and the same stages invoked one by one
produce the same artifacts. A run ends with a manifest listing the config
snapshot, a content hash per artifact and the package version; wall-clock
timings are volatile and live in a sibling timings.json that is not part of
the reproducibility contract.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from dataclasses import dataclass, fields as dataclass_fields, field
from pathlib import Path

from . import __version__
from .clustering import (build_conflict_graph, leiden, load_clusters,
                         merge_and_filter, save_clusters)
from .congestion import (CongestionWeights, build_weights, detect_conflicts,
                         load_weights, save_weights)
from .demand import DemandConfig, generate_vehicles, load_vehicles, save_vehicles
from .evaluation import (GlobalAssignment, baseline_random, baseline_shortest,
                         build_report, export_heatmap, load_assignment,
                         qubo_density, save_assignment)
from .network import clip_network, generate_grid, load_network, save_network
from .qubo import (QuboInstance, build_qubo, energy, export_milp_lp, export_qubo,
                   load_qubo, repair)
from .routing import RoutingConfig, build_routes, load_routes, save_routes
from .solvers import SOLVER_NAMES, SolverConfig, solve

logger = logging.getLogger(__name__)


class StageError(RuntimeError):
    """A pipeline stage failed; the message names the stage."""


@dataclass
class PipelineConfig:
    """Flat run configuration; file form is one `key = value` per line."""

    network_file: str | None = None
    grid_rows: int = 20
    grid_cols: int = 20
    grid_spacing_m: float = 300.0
    grid_speed_mps: float = 13.9
    origin_lat: float = 48.72
    origin_lon: float = 21.26
    center_lat: float | None = None
    center_lon: float | None = None
    radius_km: float | None = None
    n: int = 50
    l_min_m: float = 600.0
    l_max_m: float = 8000.0
    attraction_lat: float | None = None
    attraction_lon: float | None = None
    attraction_radius_m: float = 500.0
    k: int = 2
    alpha_s: float = 10.0
    window_s: float = 600.0
    gamma_s: float = 4.0
    clustering: bool = False
    rho: float = 4.0
    m_min: int = 1000
    max_clusters: int = 5
    solver: str = "sa"
    seed: int = 0
    sweeps: int | None = None
    reads: int = 8
    time_limit_s: float | None = None
    tenure: int | None = None
    max_stagnation: int | None = None
    iterations: int | None = None
    t_initial: float | None = None
    t_final: float | None = None

    def validate(self) -> None:
        if self.network_file is None and (self.grid_rows < 2 or self.grid_cols < 2):
            raise ValueError("grid needs rows >= 2 and cols >= 2")
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.alpha_s <= 0 or self.window_s <= 0 or self.gamma_s <= 0:
            raise ValueError("alpha_s, window_s and gamma_s must be positive")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.m_min < 1 or self.max_clusters < 1:
            raise ValueError("m_min and max_clusters must be >= 1")
        if self.solver not in SOLVER_NAMES:
            raise ValueError(f"unknown solver {self.solver!r}")
        if not 0 <= self.l_min_m <= self.l_max_m:
            raise ValueError("need 0 <= l_min_m <= l_max_m")
        clip = (self.center_lat, self.center_lon, self.radius_km)
        if any(v is not None for v in clip) and any(v is None for v in clip):
            raise ValueError("clipping needs center_lat, center_lon and radius_km together")
        attraction = (self.attraction_lat, self.attraction_lon)
        if any(v is not None for v in attraction) and any(v is None for v in attraction):
            raise ValueError("attraction needs both attraction_lat and attraction_lon")

    def snapshot(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclass_fields(self)}

    def save(self, path: str | Path) -> None:
        lines = ["# pipeline configuration"]
        for key, value in self.snapshot().items():
            if value is None:
                rendered = ""
            elif isinstance(value, bool):
                rendered = "true" if value else "false"
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{key} = {rendered}")
        Path(path).write_text("\n".join(lines) + "\n")


_CONFIG_TYPES = {f.name: f.type for f in dataclass_fields(PipelineConfig)}


def _parse_config_value(key: str, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    ftype = _CONFIG_TYPES[key]
    if ftype in ("bool",):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ValueError(f"config key {key}: expected a boolean, got {raw!r}")
    if ftype in ("int", "int | None"):
        return int(raw)
    if ftype in ("float", "float | None"):
        return float(raw)
    return raw


def load_config(path: str | Path) -> PipelineConfig:
    cfg = PipelineConfig()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_TYPES:
            raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
        setattr(cfg, key, _parse_config_value(key, value))
    cfg.validate()
    return cfg


def apply_overrides(cfg: PipelineConfig, overrides: dict) -> PipelineConfig:
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CONFIG_TYPES:
            raise ValueError(f"unknown config key {key!r}")
        setattr(cfg, key, value)
    cfg.validate()
    return cfg


@dataclass
class RunManifest:
    config: dict
    artifacts: dict[str, str]
    versions: dict[str, str]
    timings: dict[str, float] = field(default_factory=dict)

    def save(self, run_dir: str | Path) -> None:
        run_dir = Path(run_dir)
        stable = {"config": self.config, "artifacts": self.artifacts,
                  "versions": self.versions}
        (run_dir / "manifest.json").write_text(
            json.dumps(stable, indent=2, sort_keys=True) + "\n")
        (run_dir / "timings.json").write_text(
            json.dumps({"timings_s": self.timings}, indent=2, sort_keys=True) + "\n")


def load_manifest(run_dir: str | Path) -> RunManifest:
    run_dir = Path(run_dir)
    stable = json.loads((run_dir / "manifest.json").read_text())
    timings = {}
    timings_path = run_dir / "timings.json"
    if timings_path.exists():
        timings = json.loads(timings_path.read_text()).get("timings_s", {})
    return RunManifest(stable["config"], stable["artifacts"], stable["versions"],
                       timings)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _require(run_dir: Path, name: str, stage: str) -> Path:
    path = run_dir / name
    if not path.exists():
        raise StageError(f"[stage:{stage}] missing input {name}; run the earlier stages first")
    return path


# ---------------------------------------------------------------------------
# stages; each one maps files -> files inside the run directory


def stage_network(cfg: PipelineConfig, run_dir: Path) -> None:
    if cfg.network_file is not None:
        net = load_network(cfg.network_file)
    else:
        net = generate_grid(cfg.grid_rows, cfg.grid_cols, cfg.grid_spacing_m,
                            cfg.grid_speed_mps, cfg.origin_lat, cfg.origin_lon,
                            seed=cfg.seed)
    if cfg.radius_km is not None:
        net = clip_network(net, cfg.center_lat, cfg.center_lon, cfg.radius_km)
    save_network(net, run_dir / "network.txt")


def stage_demand(cfg: PipelineConfig, run_dir: Path) -> None:
    net = load_network(_require(run_dir, "network.txt", "demand"))
    attraction = None
    if cfg.attraction_lat is not None:
        attraction = (cfg.attraction_lat, cfg.attraction_lon)
    demand_cfg = DemandConfig(cfg.n, cfg.l_min_m, cfg.l_max_m, cfg.seed,
                              attraction, cfg.attraction_radius_m)
    vehicles = generate_vehicles(net, demand_cfg)
    save_vehicles(vehicles, run_dir / "vehicles.csv")


def stage_routing(cfg: PipelineConfig, run_dir: Path) -> None:
    net = load_network(_require(run_dir, "network.txt", "routing"))
    vehicles = load_vehicles(_require(run_dir, "vehicles.csv", "routing"))
    routes = build_routes(net, vehicles, RoutingConfig(cfg.k, cfg.alpha_s, cfg.window_s))
    save_routes(routes, run_dir / "routes_summary.csv", run_dir / "routes_points.csv")


def stage_weights(cfg: PipelineConfig, run_dir: Path) -> None:
    net = load_network(_require(run_dir, "network.txt", "weights"))
    routes = load_routes(_require(run_dir, "routes_summary.csv", "weights"),
                         _require(run_dir, "routes_points.csv", "weights"),
                         net, cfg.alpha_s)
    entries = detect_conflicts(routes, cfg.alpha_s, cfg.window_s, cfg.gamma_s)
    cw = build_weights(entries, routes, alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    save_weights(cw, run_dir / "weights.csv", run_dir / "penalties.csv")


def stage_cluster(cfg: PipelineConfig, run_dir: Path) -> None:
    cw = load_weights(_require(run_dir, "weights.csv", "cluster"),
                      _require(run_dir, "penalties.csv", "cluster"),
                      alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    graph = build_conflict_graph(cw)
    partition = leiden(graph, cfg.rho, cfg.seed)
    cs = merge_and_filter(partition, graph, cfg.m_min, cfg.max_clusters,
                          all_vehicles=sorted(cw.pi), rho=cfg.rho)
    save_clusters(cs, run_dir / "clusters.csv")


def _sub_weights(cw: CongestionWeights, members: list[int]) -> CongestionWeights:
    pos = {vid: idx for idx, vid in enumerate(members)}
    sub_w: dict[tuple[int, int, int, int], float] = {}
    for (i, j, a_i, a_j), w in cw.weights.items():
        if i in pos and j in pos:
            sub_w[(pos[i], pos[j], a_i, a_j)] = w
    sub_pi = {pos[vid]: list(cw.pi[vid]) for vid in members}
    return CongestionWeights(sub_w, sub_pi, cw.alpha_s, cw.gamma_s)


def _load_cluster_sets(cfg: PipelineConfig, run_dir: Path, stage: str) -> list[list[int]]:
    cw = load_weights(_require(run_dir, "weights.csv", stage),
                      _require(run_dir, "penalties.csv", stage),
                      alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    all_vehicles = sorted(cw.pi)
    if cfg.clustering:
        cs = load_clusters(_require(run_dir, "clusters.csv", stage),
                           cfg.rho, cfg.m_min, cfg.max_clusters)
        return cs.clusters
    return [all_vehicles]


def stage_build_qubo(cfg: PipelineConfig, run_dir: Path) -> None:
    cw = load_weights(_require(run_dir, "weights.csv", "build-qubo"),
                      _require(run_dir, "penalties.csv", "build-qubo"),
                      alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    for old in run_dir.glob("qubo_c*.coo"):
        old.unlink()
    for idx, members in enumerate(_load_cluster_sets(cfg, run_dir, "build-qubo")):
        sub = _sub_weights(cw, members)
        q = build_qubo(sub, len(members), cfg.k, vehicles=members)
        export_qubo(q, run_dir / f"qubo_c{idx:03d}.coo")


def _shortest_alt(pi_values: list[float]) -> int:
    best = 0
    for alt, value in enumerate(pi_values):
        if value < pi_values[best] - 1e-15:
            best = alt
    return best


def _solver_config(cfg: PipelineConfig, seed: int) -> SolverConfig:
    return SolverConfig(seed=seed, time_limit_s=cfg.time_limit_s, sweeps=cfg.sweeps,
                        reads=cfg.reads, t_initial=cfg.t_initial, t_final=cfg.t_final,
                        tenure=cfg.tenure, max_stagnation=cfg.max_stagnation,
                        iterations=cfg.iterations)


def solve_instance(q: QuboInstance, solver: str, scfg: SolverConfig):
    """Solve one instance and repair; returns (result, repaired assignment,
    per-vehicle alternative dict, number of repaired vehicles)."""
    result = solve(q, solver, scfg)
    fixed = list(repair(q, result.assignment))
    raw = list(result.assignment)
    n_repaired = 0
    choice: dict[int, int] = {}
    for pos, vid in enumerate(q.vehicles):
        base = pos * q.k
        if raw[base:base + q.k] != fixed[base:base + q.k]:
            n_repaired += 1
        choice[vid] = fixed[base:base + q.k].index(1)
    return result, fixed, choice, n_repaired


def stage_solve(cfg: PipelineConfig, run_dir: Path) -> None:
    cw = load_weights(_require(run_dir, "weights.csv", "solve"),
                      _require(run_dir, "penalties.csv", "solve"),
                      alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    qubo_paths = sorted(run_dir.glob("qubo_c*.coo"))
    if not qubo_paths:
        raise StageError("[stage:solve] no qubo_c*.coo files; run build-qubo first")

    choice: dict[int, int] = {}
    provenance: dict[int, str] = {}
    rows = []
    for idx, path in enumerate(qubo_paths):
        q = load_qubo(path)
        scfg = _solver_config(cfg, cfg.seed + idx)
        result, fixed, sub_choice, n_repaired = solve_instance(q, cfg.solver, scfg)
        for pos, vid in enumerate(q.vehicles):
            base = pos * q.k
            block = result.assignment[base:base + q.k]
            ok = sum(block) == 1 and (base + block.index(1)) not in q.not_real
            provenance[vid] = f"solver:{cfg.solver}" if ok else "repair"
        choice.update(sub_choice)
        rows.append([idx, result.solver, result.seed, repr(result.energy),
                     int(result.valid), n_repaired, repr(energy(q, fixed))])

    for vid in sorted(cw.pi):
        if vid not in choice:
            choice[vid] = _shortest_alt(cw.pi[vid])
            provenance[vid] = "shortest"

    with open(run_dir / "results.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cluster_id", "solver", "seed", "energy", "valid",
                         "repaired_vehicles", "post_repair_energy"])
        writer.writerows(rows)
    save_assignment(GlobalAssignment(choice, provenance), run_dir / "assignment.csv")


def stage_evaluate(cfg: PipelineConfig, run_dir: Path) -> None:
    net = load_network(_require(run_dir, "network.txt", "evaluate"))
    cw = load_weights(_require(run_dir, "weights.csv", "evaluate"),
                      _require(run_dir, "penalties.csv", "evaluate"),
                      alpha_s=cfg.alpha_s, gamma_s=cfg.gamma_s)
    routes = load_routes(_require(run_dir, "routes_summary.csv", "evaluate"),
                         _require(run_dir, "routes_points.csv", "evaluate"),
                         net, cfg.alpha_s)
    ga = load_assignment(_require(run_dir, "assignment.csv", "evaluate"))

    valid_flags = []
    with open(_require(run_dir, "results.csv", "evaluate"), newline="") as fh:
        for row in csv.DictReader(fh):
            valid_flags.append(int(row["valid"]) == 1)
    validity_rate = sum(valid_flags) / len(valid_flags) if valid_flags else 1.0

    final_valid = all(0 <= ga.choice[vid] < len(cw.pi[vid]) for vid in cw.pi)
    densities = []
    for path in sorted(run_dir.glob("qubo_c*.coo")):
        q = load_qubo(path)
        densities.append(qubo_density(q.n_var, q.coeffs))

    clusters = None
    if cfg.clustering and (run_dir / "clusters.csv").exists():
        clusters = load_clusters(run_dir / "clusters.csv", cfg.rho, cfg.m_min,
                                 cfg.max_clusters).clusters
    baselines = {"shortest": baseline_shortest(routes),
                 "random": baseline_random(routes, cfg.seed)}
    report = build_report(cw, ga, clusters, baselines, validity_rate,
                          final_valid, densities)
    (run_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def stage_export(cfg: PipelineConfig, run_dir: Path, lp: bool = False) -> None:
    net = load_network(_require(run_dir, "network.txt", "export"))
    routes = load_routes(_require(run_dir, "routes_summary.csv", "export"),
                         _require(run_dir, "routes_points.csv", "export"),
                         net, cfg.alpha_s)
    ga = load_assignment(_require(run_dir, "assignment.csv", "export"))
    export_heatmap(net, routes, ga, alpha_s=cfg.alpha_s, window_s=cfg.window_s,
                   gamma_s=cfg.gamma_s, csv_path=run_dir / "heatmap.csv",
                   geojson_path=run_dir / "heatmap.geojson")
    if lp:
        for path in sorted(run_dir.glob("qubo_c*.coo")):
            q = load_qubo(path)
            export_milp_lp(q, path.with_suffix(".lp"))


_STAGE_FUNCS = [
    ("network", stage_network),
    ("demand", stage_demand),
    ("routing", stage_routing),
    ("weights", stage_weights),
    ("cluster", stage_cluster),
    ("build_qubo", stage_build_qubo),
    ("solve", stage_solve),
    ("evaluate", stage_evaluate),
    ("export", stage_export),
]


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path) -> RunManifest:
    """Execute every stage in order and write the run manifest."""
    cfg.validate()
    run_dir = Path(out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    cfg.save(run_dir / "config.txt")

    timings: dict[str, float] = {}
    for name, func in _STAGE_FUNCS:
        if name == "cluster" and not cfg.clustering:
            continue
        started = time.perf_counter()
        try:
            func(cfg, run_dir)
        except StageError:
            raise
        except Exception as exc:
            raise StageError(f"[stage:{name}] {exc}") from exc
        timings[name] = time.perf_counter() - started
        logger.info("stage %s finished in %.3f s", name, timings[name])

    artifacts = {}
    for path in sorted(run_dir.iterdir()):
        if path.name in ("manifest.json", "timings.json") or path.is_dir():
            continue
        artifacts[path.name] = _sha256(path)
    manifest = RunManifest(cfg.snapshot(), artifacts,
                           {"trafficqubo": __version__}, timings)
    manifest.save(run_dir)
    return manifest
