"""Traffic assignment as QUBO: route alternatives, congestion scoring,
clustering, penalty construction and classical solvers."""

__version__ = "0.1.0"

from .network import (Edge, RoadNetwork, NetworkFormatError, EmptyNetworkError,
                      load_network, save_network, generate_grid, clip_network)
from .demand import (Vehicle, DemandConfig, InfeasibleDemandError,
                     generate_vehicles, save_vehicles, load_vehicles)
from .routing import (Route, RoutePoint, RoutingConfig, NoPathError,
                      k_shortest_routes, sample_route, build_routes,
                      save_routes, load_routes)
from .congestion import (CongestionEntry, CongestionWeights, MixedSamplingError,
                         pair_score, detect_conflicts, build_weights,
                         save_weights, load_weights)
from .clustering import (ConflictGraph, ClusterSet, build_conflict_graph,
                         modularity, leiden, merge_and_filter,
                         save_clusters, load_clusters)
from .qubo import (QuboInstance, compute_lambda, build_qubo, energy, is_valid,
                   repair, export_qubo, load_qubo, export_milp_lp)
from .solvers import (SolverConfig, SolveResult, InstanceTooLargeError,
                      SOLVER_NAMES, EXHAUSTIVE_MAX_VARS, warm_start,
                      solve_exhaustive, solve_sa, solve_tabu, solve)
from .evaluation import (GlobalAssignment, EvaluationReport, congestion_cost,
                         cluster_cost, delta_energy, improvement_pct,
                         baseline_shortest, baseline_random, qubo_density,
                         overlap_degrees, export_heatmap, build_report,
                         save_assignment, load_assignment)
from .pipeline import (PipelineConfig, RunManifest, StageError, load_config,
                       apply_overrides, run_pipeline, load_manifest)

__all__ = [
    "__version__",
    "Edge", "RoadNetwork", "NetworkFormatError", "EmptyNetworkError",
    "load_network", "save_network", "generate_grid", "clip_network",
    "Vehicle", "DemandConfig", "InfeasibleDemandError",
    "generate_vehicles", "save_vehicles", "load_vehicles",
    "Route", "RoutePoint", "RoutingConfig", "NoPathError",
    "k_shortest_routes", "sample_route", "build_routes",
    "save_routes", "load_routes",
    "CongestionEntry", "CongestionWeights", "MixedSamplingError",
    "pair_score", "detect_conflicts", "build_weights",
    "save_weights", "load_weights",
    "ConflictGraph", "ClusterSet", "build_conflict_graph",
    "modularity", "leiden", "merge_and_filter",
    "save_clusters", "load_clusters",
    "QuboInstance", "compute_lambda", "build_qubo", "energy", "is_valid",
    "repair", "export_qubo", "load_qubo", "export_milp_lp",
    "SolverConfig", "SolveResult", "InstanceTooLargeError",
    "SOLVER_NAMES", "EXHAUSTIVE_MAX_VARS", "warm_start",
    "solve_exhaustive", "solve_sa", "solve_tabu", "solve",
    "GlobalAssignment", "EvaluationReport", "congestion_cost",
    "cluster_cost", "delta_energy", "improvement_pct",
    "baseline_shortest", "baseline_random", "qubo_density",
    "overlap_degrees", "export_heatmap", "build_report",
    "save_assignment", "load_assignment",
    "PipelineConfig", "RunManifest", "StageError", "load_config",
    "apply_overrides", "run_pipeline", "load_manifest",
]
