"""Command line front end.

Stages write their artifacts into a run directory so they can be chained:

    trafficqubo generate  --out runs/demo -n 50
    trafficqubo weights   --out runs/demo
    trafficqubo cluster   --out runs/demo
    trafficqubo build-qubo --out runs/demo
    trafficqubo solve     --out runs/demo --solver sa --seed 7
    trafficqubo evaluate  --out runs/demo
    trafficqubo export    --out runs/demo

or done in one shot with `trafficqubo run-all --out runs/demo`. Flags override
values from --config, which overrides built-in defaults. `solve` also works on
a bare instance file (--qubo), and `evaluate` can compare two results files.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

from .pipeline import (PipelineConfig, StageError, _CONFIG_TYPES, apply_overrides,
                       load_config, run_pipeline, solve_instance, stage_build_qubo,
                       stage_cluster, stage_demand, stage_evaluate, stage_export,
                       stage_network, stage_routing, stage_solve, stage_weights)
from .qubo import energy, load_qubo
from .solvers import SOLVER_NAMES, SolverConfig


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE",
                        help="key = value config file; flags given here win")
    group = parser.add_argument_group("config overrides")
    for key, ftype in _CONFIG_TYPES.items():
        flag = "--" + key.replace("_", "-")
        if key in ("n", "k"):
            group.add_argument(f"-{key}", flag, dest=key, default=None, type=int)
            continue
        if ftype == "bool":
            group.add_argument(flag, dest=key, default=None,
                               action=argparse.BooleanOptionalAction)
        elif ftype in ("int", "int | None"):
            group.add_argument(flag, dest=key, default=None, type=int)
        elif ftype in ("float", "float | None"):
            group.add_argument(flag, dest=key, default=None, type=float)
        elif key == "solver":
            group.add_argument(flag, dest=key, default=None, choices=SOLVER_NAMES)
        else:
            group.add_argument(flag, dest=key, default=None)


def _resolve_config(args: argparse.Namespace, run_dir: Path | None) -> PipelineConfig:
    if getattr(args, "config", None):
        cfg = load_config(args.config)
    elif run_dir is not None and (run_dir / "config.txt").exists():
        cfg = load_config(run_dir / "config.txt")
    else:
        cfg = PipelineConfig()
    overrides = {key: getattr(args, key) for key in _CONFIG_TYPES if hasattr(args, key)}
    return apply_overrides(cfg, overrides)


def _run_dir(args: argparse.Namespace) -> Path:
    run_dir = Path(args.out)
    run_dir.mkdir(parents=True, exist_ok=True)
    return run_dir


def _cmd_generate(args) -> int:
    run_dir = _run_dir(args)
    cfg = _resolve_config(args, run_dir)
    cfg.save(run_dir / "config.txt")
    stage_network(cfg, run_dir)
    stage_demand(cfg, run_dir)
    stage_routing(cfg, run_dir)
    print(f"generate: wrote network, vehicles and routes to {run_dir}")
    return 0


def _stage_command(stage_func, label):
    def handler(args) -> int:
        run_dir = _run_dir(args)
        cfg = _resolve_config(args, run_dir)
        stage_func(cfg, run_dir)
        print(f"{label}: done in {run_dir}")
        return 0
    return handler


def _cmd_solve(args) -> int:
    if args.qubo is not None:
        q = load_qubo(args.qubo)
        solver = args.solver or "sa"
        scfg = SolverConfig(seed=args.seed if args.seed is not None else 0,
                            time_limit_s=args.time_limit_s, sweeps=args.sweeps,
                            reads=args.reads if args.reads is not None else 8,
                            t_initial=args.t_initial, t_final=args.t_final,
                            tenure=args.tenure, max_stagnation=args.max_stagnation,
                            iterations=args.iterations)
        result, fixed, _, n_repaired = solve_instance(q, solver, scfg)
        post = energy(q, fixed)
        print(f"solver={result.solver} seed={result.seed} n_var={q.n_var} "
              f"energy={result.energy!r} valid={int(result.valid)} "
              f"repaired_vehicles={n_repaired} post_repair_energy={post!r}")
        if args.results:
            with open(args.results, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["cluster_id", "solver", "seed", "energy", "valid",
                                 "repaired_vehicles", "post_repair_energy"])
                writer.writerow([0, result.solver, result.seed, repr(result.energy),
                                 int(result.valid), n_repaired, repr(post)])
            print(f"solve: wrote {args.results}")
        return 0
    if args.out is None:
        print("error: solve needs either --out RUN_DIR or --qubo FILE", file=sys.stderr)
        return 2
    run_dir = _run_dir(args)
    cfg = _resolve_config(args, run_dir)
    stage_solve(cfg, run_dir)
    print(f"solve: wrote results and assignment to {run_dir}")
    return 0


def _sum_energies(path: str) -> float:
    total = 0.0
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path}: no result rows")
    for row in rows:
        column = "post_repair_energy" if "post_repair_energy" in row else "energy"
        total += float(row[column])
    return total


def _cmd_evaluate(args) -> int:
    if args.results_a is not None or args.results_b is not None:
        if args.results_a is None or args.results_b is None:
            print("error: comparison mode needs both --results-a and --results-b",
                  file=sys.stderr)
            return 2
        e_a = _sum_energies(args.results_a)
        e_b = _sum_energies(args.results_b)
        print(f"energy_a={e_a!r} energy_b={e_b!r} delta={e_b - e_a!r}")
        if e_a != 0.0:
            print(f"relative_delta={(e_b - e_a) / abs(e_a)!r}")
        return 0
    if args.out is None:
        print("error: evaluate needs either --out RUN_DIR or two results files",
              file=sys.stderr)
        return 2
    run_dir = _run_dir(args)
    cfg = _resolve_config(args, run_dir)
    stage_evaluate(cfg, run_dir)
    report = json.loads((run_dir / "report.json").read_text())
    print(f"evaluate: wrote {run_dir / 'report.json'}")
    print(f"  total_cost={report['total_cost']}")
    for name, value in sorted(report["baseline_costs"].items()):
        pct = report["improvements_pct"][name]
        print(f"  baseline[{name}]={value} improvement={pct:.2f}%")
    return 0


def _cmd_export(args) -> int:
    run_dir = _run_dir(args)
    cfg = _resolve_config(args, run_dir)
    stage_export(cfg, run_dir, lp=args.lp)
    extra = " and LP files" if args.lp else ""
    print(f"export: wrote heatmap.csv and heatmap.geojson{extra} to {run_dir}")
    return 0


def _cmd_run_all(args) -> int:
    run_dir = _run_dir(args)
    cfg = _resolve_config(args, run_dir)
    manifest = run_pipeline(cfg, run_dir)
    print(f"run-all: finished, manifest at {run_dir / 'manifest.json'}")
    for name, seconds in manifest.timings.items():
        print(f"  {name}: {seconds:.3f} s")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trafficqubo",
        description="Traffic route assignment through QUBO optimization.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text, handler, out_required=True):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", required=out_required, metavar="RUN_DIR",
                       help="run directory holding the pipeline artifacts")
        _add_config_flags(p)
        p.set_defaults(handler=handler)
        return p

    add("generate", "build the network, vehicles and route alternatives",
        _cmd_generate)
    add("weights", "score pairwise congestion between route alternatives",
        _stage_command(stage_weights, "weights"))
    add("cluster", "partition vehicles into interaction clusters",
        _stage_command(stage_cluster, "cluster"))
    add("build-qubo", "assemble one binary optimization instance per cluster",
        _stage_command(stage_build_qubo, "build-qubo"))

    p_solve = add("solve", "optimize the instances and assemble the assignment",
                  _cmd_solve, out_required=False)
    p_solve.add_argument("--qubo", metavar="FILE.coo",
                         help="solve a single exported instance instead of a run dir")
    p_solve.add_argument("--results", metavar="FILE.csv",
                         help="with --qubo: also write a one-row results file")

    p_eval = add("evaluate", "write the run report, or compare two results files",
                 _cmd_evaluate, out_required=False)
    p_eval.add_argument("--results-a", metavar="FILE.csv",
                        help="reference results file for comparison mode")
    p_eval.add_argument("--results-b", metavar="FILE.csv",
                        help="candidate results file for comparison mode")

    p_export = add("export", "write the congestion heatmap (CSV and GeoJSON)",
                   _cmd_export)
    p_export.add_argument("--lp", action="store_true",
                          help="also export each instance as a linearized MILP .lp file")

    add("run-all", "run every stage in order and write the manifest", _cmd_run_all)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (StageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
