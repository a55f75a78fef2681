"""Command line entry point: ``swarmforage {evolve,run,compare,stats,simulate}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from swarmforage import ga, harness
from swarmforage.controller import SimulationFault
from swarmforage.kernels import BACKEND
from swarmforage.model import DEFAULT_PARAMS, ParamSet, WorldConfig, validate_params
from swarmforage.world import World

EXIT_PLAN = 2
EXIT_FAULTS = 3

log = logging.getLogger("swarmforage")


def _read_params(path):
    if path is None:
        return None
    params = ParamSet.from_text(Path(path).read_text())
    bad = validate_params(params)
    if bad:
        raise harness.PlanError(f"{path}: " + "; ".join(bad))
    return params


def cmd_evolve(args) -> int:
    sections = harness.read_sections(Path(args.config).read_text()) if args.config else {}
    cfg = ga.config_from_sections(sections, seed=args.seed, mode=args.mode, workers=args.workers)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    def progress(g):
        log.info("generation %d best %.2f mean %.2f diversity %.3f", g.generation, g.best, g.mean, g.diversity)

    record = ga.evolve(cfg, progress)
    (out / "evolution.csv").write_text(record.to_csv())
    (out / "best_params.txt").write_text(record.best_genome.to_text())
    print(f"termination: {record.termination.value}")
    print(f"best fitness: {record.best_trace[-1]:.3f}")
    print(record.best_genome.to_text(), end="")
    return 0


def _execute(plan, params, args) -> int:
    try:
        results = harness.run_plan(plan, params, workers=args.workers)
    except harness.PlanError as exc:
        print(f"plan validation failed: {exc}", file=sys.stderr)
        return EXIT_PLAN
    except harness.RowFailure as exc:
        print(f"too many replicate faults: {exc}", file=sys.stderr)
        return EXIT_FAULTS
    report = harness.write_outputs(args.out, results, plan.campaign)
    _print_report(report)
    return 0


def _load_plan(name_or_path):
    try:
        return harness.load_plan(name_or_path)
    except (harness.PlanError, OSError, ValueError) as exc:
        print(f"plan validation failed: {exc}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    plan = _load_plan(args.plan)
    if plan is None:
        return EXIT_PLAN
    if args.replicates is not None:
        plan.n_replicates = args.replicates
    if args.seed is not None:
        plan.seed = args.seed
    try:
        params = _read_params(args.params)
    except (harness.PlanError, ValueError) as exc:
        print(f"plan validation failed: {exc}", file=sys.stderr)
        return EXIT_PLAN
    return _execute(plan, params, args)


def cmd_compare(args) -> int:
    plan = _load_plan(args.plan)
    if plan is None:
        return EXIT_PLAN
    modes = {(r.key, r.mode) for r in plan.rows}
    keys = {r.key for r in plan.rows}
    if any((k, m) not in modes for k in keys for m in harness.Mode):
        print("plan validation failed: compare needs matched CPFA and MPFA rows", file=sys.stderr)
        return EXIT_PLAN
    return _execute(plan, None, args)


def cmd_stats(args) -> int:
    src = Path(args.input)
    results = harness.parse_results_csv((src / "results.csv").read_text())
    report = harness.write_outputs(args.out or src, results, include_results=False)
    _print_report(report)
    return 0


def cmd_simulate(args) -> int:
    params = _read_params(args.params) or DEFAULT_PARAMS
    cfg = WorldConfig(mode=args.mode, n_robots=args.robots, n_targets=args.targets,
                      sim_minutes=args.minutes, seed=args.seed)
    trace = open(args.trace, "w") if args.trace else None
    try:
        if trace:
            trace.write("tick,robot,x,y,fsm\n")
        m = World(cfg, params, check=True, trace=trace).run()
    except SimulationFault as exc:
        print(f"simulation fault: {exc}", file=sys.stderr)
        return EXIT_FAULTS
    finally:
        if trace:
            trace.close()
    print(f"targets_collected={m.targets_collected} collision_s={m.total_collision_s:.1f} "
          f"travel_s={m.total_travel_s:.1f} search_s={m.total_search_s:.1f}")
    return 0


def _print_report(report) -> None:
    for c in report.rows:
        n_robots, n_targets, minutes = c.key
        parts = [f"{m}: {mc.change_pct:+.1f}% (p={mc.p:.3g})" for m, mc in c.metrics.items()]
        print(f"robots={n_robots} targets={n_targets} minutes={minutes:g} "
              f"robot-minutes={c.robot_minutes:g} replicates={c.n_replicates} | " + ", ".join(parts))
    for t in report.trends:
        print(f"trend {t.mode.value} {t.metric}: slope={t.slope:.4g} p={t.p:.3g}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmforage", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evolve", help="evolve controller parameters with the GA")
    e.add_argument("--mode", choices=["cpfa", "mpfa"], required=True)
    e.add_argument("--config", help="[evolution]/[world] key-value file")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", required=True)
    e.add_argument("--workers", type=int, default=1)
    e.set_defaults(func=cmd_evolve)

    r = sub.add_parser("run", help="run a plan with given parameters")
    r.add_argument("--plan", required=True, help="plan file or builtin name (scalability, adaptation)")
    r.add_argument("--params", help="ParamSet key-value file; defaults to the plan's or built-in genome")
    r.add_argument("--replicates", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", help="run a plan with matched CPFA/MPFA rows and compare them")
    c.add_argument("--plan", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--workers", type=int, default=1)
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("stats", help="recompute summaries from a results.csv directory")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    m = sub.add_parser("simulate", help="run one world, optionally writing a per-tick trace")
    m.add_argument("--mode", choices=["cpfa", "mpfa"], default="mpfa")
    m.add_argument("--robots", type=int, default=16)
    m.add_argument("--targets", type=int, default=256)
    m.add_argument("--minutes", type=float, default=20.0)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--params")
    m.add_argument("--trace")
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    log.debug("kernel backend: %s", BACKEND)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
