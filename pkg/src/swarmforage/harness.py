"""Replicate sweeps over swarm size and target count, with CSV output and comparisons."""

from __future__ import annotations

import configparser
import csv
import enum
import io
import logging
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from swarmforage.controller import SimulationFault
from swarmforage.model import DEFAULT_PARAMS, Mode, ParamSet, WorldConfig, validate_params
from swarmforage.stats import DegenerateSampleError, loglinear_regression, mean_sd_ci, welch_t_test
from swarmforage.world import derive_seed, run_world

log = logging.getLogger(__name__)

ROBOT_MINUTES = 480.0
ADAPTATION_ROBOTS = 32
MAX_FAULT_FRACTION = 0.10

SCALABILITY_ROWS = [(4, 1024, 120.0), (8, 1024, 60.0), (16, 1024, 30.0), (32, 1024, 15.0), (64, 1024, 7.5)]
ADAPTATION_ROWS = [(32, 128, 5.0), (32, 256, 8.0), (32, 512, 10.0), (32, 1024, 12.0), (32, 2048, 30.0)]

METRICS = ("forage_rate", "collision_eff", "travel_eff", "search_eff")

RESULT_COLUMNS = ["campaign", "mode", "n_robots", "n_targets", "sim_minutes", "replicate", "seed",
                  "targets_collected", "collision_s", "travel_s", "search_s", "fault"]


class Campaign(str, enum.Enum):
    SCALABILITY = "scalability"
    ADAPTATION = "adaptation"
    CUSTOM = "custom"


class PlanError(ValueError):
    """A plan breaks a campaign invariant or cannot be parsed."""


class RowFailure(RuntimeError):
    """More than 10% of a row's replicates faulted."""


@dataclass(frozen=True)
class Row:
    mode: Mode
    n_robots: int
    n_targets: int
    sim_minutes: float

    @property
    def robot_minutes(self) -> float:
        return self.n_robots * self.sim_minutes

    @property
    def key(self) -> tuple:
        return (self.n_robots, self.n_targets, self.sim_minutes)


@dataclass
class ExperimentPlan:
    campaign: Campaign
    rows: list[Row]
    n_replicates: int = 100
    seed: int = 0
    params: Optional[ParamSet] = None
    params_path: Optional[str] = None
    world: dict = field(default_factory=dict)


def _both_modes(rows) -> list[Row]:
    return [Row(m, r, t, mins) for (r, t, mins) in rows for m in (Mode.CPFA, Mode.MPFA)]


def scalability_plan(n_replicates: int = 100, seed: int = 0) -> ExperimentPlan:
    return ExperimentPlan(Campaign.SCALABILITY, _both_modes(SCALABILITY_ROWS), n_replicates, seed)


def adaptation_plan(n_replicates: int = 100, seed: int = 0) -> ExperimentPlan:
    return ExperimentPlan(Campaign.ADAPTATION, _both_modes(ADAPTATION_ROWS), n_replicates, seed)


BUILTIN_PLANS = {"scalability": scalability_plan, "adaptation": adaptation_plan}


def validate_plan(plan: ExperimentPlan) -> list[str]:
    errors = []
    if plan.n_replicates < 1:
        errors.append("n_replicates must be >= 1")
    if not plan.rows:
        errors.append("plan has no rows")
    for r in plan.rows:
        if r.n_robots < 1 or r.n_targets < 0 or r.sim_minutes <= 0:
            errors.append(f"row {r}: invalid sizes")
        if plan.campaign == Campaign.SCALABILITY and r.robot_minutes != ROBOT_MINUTES:
            errors.append(f"row {r}: {r.robot_minutes:g} robot-minutes, scalability requires {ROBOT_MINUTES:g}")
        if plan.campaign == Campaign.ADAPTATION and r.n_robots != ADAPTATION_ROBOTS:
            errors.append(f"row {r}: adaptation rows use {ADAPTATION_ROBOTS} robots")
    if plan.params is not None:
        errors.extend(validate_params(plan.params))
    return errors


def read_sections(text: str) -> dict[str, dict[str, str]]:
    """Parse the bracketed key-value format into ``{section: {key: value}}``."""
    parser = configparser.ConfigParser()
    parser.read_string(text)
    return {s: dict(parser[s]) for s in parser.sections()}


def parse_plan(text: str, base_dir: Optional[Path] = None) -> ExperimentPlan:
    try:
        sections = read_sections(text)
    except configparser.Error as exc:
        raise PlanError(str(exc)) from exc
    head = sections.get("plan", {})
    try:
        campaign = Campaign(head.get("campaign", "custom").strip().lower())
    except ValueError as exc:
        raise PlanError(f"unknown campaign {head.get('campaign')!r}") from exc
    n_rep = int(head.get("replicates", 100))
    seed = int(head.get("seed", 0))
    if "rows" in head and head["rows"].strip().lower() in BUILTIN_PLANS:
        rows = BUILTIN_PLANS[head["rows"].strip().lower()]().rows
    else:
        rows = []
    for name, sec in sections.items():
        if not name.startswith("row"):
            continue
        try:
            modes = [Mode(m.strip().lower()) for m in sec.get("mode", "cpfa, mpfa").split(",")]
            for m in modes:
                rows.append(Row(m, int(sec["n_robots"]), int(sec["n_targets"]), float(sec["sim_minutes"])))
        except (KeyError, ValueError) as exc:
            raise PlanError(f"bad row section [{name}]: {exc}") from exc
    params = None
    params_path = head.get("params")
    if "params" in sections:
        params = ParamSet.from_text("[params]\n" + "".join(f"{k} = {v}\n" for k, v in sections["params"].items()))
    elif params_path:
        p = Path(params_path)
        if base_dir is not None and not p.is_absolute():
            p = base_dir / p
        params = ParamSet.from_text(p.read_text())
    return ExperimentPlan(campaign, rows, n_rep, seed, params, params_path, sections.get("world", {}))


def load_plan(name_or_path: str) -> ExperimentPlan:
    """A builtin plan name or a plan file path."""
    if name_or_path.lower() in BUILTIN_PLANS:
        return BUILTIN_PLANS[name_or_path.lower()]()
    path = Path(name_or_path)
    return parse_plan(path.read_text(), path.parent)


def plan_to_text(plan: ExperimentPlan) -> str:
    lines = ["[plan]", f"campaign = {plan.campaign.value}", f"replicates = {plan.n_replicates}",
             f"seed = {plan.seed}", ""]
    if plan.world:
        lines += ["[world]"] + [f"{k} = {v}" for k, v in plan.world.items()] + [""]
    if plan.params is not None:
        lines += ["[params]", plan.params.to_text()]
    for i, r in enumerate(plan.rows):
        lines += [f"[row.{i}]", f"mode = {r.mode.value}", f"n_robots = {r.n_robots}",
                  f"n_targets = {r.n_targets}", f"sim_minutes = {r.sim_minutes!r}", ""]
    return "\n".join(lines)


@dataclass
class Replicate:
    replicate: int
    seed: int
    targets_collected: int = 0
    collision_s: float = 0.0
    travel_s: float = 0.0
    search_s: float = 0.0
    fault: str = ""


def replicate_seed(seed: int, row: Row, replicate: int) -> int:
    # Mode is left out so CPFA and MPFA face the same placements (paired design).
    return derive_seed(seed, row.n_robots, row.n_targets, int(round(row.sim_minutes * 1000)), replicate)


def efficiencies(row: Row, rep: Replicate) -> dict[str, Optional[float]]:
    """Per-replicate efficiencies; per-target ones are None when nothing was collected."""
    n = rep.targets_collected
    out: dict[str, Optional[float]] = {"forage_rate": n / (row.n_robots * row.sim_minutes)}
    for name, total in (("collision_eff", rep.collision_s), ("travel_eff", rep.travel_s),
                        ("search_eff", rep.search_s)):
        out[name] = total / n if n > 0 else None
    return out


@dataclass
class MetricSummary:
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    n: int


@dataclass
class RowResult:
    row: Row
    replicates: list[Replicate]
    campaign: Campaign = Campaign.CUSTOM

    @property
    def ok(self) -> list[Replicate]:
        return [r for r in self.replicates if not r.fault]

    @property
    def n_faults(self) -> int:
        return len(self.replicates) - len(self.ok)

    @property
    def n_missing(self) -> int:
        return sum(1 for r in self.ok if r.targets_collected == 0)

    def values(self, metric: str) -> list[float]:
        vals = (efficiencies(self.row, r)[metric] for r in self.ok)
        return [v for v in vals if v is not None]

    def summary(self, metric: str) -> MetricSummary:
        vals = self.values(metric)
        return MetricSummary(*mean_sd_ci(vals), len(vals))


def _run_replicate(args) -> Replicate:
    world, params, rep = args
    try:
        m = run_world(world, params)
    except SimulationFault as exc:
        return Replicate(rep, world.seed, fault=str(exc) or "fault")
    return Replicate(rep, world.seed, m.targets_collected, m.total_collision_s, m.total_travel_s,
                     m.total_search_s)


def _world_for(row: Row, world_overrides: dict, seed: int) -> WorldConfig:
    kw = dict(world_overrides)
    kw.update(mode=row.mode.value, n_robots=row.n_robots, n_targets=row.n_targets,
              sim_minutes=row.sim_minutes, seed=seed)
    return WorldConfig.from_mapping(kw)


def run_rows(rows: Sequence[Row], params: ParamSet, n_replicates: int, seed: int,
             world: Optional[dict] = None, workers: int = 1,
             campaign: Campaign = Campaign.CUSTOM) -> list[RowResult]:
    """Run every replicate of every row; assembly is keyed by (row, replicate)."""
    bad = validate_params(params)
    if bad:
        raise PlanError("invalid parameters: " + "; ".join(bad))
    world = world or {}
    jobs = [(ri, (_world_for(row, world, replicate_seed(seed, row, k)), params, k))
            for ri, row in enumerate(rows) for k in range(n_replicates)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(workers) as pool:
            outs = list(pool.map(_run_replicate, [j for _, j in jobs], chunksize=max(1, len(jobs) // (8 * workers))))
    else:
        outs = [_run_replicate(j) for _, j in jobs]
    by_row: dict[int, list[Replicate]] = defaultdict(list)
    for (ri, _), rep in zip(jobs, outs):
        by_row[ri].append(rep)
    results = []
    for ri, row in enumerate(rows):
        reps = sorted(by_row[ri], key=lambda r: r.replicate)
        result = RowResult(row, reps, campaign)
        if result.n_faults > MAX_FAULT_FRACTION * len(reps):
            raise RowFailure(f"{result.n_faults}/{len(reps)} replicates faulted in row {row}")
        if result.n_faults:
            log.warning("%d replicate faults in row %s", result.n_faults, row)
        results.append(result)
    return results


def run_row(row: Row, params: ParamSet, n_replicates: int, seed: int, world: Optional[dict] = None,
            workers: int = 1) -> RowResult:
    return run_rows([row], params, n_replicates, seed, world, workers)[0]


def run_plan(plan: ExperimentPlan, params: Optional[ParamSet] = None, workers: int = 1) -> list[RowResult]:
    errors = validate_plan(plan)
    if errors:
        raise PlanError("; ".join(errors))
    params = params or plan.params or DEFAULT_PARAMS
    return run_rows(plan.rows, params, plan.n_replicates, plan.seed, plan.world, workers, plan.campaign)


# --- comparisons ------------------------------------------------------------


@dataclass
class MetricComparison:
    metric: str
    cpfa_mean: float
    mpfa_mean: float
    change_pct: float
    t: float
    p: float


@dataclass
class RowComparison:
    key: tuple
    robot_minutes: float
    n_replicates: int
    metrics: dict[str, MetricComparison]


@dataclass
class TrendResult:
    mode: Mode
    metric: str
    slope: float
    intercept: float
    r: float
    p: float


@dataclass
class ComparisonReport:
    rows: list[RowComparison]
    trends: list[TrendResult]


def compare_metric(metric: str, cpfa: RowResult, mpfa: RowResult) -> MetricComparison:
    xs, ys = mpfa.values(metric), cpfa.values(metric)
    cm = math.fsum(ys) / len(ys) if ys else math.nan
    mm = math.fsum(xs) / len(xs) if xs else math.nan
    change = (mm - cm) / cm * 100.0 if cm and not math.isnan(cm) else math.nan
    try:
        t, _, p = welch_t_test(xs, ys)
    except DegenerateSampleError:
        # Identical constant samples carry no evidence of a difference.
        t, p = (0.0, 1.0) if xs and ys and mm == cm else (math.nan, math.nan)
    return MetricComparison(metric, cm, mm, change, t, p)


def _trend_levels(results: Sequence[RowResult], campaign: Campaign) -> str:
    if campaign == Campaign.SCALABILITY:
        return "n_robots"
    if campaign == Campaign.ADAPTATION:
        return "n_targets"
    robots = {r.row.n_robots for r in results}
    return "n_robots" if len(robots) > 1 else "n_targets"


def compare_modes(results: Sequence[RowResult], campaign: Campaign = Campaign.CUSTOM) -> ComparisonReport:
    """MPFA against CPFA per matched row, plus log2 trends per mode."""
    by_key: dict[tuple, dict[Mode, RowResult]] = defaultdict(dict)
    for r in results:
        by_key[r.row.key][r.row.mode] = r
    rows = []
    for key, pair in by_key.items():
        if Mode.CPFA in pair and Mode.MPFA in pair:
            c, m = pair[Mode.CPFA], pair[Mode.MPFA]
            rows.append(RowComparison(key, c.row.robot_minutes, len(c.replicates),
                                      {name: compare_metric(name, c, m) for name in METRICS}))
    trends = []
    level_attr = _trend_levels(results, campaign)
    for mode in (Mode.CPFA, Mode.MPFA):
        mode_rows = [r for r in results if r.row.mode == mode]
        if len({getattr(r.row, level_attr) for r in mode_rows}) < 2 or len(mode_rows) < 3:
            continue
        for name in METRICS:
            pts = [(getattr(r.row, level_attr), r.summary(name).mean) for r in mode_rows]
            pts = [(lv, v) for lv, v in pts if not math.isnan(v)]
            if len(pts) < 3 or len({lv for lv, _ in pts}) < 2:
                continue
            reg = loglinear_regression([lv for lv, _ in pts], [v for _, v in pts])
            trends.append(TrendResult(mode, name, *reg))
    return ComparisonReport(rows, trends)


# --- CSV ----------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def results_csv(results: Iterable[RowResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for res in results:
        r = res.row
        for rep in res.replicates:
            w.writerow([res.campaign.value, r.mode.value, r.n_robots, r.n_targets, repr(r.sim_minutes),
                        rep.replicate, rep.seed, rep.targets_collected, repr(rep.collision_s),
                        repr(rep.travel_s), repr(rep.search_s), rep.fault])
    return buf.getvalue()


def parse_results_csv(text: str) -> list[RowResult]:
    rows: dict[tuple, RowResult] = {}
    for rec in csv.DictReader(io.StringIO(text)):
        row = Row(Mode(rec["mode"]), int(rec["n_robots"]), int(rec["n_targets"]), float(rec["sim_minutes"]))
        campaign = Campaign(rec["campaign"])
        key = (campaign, row)
        if key not in rows:
            rows[key] = RowResult(row, [], campaign)
        fault = rec.get("fault", "") or ""
        rows[key].replicates.append(Replicate(
            int(rec["replicate"]), int(rec["seed"]), int(rec["targets_collected"] or 0),
            float(rec["collision_s"] or 0.0), float(rec["travel_s"] or 0.0), float(rec["search_s"] or 0.0),
            fault))
    for res in rows.values():
        res.replicates.sort(key=lambda r: r.replicate)
    return list(rows.values())


def summary_csv(results: Sequence[RowResult], report: ComparisonReport) -> str:
    """Row aggregates; MPFA rows also carry the change and Welch p against matched CPFA rows."""
    cmp_by_key = {c.key: c for c in report.rows}
    header = ["campaign", "mode", "n_robots", "n_targets", "sim_minutes", "robot_minutes",
              "n_replicates", "n_faults", "n_missing"]
    for m in METRICS:
        header += [f"{m}_mean", f"{m}_sd", f"{m}_ci_low", f"{m}_ci_high"]
    for m in METRICS:
        header += [f"{m}_change_pct", f"{m}_welch_t", f"{m}_welch_p"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for res in results:
        r = res.row
        line = [res.campaign.value, r.mode.value, r.n_robots, r.n_targets, repr(r.sim_minutes),
                repr(r.robot_minutes), len(res.replicates), res.n_faults, res.n_missing]
        for m in METRICS:
            s = res.summary(m)
            line += [_fmt(s.mean), _fmt(s.sd), _fmt(s.ci_low), _fmt(s.ci_high)]
        comp = cmp_by_key.get(r.key) if r.mode == Mode.MPFA else None
        for m in METRICS:
            if comp is None:
                line += ["", "", ""]
            else:
                mc = comp.metrics[m]
                line += [_fmt(mc.change_pct), _fmt(mc.t), _fmt(mc.p)]
        w.writerow(line)
    return buf.getvalue()


def comparison_csv(report: ComparisonReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n_robots", "n_targets", "sim_minutes", "robot_minutes", "n_replicates", "metric",
                "cpfa_mean", "mpfa_mean", "change_pct", "welch_t", "welch_p"])
    for c in report.rows:
        for m in METRICS:
            mc = c.metrics[m]
            w.writerow([c.key[0], c.key[1], repr(c.key[2]), repr(c.robot_minutes), c.n_replicates, m,
                        _fmt(mc.cpfa_mean), _fmt(mc.mpfa_mean), _fmt(mc.change_pct), _fmt(mc.t), _fmt(mc.p)])
    return buf.getvalue()


def regression_csv(report: ComparisonReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "metric", "slope", "intercept", "r", "p"])
    for t in report.trends:
        w.writerow([t.mode.value, t.metric, _fmt(t.slope), _fmt(t.intercept), _fmt(t.r), _fmt(t.p)])
    return buf.getvalue()


def campaign_of(results: Sequence[RowResult]) -> Campaign:
    kinds = {r.campaign for r in results}
    return kinds.pop() if len(kinds) == 1 else Campaign.CUSTOM


def write_outputs(out_dir, results: Sequence[RowResult], campaign: Optional[Campaign] = None,
                  include_results: bool = True) -> ComparisonReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = compare_modes(results, campaign or campaign_of(results))
    if include_results:
        (out / "results.csv").write_text(results_csv(results))
    (out / "summary.csv").write_text(summary_csv(results, report))
    (out / "comparison.csv").write_text(comparison_csv(report))
    (out / "regression.csv").write_text(regression_csv(report))
    return report


def default_workers() -> int:
    return os.cpu_count() or 1


__all__ = [
    "ADAPTATION_ROWS",
    "Campaign",
    "ExperimentPlan",
    "PlanError",
    "Row",
    "RowFailure",
    "RowResult",
    "SCALABILITY_ROWS",
    "adaptation_plan",
    "compare_modes",
    "load_plan",
    "parse_plan",
    "run_plan",
    "run_row",
    "scalability_plan",
    "validate_plan",
    "write_outputs",
]
