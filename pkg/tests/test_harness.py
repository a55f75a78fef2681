import math
from dataclasses import replace

import pytest

from swarmforage import harness
from swarmforage.cli import EXIT_FAULTS, EXIT_PLAN, main
from swarmforage.controller import SimulationFault
from swarmforage.harness import (
    ADAPTATION_ROWS,
    SCALABILITY_ROWS,
    Campaign,
    PlanError,
    Replicate,
    Row,
    RowFailure,
    RowResult,
    adaptation_plan,
    compare_metric,
    efficiencies,
    load_plan,
    parse_plan,
    parse_results_csv,
    plan_to_text,
    results_csv,
    run_rows,
    scalability_plan,
    validate_plan,
)
from swarmforage.model import DEFAULT_PARAMS, Mode

SMALL_PLAN = """\
[plan]
campaign = custom
replicates = 3
seed = 11

[row.0]
mode = cpfa, mpfa
n_robots = 4
n_targets = 48
sim_minutes = 1.0

[row.1]
mode = cpfa, mpfa
n_robots = 8
n_targets = 48
sim_minutes = 0.5
"""


def test_table_rows():
    assert [r[0] * r[2] for r in SCALABILITY_ROWS] == [480.0] * 5
    assert [r[0] for r in SCALABILITY_ROWS] == [4, 8, 16, 32, 64]
    assert [r[1] for r in ADAPTATION_ROWS] == [128, 256, 512, 1024, 2048]
    assert Row(Mode.CPFA, 4, 1024, 120.0).robot_minutes == 480.0


def test_builtin_plans_validate():
    for plan in (scalability_plan(), adaptation_plan()):
        assert validate_plan(plan) == []
        assert len(plan.rows) == 10
        assert plan.n_replicates == 100


def test_mutated_scalability_row_rejected():
    plan = scalability_plan()
    plan.rows[3] = replace(plan.rows[3], sim_minutes=16.0)
    errs = validate_plan(plan)
    assert len(errs) == 1 and "480" in errs[0]


def test_adaptation_row_must_use_32_robots():
    plan = adaptation_plan()
    plan.rows[0] = replace(plan.rows[0], n_robots=16)
    assert validate_plan(plan)


def test_plan_text_round_trip():
    plan = parse_plan(SMALL_PLAN)
    assert len(plan.rows) == 4 and plan.seed == 11 and plan.n_replicates == 3
    again = parse_plan(plan_to_text(plan))
    assert again.rows == plan.rows and again.seed == plan.seed


def test_bad_plan_section():
    with pytest.raises(PlanError):
        parse_plan("[plan]\n[row.0]\nmode = cpfa\nn_robots = x\nn_targets = 1\nsim_minutes = 1\n")
    with pytest.raises(PlanError):
        parse_plan("[plan]\ncampaign = nonsense\n")


def test_efficiencies_zero_collected():
    e = efficiencies(Row(Mode.CPFA, 4, 8, 2.0), Replicate(0, 0, 0, 1.0, 2.0, 3.0))
    assert e == {"forage_rate": 0.0, "collision_eff": None, "travel_eff": None, "search_eff": None}
    e = efficiencies(Row(Mode.CPFA, 4, 8, 2.0), Replicate(0, 0, 4, 1.0, 2.0, 3.0))
    assert e["forage_rate"] == 0.5 and e["search_eff"] == 0.75


def test_identical_modes_compare_to_zero():
    reps = [Replicate(i, i, 5 + i, 1.0, 2.0, 3.0) for i in range(4)]
    c = RowResult(Row(Mode.CPFA, 4, 8, 2.0), reps)
    m = RowResult(Row(Mode.MPFA, 4, 8, 2.0), reps)
    mc = compare_metric("forage_rate", c, m)
    assert mc.change_pct == 0.0 and mc.p == 1.0
    flat = compare_metric("collision_eff", c, m)
    assert flat.p == pytest.approx(1.0)


def test_paired_seeds_and_determinism():
    rows = parse_plan(SMALL_PLAN).rows
    a = run_rows(rows, DEFAULT_PARAMS, 3, 11)
    b = run_rows(rows, DEFAULT_PARAMS, 3, 11)
    assert results_csv(a) == results_csv(b)
    cpfa, mpfa = a[0], a[1]
    assert [r.seed for r in cpfa.replicates] == [r.seed for r in mpfa.replicates]


def test_parallel_matches_serial():
    rows = parse_plan(SMALL_PLAN).rows[:2]
    assert results_csv(run_rows(rows, DEFAULT_PARAMS, 3, 2, workers=2)) == results_csv(
        run_rows(rows, DEFAULT_PARAMS, 3, 2))


def test_results_csv_round_trip():
    res = run_rows(parse_plan(SMALL_PLAN).rows[:2], DEFAULT_PARAMS, 2, 0)
    assert results_csv(parse_results_csv(results_csv(res))) == results_csv(res)


def test_fault_fraction(monkeypatch):
    calls = {"n": 0}
    real = harness.run_world

    def flaky(cfg, params):
        calls["n"] += 1
        if calls["n"] == 1:
            raise SimulationFault("boom")
        return real(cfg, params)

    rows = [Row(Mode.CPFA, 2, 16, 0.2)]
    monkeypatch.setattr(harness, "run_world", flaky)
    res = run_rows(rows, DEFAULT_PARAMS, 10, 0)
    assert res[0].n_faults == 1
    calls["n"] = 0
    with pytest.raises(RowFailure):
        run_rows(rows, DEFAULT_PARAMS, 5, 0)


def test_invalid_params_rejected():
    with pytest.raises(PlanError):
        run_rows([Row(Mode.CPFA, 2, 16, 0.2)], replace(DEFAULT_PARAMS, p_search=2.0), 1, 0)


# --- CLI ---------------------------------------------------------------------


@pytest.fixture
def plan_file(tmp_path):
    p = tmp_path / "plan.ini"
    p.write_text(SMALL_PLAN)
    return p


def test_cli_run_then_stats_recomputes(plan_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--plan", str(plan_file), "--out", str(out)]) == 0
    for name in ("results.csv", "summary.csv", "comparison.csv", "regression.csv"):
        assert (out / name).exists()
    again = tmp_path / "again"
    assert main(["stats", "--in", str(out), "--out", str(again)]) == 0
    assert (again / "summary.csv").read_text() == (out / "summary.csv").read_text()
    assert (again / "comparison.csv").read_text() == (out / "comparison.csv").read_text()
    assert "forage_rate" in capsys.readouterr().out


def test_cli_compare_needs_matched_rows(tmp_path):
    p = tmp_path / "plan.ini"
    p.write_text(SMALL_PLAN.replace("mode = cpfa, mpfa", "mode = cpfa", 1))
    assert main(["compare", "--plan", str(p), "--out", str(tmp_path / "o")]) == EXIT_PLAN


def test_cli_rejects_invalid_plan(tmp_path):
    p = tmp_path / "plan.ini"
    p.write_text("[plan]\ncampaign = scalability\nreplicates = 1\n[row.0]\nmode = cpfa\n"
                 "n_robots = 4\nn_targets = 64\nsim_minutes = 100\n")
    assert main(["run", "--plan", str(p), "--out", str(tmp_path / "o")]) == EXIT_PLAN
    assert main(["run", "--plan", str(tmp_path / "missing.ini"), "--out", str(tmp_path / "o")]) == EXIT_PLAN


def test_cli_bad_params_file(plan_file, tmp_path):
    bad = tmp_path / "p.txt"
    bad.write_text(replace(DEFAULT_PARAMS, omega=9.0).to_text())
    assert main(["run", "--plan", str(plan_file), "--params", str(bad),
                 "--out", str(tmp_path / "o")]) == EXIT_PLAN


def test_cli_fault_exit(plan_file, tmp_path, monkeypatch):
    def broken(cfg, params):
        raise SimulationFault("boom")
    monkeypatch.setattr(harness, "run_world", broken)
    assert main(["run", "--plan", str(plan_file), "--out", str(tmp_path / "o")]) == EXIT_FAULTS


def test_cli_simulate_trace(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    assert main(["simulate", "--robots", "3", "--targets", "32", "--minutes", "0.2",
                 "--trace", str(trace)]) == 0
    lines = trace.read_text().splitlines()
    assert lines[0] == "tick,robot,x,y,fsm" and len(lines) == 1 + 3 * 120
    assert "targets_collected=" in capsys.readouterr().out


def test_cli_evolve(tmp_path):
    cfg = tmp_path / "evo.ini"
    cfg.write_text("[evolution]\npopulation_size = 4\nmax_generations = 2\nn_fitness_evals = 1\n"
                   "[world]\nn_robots = 3\nn_targets = 32\nsim_minutes = 0.5\n")
    out = tmp_path / "evo"
    assert main(["evolve", "--mode", "mpfa", "--config", str(cfg), "--out", str(out)]) == 0
    assert len((out / "evolution.csv").read_text().splitlines()) == 3
    from swarmforage.model import ParamSet, validate_params
    assert validate_params(ParamSet.from_text((out / "best_params.txt").read_text())) == []


def test_builtin_plan_names():
    assert load_plan("scalability").campaign == Campaign.SCALABILITY
    assert math.isclose(sum(r.robot_minutes for r in load_plan("scalability").rows), 4800)
