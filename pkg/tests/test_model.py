import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swarmforage.model import (
    DEFAULT_PARAMS,
    ParamSet,
    WorldConfig,
    sample_initial_params,
    validate_params,
    wrap_angle,
)


class ZeroRng:
    def random(self, size=None):
        return np.zeros(size) if size is not None else 0.0


def midpoints():
    return ParamSet(0.5, 0.5, math.pi / 2, 0.5, 10.0, 10.0, 0.5)


def test_zero_quantile_gives_range_infima():
    p = sample_initial_params(ZeroRng())
    assert p == ParamSet(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def test_sample_means():
    rng = np.random.default_rng(7)
    samples = [sample_initial_params(rng) for _ in range(100_000)]
    assert abs(np.mean([s.p_search for s in samples]) - 0.5) <= 0.01
    assert abs(np.mean([s.omega for s in samples]) - math.pi / 2) <= 0.02
    assert abs(np.mean([s.lambda_id for s in samples]) - 0.2) <= 0.01
    assert abs(np.mean([s.lambda_pd for s in samples]) - 0.1) <= 0.005
    assert all(not validate_params(s) for s in samples[:1000])


def test_validate_midpoints_ok():
    assert validate_params(midpoints()) == []
    assert validate_params(DEFAULT_PARAMS) == []


@pytest.mark.parametrize("field,value,message", [
    ("p_search", 1.5, "p_search out of [0,1]"),
    ("lambda_sf", 25.0, "lambda_sf out of [0,20]"),
    ("lambda_pd", -0.1, "lambda_pd out of [0,inf)"),
])
def test_validate_reports_violation(field, value, message):
    kw = {n: getattr(midpoints(), n) for n in ParamSet.names()}
    kw[field] = value
    assert validate_params(ParamSet(**kw)) == [message]


@pytest.mark.parametrize("bad", [float("nan"), float("inf")])
def test_validate_rejects_non_finite(bad):
    kw = {n: getattr(midpoints(), n) for n in ParamSet.names()}
    kw["omega"] = bad
    assert validate_params(ParamSet(**kw)) == ["omega is not finite"]


def test_validate_collects_every_violation():
    p = ParamSet(-1, 2, 4, -1, 21, -3, -2)
    assert len(validate_params(p)) == 7


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@given(st.tuples(*[finite] * 7))
def test_text_round_trip_is_bit_exact(values):
    p = ParamSet(*values)
    q = ParamSet.from_text(p.to_text())
    assert [v.hex() for v in p.as_array().tolist()] == [v.hex() for v in q.as_array().tolist()]


def test_text_format_is_name_equals_value():
    lines = DEFAULT_PARAMS.to_text().splitlines()
    assert [ln.split(" = ")[0] for ln in lines] == ParamSet.names()


def test_from_text_missing_field():
    with pytest.raises(ValueError, match="lambda_pd"):
        ParamSet.from_text("\n".join(DEFAULT_PARAMS.to_text().splitlines()[:-1]))


def test_seven_documented_fields():
    # One field per controller parameter, each documented.
    from dataclasses import fields
    fs = fields(ParamSet)
    assert len(fs) == 7
    docs = {f.name: f.metadata["doc"] for f in fs}
    assert "switching from travel to uninformed search" in docs["p_search"]
    assert "giving up search" in docs["p_return"]
    assert "uninformed search variation" in docs["omega"]
    assert "informed search decay" in docs["lambda_id"]
    assert "site fidelity" in docs["lambda_sf"]
    assert "laying pheromone" in docs["lambda_lp"]
    assert "pheromone decay" in docs["lambda_pd"]


def test_world_config_validation():
    with pytest.raises(ValueError, match="arena_side"):
        WorldConfig(arena_side=0)
    with pytest.raises(ValueError, match="n_robots"):
        WorldConfig(n_robots=-1)
    with pytest.raises(ValueError, match="dt"):
        WorldConfig(dt=0)
    with pytest.raises(ValueError, match="collision_radius"):
        WorldConfig(collision_radius=0)


def test_world_config_derived():
    cfg = WorldConfig(sim_minutes=2, dt=0.1)
    assert cfg.n_ticks == 1200
    assert cfg.decision_interval == 10
    assert WorldConfig(dt=0.3).decision_interval == 4
    assert WorldConfig(dt=2.0).decision_interval == 1


def test_world_config_from_mapping():
    cfg = WorldConfig.from_mapping({"mode": "CPFA", "n_robots": "8", "sim_minutes": "7.5"})
    assert cfg.mode.value == "cpfa" and cfg.n_robots == 8 and cfg.sim_minutes == 7.5
    with pytest.raises(ValueError, match="unknown"):
        WorldConfig.from_mapping({"bogus": 1})


@given(st.floats(min_value=-100, max_value=100, allow_nan=False))
def test_wrap_angle_range(theta):
    w = wrap_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)


def test_wrap_angle_boundaries():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
