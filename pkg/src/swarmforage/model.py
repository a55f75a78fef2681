"""Shared domain types: controller parameters, world configuration, robot and nest state."""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

TWO_PI = 2.0 * math.pi


class Mode(str, enum.Enum):
    CPFA = "cpfa"
    MPFA = "mpfa"


class Fsm(enum.IntEnum):
    DEPART_NEST = 0
    TRAVEL = 1
    SEARCH_UNINFORMED = 2
    SEARCH_INFORMED = 3
    RETURN_WITH_TARGET = 4
    RETURN_EMPTY = 5
    AVOID_COLLISION = 6


TRAVEL_STATES = frozenset(
    {Fsm.DEPART_NEST, Fsm.TRAVEL, Fsm.RETURN_WITH_TARGET, Fsm.RETURN_EMPTY}
)
SEARCH_STATES = frozenset({Fsm.SEARCH_UNINFORMED, Fsm.SEARCH_INFORMED})


# name -> (lower, upper); upper None means unbounded above.
PARAM_RANGES: dict[str, tuple[float, Optional[float]]] = {
    "p_search": (0.0, 1.0),
    "p_return": (0.0, 1.0),
    "omega": (0.0, math.pi),
    "lambda_id": (0.0, None),
    "lambda_sf": (0.0, 20.0),
    "lambda_lp": (0.0, 20.0),
    "lambda_pd": (0.0, None),
}

# Working range used to normalise unbounded genes for mutation and diversity.
GENE_SPAN: dict[str, tuple[float, float]] = {
    "p_search": (0.0, 1.0),
    "p_return": (0.0, 1.0),
    "omega": (0.0, math.pi),
    "lambda_id": (0.0, 1.0),
    "lambda_sf": (0.0, 20.0),
    "lambda_lp": (0.0, 20.0),
    "lambda_pd": (0.0, 1.0),
}


@dataclass(frozen=True)
class ParamSet:
    """The seven evolvable controller parameters shared by every robot in a swarm."""

    p_search: float = field(metadata={"doc": "probability of switching from travel to uninformed search"})
    p_return: float = field(metadata={"doc": "probability of giving up search and returning to a nest"})
    omega: float = field(
        metadata={"doc": "uninformed search variation; also the asymptote of informed search decay"}
    )
    lambda_id: float = field(metadata={"doc": "rate of informed search decay (1/s)"})
    lambda_sf: float = field(metadata={"doc": "rate of site fidelity (Poisson parameter)"})
    lambda_lp: float = field(metadata={"doc": "rate of laying pheromone (Poisson parameter)"})
    lambda_pd: float = field(metadata={"doc": "rate of pheromone decay (1/s)"})

    @classmethod
    def names(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in self.names()], dtype=float)

    @classmethod
    def from_array(cls, values) -> "ParamSet":
        return cls(*(float(v) for v in values))

    def to_text(self) -> str:
        # repr() gives the shortest string that round-trips the float exactly.
        return "".join(f"{n} = {getattr(self, n)!r}\n" for n in self.names())

    @classmethod
    def from_text(cls, text: str) -> "ParamSet":
        parser = configparser.ConfigParser()
        if not text.lstrip().startswith("["):
            text = "[params]\n" + text
        parser.read_string(text)
        section = parser["params"] if parser.has_section("params") else parser[parser.sections()[0]]
        missing = [n for n in cls.names() if n not in section]
        if missing:
            raise ValueError(f"missing parameters: {', '.join(missing)}")
        return cls(**{n: float(section[n]) for n in cls.names()})


def validate_params(p: ParamSet) -> list[str]:
    """Return every violated range constraint; an empty list means ``p`` is valid."""
    violations = []
    for name, (lo, hi) in PARAM_RANGES.items():
        v = getattr(p, name)
        if not math.isfinite(v):
            violations.append(f"{name} is not finite")
        elif hi is None and v < lo:
            violations.append(f"{name} out of [{lo:g},inf)")
        elif hi is not None and not lo <= v <= hi:
            hi_s = "pi" if hi == math.pi else f"{hi:g}"
            violations.append(f"{name} out of [{lo:g},{hi_s}]")
    return violations


def sample_initial_params(rng: np.random.Generator) -> ParamSet:
    """Draw a random genome from the initialisation distributions.

    ``lambda_id`` and ``lambda_pd`` are exponential with rates 5 and 10.
    Every draw is made by inverse transform of one ``rng.random()`` so a
    generator returning 0 yields every range infimum.
    """
    u = rng.random(7)
    p = ParamSet(
        p_search=u[0],
        p_return=u[1],
        omega=math.pi * u[2],
        lambda_id=-math.log1p(-u[3]) / 5.0,
        lambda_sf=20.0 * u[4],
        lambda_lp=20.0 * u[5],
        lambda_pd=-math.log1p(-u[6]) / 10.0,
    )
    return clamp_params(p)


def clamp_params(p: ParamSet) -> ParamSet:
    kw = {}
    for name, (lo, hi) in PARAM_RANGES.items():
        v = float(getattr(p, name))
        v = max(lo, v)
        if hi is not None:
            v = min(hi, v)
        kw[name] = v
    return ParamSet(**kw)


# A hand-tuned genome used when no evolved parameters are supplied.
DEFAULT_PARAMS = ParamSet(
    p_search=0.05,
    p_return=0.01,
    omega=0.3,
    lambda_id=0.1,
    lambda_sf=4.0,
    lambda_lp=6.0,
    lambda_pd=0.01,
)


@dataclass(frozen=True)
class WorldConfig:
    mode: Mode = Mode.MPFA
    arena_side: float = 15.0
    n_robots: int = 16
    n_targets: int = 256
    sim_minutes: float = 20.0
    dt: float = 0.1
    robot_speed: float = 0.16
    collision_radius: float = 0.25
    avoidance_step: float = 0.08
    target_pickup_radius: float = 0.05
    target_detect_radius: float = 0.1
    neighborhood_radius: float = 0.3
    nest_radius: float = 0.25
    site_arrival_radius: float = 0.5
    prune_threshold: float = 0.001
    distribution: str = "partially_clustered"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        errors = []
        if not self.arena_side > 0:
            errors.append("arena_side must be > 0")
        if self.n_robots < 0:
            errors.append("n_robots must be >= 0")
        if self.n_targets < 0:
            errors.append("n_targets must be >= 0")
        if not self.dt > 0:
            errors.append("dt must be > 0")
        if self.sim_minutes < 0:
            errors.append("sim_minutes must be >= 0")
        for name in ("collision_radius", "avoidance_step", "target_pickup_radius",
                     "target_detect_radius", "neighborhood_radius", "nest_radius", "site_arrival_radius", "robot_speed"):
            if not getattr(self, name) > 0:
                errors.append(f"{name} must be > 0")
        if self.distribution not in ("partially_clustered", "uniform"):
            errors.append(f"unknown distribution {self.distribution!r}")
        if errors:
            raise ValueError("; ".join(errors))

    @property
    def n_ticks(self) -> int:
        return int(round(self.sim_minutes * 60.0 / self.dt))

    @property
    def decision_interval(self) -> int:
        """Ticks between probabilistic decisions (once per simulated second)."""
        return max(1, math.ceil(1.0 / self.dt - 1e-9))

    def with_(self, **kw) -> "WorldConfig":
        return replace(self, **kw)

    @classmethod
    def from_mapping(cls, mapping) -> "WorldConfig":
        known = {f.name: f for f in fields(cls)}
        kw = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ValueError(f"unknown world option {key!r}")
            default = getattr(cls, key)
            if key in ("mode", "distribution"):
                kw[key] = str(raw).strip().lower()
            elif isinstance(default, int) and not isinstance(default, bool) and key != "sim_minutes":
                kw[key] = int(raw)
            else:
                kw[key] = float(raw)
        return cls(**kw)


@dataclass
class PheromoneWaypoint:
    x: float
    y: float
    created_at: float

    def strength(self, now: float, lambda_pd: float) -> float:
        return math.exp(-lambda_pd * (now - self.created_at))


@dataclass
class Nest:
    id: int
    x: float
    y: float
    waypoints: list[PheromoneWaypoint] = field(default_factory=list)
    collected: int = 0


@dataclass
class RobotState:
    id: int
    x: float
    y: float
    heading: float
    fsm: Fsm = Fsm.DEPART_NEST
    home_nest: int = 0
    current_nest: int = 0
    carrying: Optional[int] = None
    informed_timer: float = 0.0
    remembered_site: Optional[tuple[float, float]] = None
    # Destination of an informed trip (site fidelity or recruited waypoint).
    destination: Optional[tuple[float, float]] = None
    # Site to advertise as a pheromone waypoint at the next deposit.
    pending_pheromone: Optional[tuple[float, float]] = None
    time_traveling: float = 0.0
    time_searching: float = 0.0
    time_avoiding: float = 0.0
    avoid_remaining: float = 0.0
    resume_fsm: Optional[Fsm] = None
    resume_heading: float = 0.0
    collisions: int = 0
    collected: int = 0


@dataclass
class RobotMetrics:
    targets_collected: int = 0
    collision_s: float = 0.0
    travel_s: float = 0.0
    search_s: float = 0.0


@dataclass
class Metrics:
    targets_collected: int = 0
    total_collision_s: float = 0.0
    total_travel_s: float = 0.0
    total_search_s: float = 0.0
    per_robot: list[RobotMetrics] = field(default_factory=list)


def wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    w = math.fmod(theta, TWO_PI)
    if w > math.pi:
        w -= TWO_PI
    elif w <= -math.pi:
        w += TWO_PI
    return w
