"""Per-robot foraging state machine and the decision formulas it uses.

The controller never touches the world. It reads a ``Percepts`` snapshot,
updates the robot's own state record and returns the actions the world must
apply (pickups, deposits, pheromone waypoints). CPFA and MPFA share this
code unchanged; only the nest set handed in by the world differs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from swarmforage.model import (
    SEARCH_STATES,
    TWO_PI,
    Fsm,
    ParamSet,
    RobotState,
    WorldConfig,
    wrap_angle,
)


class SimulationFault(RuntimeError):
    """Raised when world and robot state disagree; aborts the replicate."""


def poisson_cdf(k: int, lam: float) -> float:
    """P(X <= k) for X ~ Poisson(lam), summed term by term without factorials."""
    if k < 0 or lam < 0 or math.isnan(lam):
        raise ValueError(f"poisson_cdf domain error: k={k}, lambda={lam}")
    if lam == 0.0:
        return 1.0
    if lam > 700.0:
        # exp(-lam) underflows; accumulate in log space instead.
        log_lam = math.log(lam)
        total = 0.0
        for i in range(int(k) + 1):
            total += math.exp(-lam + i * log_lam - math.lgamma(i + 1))
        return min(total, 1.0)
    term = math.exp(-lam)
    total = term
    for i in range(1, int(k) + 1):
        term *= lam / i
        total += term
        if i > lam and term < 1e-17 * total:
            break
    return min(total, 1.0)


def decide_information(k: int, lam: float, u: float) -> bool:
    return poisson_cdf(k, lam) > u


def crw_turn(theta_prev: float, sigma: float, rng) -> float:
    """Next heading of a correlated random walk: N(theta_prev, sigma), wrapped."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return wrap_angle(rng.gauss(theta_prev, sigma))


def informed_sigma(omega: float, lambda_id: float, t: float) -> float:
    """Turning-angle SD of informed search, decaying from 2*pi at arrival towards omega."""
    return omega + (TWO_PI - omega) * math.exp(-lambda_id * t)


def select_waypoint(waypoints, now: float, lambda_pd: float, rng) -> Optional[tuple[float, float]]:
    """Pick a waypoint with probability proportional to its current strength."""
    if not waypoints:
        return None
    weights = [math.exp(-lambda_pd * (now - w.created_at)) for w in waypoints]
    total = sum(weights)
    if total <= 0.0:
        return None
    u = rng.random() * total
    acc = 0.0
    for w, s in zip(waypoints, weights):
        acc += s
        if u < acc:
            return (w.x, w.y)
    last = waypoints[-1]
    return (last.x, last.y)


class Action(NamedTuple):
    kind: str  # "pickup" | "deposit" | "lay_pheromone"
    target: int = -1
    nest: int = -1
    location: Optional[tuple[float, float]] = None


@dataclass
class Percepts:
    nearest_nest: tuple[int, float, float]
    at_nest: bool = False
    # (id, x, y) of sensed available targets, nearest first.
    targets_in_pickup: list = field(default_factory=list)
    k_neighbors: int = 0
    waypoint_offer: Optional[tuple[float, float]] = None
    decision_step: bool = False


def _head_to(state: RobotState, x: float, y: float, step: float, tolerance: float = 0.0) -> bool:
    """Turn towards (x, y) and advance at most ``step``.

    True once the robot is within ``tolerance`` of the point (or lands on it).
    """
    dx = x - state.x
    dy = y - state.y
    dist = math.hypot(dx, dy)
    if dist <= tolerance:
        return True
    if dist <= step:
        state.x = x
        state.y = y
        return True
    state.heading = math.atan2(dy, dx)
    state.x += step * dx / dist
    state.y += step * dy / dist
    return False


def _forward(state: RobotState, step: float) -> None:
    state.x += step * math.cos(state.heading)
    state.y += step * math.sin(state.heading)


def _depart(state: RobotState, step: float, arrival: float, rng) -> None:
    if state.destination is not None:
        state.heading = math.atan2(state.destination[1] - state.y, state.destination[0] - state.x)
    else:
        state.heading = wrap_angle(rng.uniform(-math.pi, math.pi))
    state.fsm = Fsm.TRAVEL
    _travel(state, step, arrival)


def _travel(state: RobotState, step: float, arrival: float) -> bool:
    if state.destination is None:
        _forward(state, step)
        return False
    # Recruited robots crowd a site; searching starts near it rather than on the exact point.
    if _head_to(state, state.destination[0], state.destination[1], step, arrival):
        state.destination = None
        state.fsm = Fsm.SEARCH_INFORMED
        state.informed_timer = 0.0
        return True
    return False


def controller_step(state: RobotState, percepts: Percepts, params: ParamSet,
                    cfg: WorldConfig, rng) -> list[Action]:
    """Advance one robot by one tick, updating ``state`` in place.

    Returns the actions the world applies. Probabilistic search and give-up
    decisions are only taken when ``percepts.decision_step`` is set.
    """
    step = cfg.robot_speed * cfg.dt
    fsm = state.fsm
    actions: list[Action] = []

    if fsm == Fsm.AVOID_COLLISION:
        moved = min(step, state.avoid_remaining)
        _forward(state, moved)
        state.avoid_remaining -= moved
        if state.avoid_remaining <= 1e-12:
            state.avoid_remaining = 0.0
            state.fsm = state.resume_fsm
            state.heading = state.resume_heading
            state.resume_fsm = None
        return actions

    if fsm == Fsm.DEPART_NEST:
        _depart(state, step, cfg.site_arrival_radius, rng)
        return actions

    if fsm == Fsm.TRAVEL:
        if not _travel(state, step, cfg.site_arrival_radius) and state.destination is None and percepts.decision_step:
            if rng.random() < params.p_search:
                state.fsm = Fsm.SEARCH_UNINFORMED
        return actions

    if fsm in SEARCH_STATES:
        if percepts.targets_in_pickup:
            tid, tx, ty = percepts.targets_in_pickup[0]
            state.carrying = tid
            k = percepts.k_neighbors
            site = (tx, ty)
            state.remembered_site = site if decide_information(k, params.lambda_sf, rng.random()) else None
            state.pending_pheromone = site if decide_information(k, params.lambda_lp, rng.random()) else None
            state.fsm = Fsm.RETURN_WITH_TARGET
            _, nx, ny = percepts.nearest_nest
            state.heading = math.atan2(ny - state.y, nx - state.x)
            actions.append(Action("pickup", target=tid))
            return actions
        _forward(state, step)
        if fsm == Fsm.SEARCH_INFORMED:
            state.informed_timer += cfg.dt
        if percepts.decision_step:
            if rng.random() < params.p_return:
                state.fsm = Fsm.RETURN_EMPTY
                _, nx, ny = percepts.nearest_nest
                state.heading = math.atan2(ny - state.y, nx - state.x)
            else:
                sigma = params.omega if fsm == Fsm.SEARCH_UNINFORMED else informed_sigma(
                    params.omega, params.lambda_id, state.informed_timer)
                state.heading = crw_turn(state.heading, sigma, rng)
        return actions

    if fsm in (Fsm.RETURN_WITH_TARGET, Fsm.RETURN_EMPTY):
        nest_id, nx, ny = percepts.nearest_nest
        if not percepts.at_nest:
            _head_to(state, nx, ny, step)
            return actions
        if state.carrying is not None:
            actions.append(Action("deposit", target=state.carrying, nest=nest_id))
            if state.pending_pheromone is not None:
                actions.append(Action("lay_pheromone", nest=nest_id, location=state.pending_pheromone))
            state.carrying = None
        elif fsm == Fsm.RETURN_WITH_TARGET:
            raise SimulationFault(f"robot {state.id} returning with no target")
        state.pending_pheromone = None
        state.current_nest = nest_id
        if state.remembered_site is not None:
            state.destination = state.remembered_site
            state.remembered_site = None
        elif percepts.waypoint_offer is not None:
            state.destination = percepts.waypoint_offer
        else:
            state.destination = None
        state.fsm = Fsm.DEPART_NEST
        _depart(state, step, cfg.site_arrival_radius, rng)
        return actions

    raise SimulationFault(f"robot {state.id} in unknown state {fsm!r}")
