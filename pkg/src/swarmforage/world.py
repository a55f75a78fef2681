"""The simulated arena: ticks robots, resolves pickups, deposits and collisions."""

from __future__ import annotations

import math
import random
from typing import Optional, TextIO

import numpy as np

from swarmforage import kernels
from swarmforage.controller import Percepts, SimulationFault, controller_step, select_waypoint
from swarmforage.model import (
    SEARCH_STATES,
    TRAVEL_STATES,
    Fsm,
    Metrics,
    Mode,
    Nest,
    ParamSet,
    PheromoneWaypoint,
    RobotMetrics,
    RobotState,
    WorldConfig,
    wrap_angle,
)
from swarmforage.targets import TargetField, partially_clustered, uniform_random

SPAWN_RADIUS = 1.0

# Stream tags for seed derivation.
_TARGETS, _WORLD, _ROBOT = 1, 2, 3


def derive_seed(*keys: int) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    ss = np.random.SeedSequence(entropy=int(keys[0]), spawn_key=tuple(int(k) for k in keys[1:]))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def nest_positions(mode, arena_side: float) -> list[tuple[float, float]]:
    if Mode(mode) == Mode.CPFA:
        return [(0.0, 0.0)]
    q = arena_side / 4.0
    return [(q, q), (-q, q), (-q, -q), (q, -q)]


def closest_nest(pos, nests) -> int:
    """Index of the nest nearest ``pos``; lowest index wins ties."""
    if not nests:
        raise ValueError("no nests")
    x, y = pos
    best, best_d2 = 0, math.inf
    for i, n in enumerate(nests):
        nx, ny = (n.x, n.y) if isinstance(n, Nest) else n
        d2 = (nx - x) ** 2 + (ny - y) ** 2
        if d2 < best_d2:
            best, best_d2 = i, d2
    return best


def detect_collisions(robots, collision_radius: float, half_side: float):
    xs = np.fromiter((r.x for r in robots), dtype=np.float64, count=len(robots))
    ys = np.fromiter((r.y for r in robots), dtype=np.float64, count=len(robots))
    return kernels.collision_pairs(xs, ys, collision_radius, half_side)


def resolve_collision(robot: RobotState, other: RobotState, avoidance_step: float) -> RobotState:
    """Start an avoidance manoeuvre: turn away from ``other`` by 90 degrees."""
    if robot.fsm == Fsm.AVOID_COLLISION:
        return robot
    cross = math.cos(robot.heading) * (other.y - robot.y) - math.sin(robot.heading) * (other.x - robot.x)
    # Other on the right or dead ahead: turn left. The tolerance absorbs sin(pi) != 0.
    turn = -math.pi / 2 if cross > 1e-9 else math.pi / 2
    robot.resume_fsm = robot.fsm
    robot.resume_heading = robot.heading
    robot.heading = wrap_angle(robot.heading + turn)
    robot.fsm = Fsm.AVOID_COLLISION
    robot.avoid_remaining = avoidance_step
    robot.collisions += 1
    return robot


def prune_cutoff_age(lambda_pd: float, threshold: float) -> float:
    """Age beyond which a waypoint's strength falls below ``threshold``."""
    if lambda_pd <= 0:
        return math.inf
    return math.log(1.0 / threshold) / lambda_pd


def decay_and_prune(nests, clock: float, lambda_pd: float, threshold: float = 0.001):
    """Drop waypoints whose strength has decayed to ``threshold`` or below.

    Strength itself is never stored; it is computed from age when read.
    """
    cutoff = prune_cutoff_age(lambda_pd, threshold)
    for nest in nests:
        if nest.waypoints:
            nest.waypoints = [w for w in nest.waypoints if clock - w.created_at < cutoff]
    return nests


class World:
    def __init__(self, cfg: WorldConfig, params: ParamSet, targets: Optional[TargetField] = None,
                 check: bool = False, trace: Optional[TextIO] = None):
        self.cfg = cfg
        self.params = params
        self.half = cfg.arena_side / 2.0
        self.check = check
        self.trace = trace
        self.tick = 0
        self.nests = [Nest(i, x, y) for i, (x, y) in enumerate(nest_positions(cfg.mode, cfg.arena_side))]

        if targets is None:
            trng = np.random.default_rng(derive_seed(cfg.seed, _TARGETS))
            if cfg.distribution == "uniform":
                targets = uniform_random(cfg.n_targets, cfg.arena_side, trng)
            elif cfg.n_targets == 0:
                targets = TargetField(np.zeros(0), np.zeros(0))
            else:
                # Clusters avoid both layouts' nests so CPFA and MPFA share a placement per seed.
                avoid = nest_positions(Mode.CPFA, cfg.arena_side) + nest_positions(Mode.MPFA, cfg.arena_side)
                targets = partially_clustered(cfg.n_targets, cfg.arena_side, trng, nests=avoid)
        self.targets = targets
        cell = max(cfg.neighborhood_radius, cfg.target_detect_radius)
        self.grid = kernels.TargetGrid(targets.xs, targets.ys, cell, self.half)
        self.carried = 0

        self.rng = random.Random(derive_seed(cfg.seed, _WORLD))
        self.robots: list[RobotState] = []
        self.robot_rngs: list[random.Random] = []
        n_nests = len(self.nests)
        for i in range(cfg.n_robots):
            rrng = random.Random(derive_seed(cfg.seed, _ROBOT, i))
            home = i % n_nests
            nest = self.nests[home]
            rad = SPAWN_RADIUS * math.sqrt(rrng.random())
            ang = rrng.uniform(-math.pi, math.pi)
            x = min(max(nest.x + rad * math.cos(ang), -self.half), self.half)
            y = min(max(nest.y + rad * math.sin(ang), -self.half), self.half)
            self.robots.append(RobotState(i, x, y, wrap_angle(rrng.uniform(-math.pi, math.pi)),
                                          home_nest=home, current_nest=home))
            self.robot_rngs.append(rrng)

    @property
    def clock(self) -> float:
        return self.tick * self.cfg.dt

    @property
    def deposited(self) -> int:
        return sum(n.collected for n in self.nests)

    def check_conservation(self) -> None:
        total = self.grid.n_available + self.carried + self.deposited
        if total != self.targets.n:
            raise SimulationFault(
                f"target conservation violated at tick {self.tick}: "
                f"{self.grid.n_available} available + {self.carried} carried + "
                f"{self.deposited} deposited != {self.targets.n}")

    def _nearest(self, x, y):
        nests = self.nests
        if len(nests) == 1:
            n = nests[0]
            return (0, n.x, n.y)
        best = None
        best_d2 = math.inf
        for n in nests:
            d2 = (n.x - x) * (n.x - x) + (n.y - y) * (n.y - y)
            if d2 < best_d2:
                best, best_d2 = n, d2
        return (best.id, best.x, best.y)

    def step(self) -> None:
        cfg = self.cfg
        params = self.params
        clock = self.clock
        decay_and_prune(self.nests, clock, params.lambda_pd, cfg.prune_threshold)

        decision = self.tick % cfg.decision_interval == 0
        half = self.half
        grid = self.grid
        arrive_r = cfg.nest_radius
        detect_r = cfg.target_detect_radius
        dt = cfg.dt
        resumed = set()
        for robot, rrng in zip(self.robots, self.robot_rngs):
            fsm = robot.fsm
            nearest = self._nearest(robot.x, robot.y)
            percepts = Percepts(nearest, decision_step=decision)
            if fsm in SEARCH_STATES:
                t = grid.nearest_within(robot.x, robot.y, detect_r)
                if t >= 0:
                    tx, ty = grid.position(t)
                    percepts.targets_in_pickup = [(t, tx, ty)]
                    percepts.k_neighbors = grid.count_within(tx, ty, cfg.neighborhood_radius, t)
            elif fsm == Fsm.RETURN_WITH_TARGET or fsm == Fsm.RETURN_EMPTY:
                if (nearest[1] - robot.x) ** 2 + (nearest[2] - robot.y) ** 2 <= arrive_r * arrive_r:
                    percepts.at_nest = True
                    nest = self.nests[nearest[0]]
                    percepts.waypoint_offer = select_waypoint(nest.waypoints, clock, params.lambda_pd, self.rng)

            for action in controller_step(robot, percepts, params, cfg, rrng):
                self._apply(robot, action, clock)

            if robot.x < -half or robot.x > half or robot.y < -half or robot.y > half:
                self._reflect(robot)

            if fsm == Fsm.AVOID_COLLISION and robot.fsm != Fsm.AVOID_COLLISION:
                resumed.add(robot.id)

            if fsm in TRAVEL_STATES:
                robot.time_traveling += dt
            elif fsm in SEARCH_STATES:
                robot.time_searching += dt
            else:
                robot.time_avoiding += dt

        robots = self.robots
        for i, j in detect_collisions(robots, cfg.collision_radius, half):
            a, b = robots[i], robots[j]
            # A robot that just finished a manoeuvre gets one free tick of progress.
            if i not in resumed:
                resolve_collision(a, b, cfg.avoidance_step)
            if j not in resumed:
                resolve_collision(b, a, cfg.avoidance_step)

        if self.trace is not None:
            for r in robots:
                self.trace.write(f"{self.tick},{r.id},{r.x!r},{r.y!r},{r.fsm.name}\n")
        self.tick += 1
        if self.check:
            self.check_conservation()

    def _reflect(self, robot: RobotState) -> None:
        half = self.half
        c, s = math.cos(robot.heading), math.sin(robot.heading)
        if robot.x < -half or robot.x > half:
            robot.x = min(max(robot.x, -half), half)
            c = -c
        if robot.y < -half or robot.y > half:
            robot.y = min(max(robot.y, -half), half)
            s = -s
        robot.heading = math.atan2(s, c)

    def _apply(self, robot: RobotState, action, clock: float) -> None:
        kind = action.kind
        if kind == "pickup":
            try:
                self.grid.remove(action.target)
            except (KeyError, IndexError) as exc:
                raise SimulationFault(f"robot {robot.id} picked up unavailable target {action.target}") from exc
            self.carried += 1
        elif kind == "deposit":
            if self.carried <= 0:
                raise SimulationFault(f"robot {robot.id} deposited without carrying")
            self.carried -= 1
            self.nests[action.nest].collected += 1
            robot.collected += 1
        elif kind == "lay_pheromone":
            x, y = action.location
            self.nests[action.nest].waypoints.append(PheromoneWaypoint(x, y, clock))
        else:
            raise SimulationFault(f"unknown action {kind!r}")

    def run(self) -> Metrics:
        for _ in range(self.cfg.n_ticks - self.tick):
            self.step()
        return self.metrics()

    def metrics(self) -> Metrics:
        per_robot = [RobotMetrics(r.collected, r.time_avoiding,
                                  r.time_traveling, r.time_searching) for r in self.robots]
        return Metrics(
            targets_collected=self.deposited,
            total_collision_s=sum(m.collision_s for m in per_robot),
            total_travel_s=sum(m.travel_s for m in per_robot),
            total_search_s=sum(m.search_s for m in per_robot),
            per_robot=per_robot,
        )


def step_world(world: World) -> World:
    world.step()
    return world


def run_world(cfg: WorldConfig, params: ParamSet, check: bool = False,
              trace: Optional[TextIO] = None) -> Metrics:
    return World(cfg, params, check=check, trace=trace).run()
