"""Genetic algorithm over the seven controller parameters."""

from __future__ import annotations

import csv
import enum
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from swarmforage.controller import SimulationFault
from swarmforage.model import (
    GENE_SPAN,
    PARAM_RANGES,
    ParamSet,
    WorldConfig,
    sample_initial_params,
    validate_params,
)
from swarmforage.world import derive_seed, run_world

log = logging.getLogger(__name__)

_NAMES = ParamSet.names()
_LO = np.array([GENE_SPAN[n][0] for n in _NAMES])
_SPAN = np.array([GENE_SPAN[n][1] - GENE_SPAN[n][0] for n in _NAMES])
# Genes with no upper bound may leave their working span upwards.
_BOUNDED_ABOVE = np.array([PARAM_RANGES[n][1] is not None for n in _NAMES])


class Termination(str, enum.Enum):
    MAX_GENERATIONS = "MaxGenerations"
    CONVERGED = "FitnessConverged+LowDiversity"


@dataclass(frozen=True)
class EvolutionConfig:
    population_size: int = 50
    max_generations: int = 100
    crossover_prob: float = 0.5
    mutation_rate: float = 0.05
    mutation_sd: float = 0.02
    n_fitness_evals: int = 8
    eval_world: WorldConfig = field(
        default_factory=lambda: WorldConfig(n_robots=40, n_targets=1024, sim_minutes=12.0))
    convergence_window: int = 15
    convergence_epsilon: float = 1.0
    diversity_epsilon: float = 0.05
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        for name in ("crossover_prob", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_sd < 0:
            raise ValueError("mutation_sd must be >= 0")
        if self.max_generations < 1 or self.n_fitness_evals < 1:
            raise ValueError("max_generations and n_fitness_evals must be >= 1")


@dataclass
class GenerationStats:
    generation: int
    best: float
    mean: float
    sd: float
    diversity: float
    best_genome: ParamSet
    flagged: int = 0


@dataclass
class EvolutionRecord:
    generations: list[GenerationStats] = field(default_factory=list)
    termination: Optional[Termination] = None

    @property
    def best_trace(self) -> list[float]:
        return [g.best for g in self.generations]

    @property
    def best_genome(self) -> ParamSet:
        return self.generations[-1].best_genome

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["generation", "best", "mean", "sd", "diversity", "flagged"])
        for g in self.generations:
            w.writerow([g.generation, repr(g.best), repr(g.mean), repr(g.sd), repr(g.diversity), g.flagged])
        return buf.getvalue()


def normalize(g: ParamSet) -> np.ndarray:
    return (g.as_array() - _LO) / _SPAN


def denormalize(u: np.ndarray) -> ParamSet:
    return ParamSet.from_array(_LO + u * _SPAN)


def _eval_one(args) -> tuple[float, bool]:
    genome, world = args
    try:
        return float(run_world(world, genome).targets_collected), False
    except SimulationFault as exc:
        log.warning("fitness replicate failed: %s", exc)
        return 0.0, True


def _fitness_jobs(genome: ParamSet, cfg: EvolutionConfig, generation: int, individual: int):
    return [(genome, cfg.eval_world.with_(seed=derive_seed(cfg.seed, generation, individual, e)))
            for e in range(cfg.n_fitness_evals)]


def fitness(genome: ParamSet, cfg: EvolutionConfig, generation: int = 0, individual: int = 0) -> float:
    """Mean targets collected over ``n_fitness_evals`` fresh target placements.

    A replicate that faults makes the whole evaluation worth 0.
    """
    return fitness_flagged(genome, cfg, generation, individual)[0]


def fitness_flagged(genome, cfg, generation=0, individual=0) -> tuple[float, bool]:
    results = [_eval_one(job) for job in _fitness_jobs(genome, cfg, generation, individual)]
    if any(f for _, f in results):
        return 0.0, True
    return sum(v for v, _ in results) / len(results), False


def uniform_crossover(a: ParamSet, b: ParamSet, rng: np.random.Generator, prob: float = 0.5) -> ParamSet:
    take_a = rng.random(len(_NAMES)) < prob
    return ParamSet.from_array(np.where(take_a, a.as_array(), b.as_array()))


def gaussian_mutate(g: ParamSet, rate: float, sd: float, rng: np.random.Generator) -> ParamSet:
    """Add N(0, sd) to each gene with probability ``rate``, in range-normalised units."""
    u = normalize(g)
    hit = rng.random(len(u)) < rate
    noise = rng.normal(0.0, sd, size=len(u)) if sd > 0 else np.zeros(len(u))
    if not hit.any():
        return g
    u = np.where(hit, u + noise, u)
    u = np.maximum(u, 0.0)
    u = np.where(_BOUNDED_ABOVE, np.minimum(u, 1.0), u)
    out = denormalize(u)
    # Untouched genes keep their exact bits.
    return ParamSet.from_array(np.where(hit, out.as_array(), g.as_array()))


def population_diversity(pop: list[ParamSet]) -> float:
    """Mean over genes of the population SD in normalised units."""
    arr = np.array([normalize(g) for g in pop])
    return float(arr.std(axis=0).mean())


def next_generation(pop: list[ParamSet], fitnesses, cfg: EvolutionConfig,
                    rng: np.random.Generator) -> list[ParamSet]:
    """Elite first, then roulette-selected, crossed and mutated offspring."""
    f = np.asarray(fitnesses, dtype=float)
    elite = int(np.argmax(f))
    total = f.sum()
    probs = f / total if total > 0 else None
    out = [pop[elite]]
    for _ in range(cfg.population_size - 1):
        ia, ib = rng.choice(len(pop), size=2, p=probs)
        child = uniform_crossover(pop[ia], pop[ib], rng, cfg.crossover_prob)
        out.append(gaussian_mutate(child, cfg.mutation_rate, cfg.mutation_sd, rng))
    return out


def check_termination(record: EvolutionRecord, cfg: EvolutionConfig,
                      diversity: Optional[float] = None) -> Optional[Termination]:
    gens = record.generations
    if not gens:
        raise ValueError("no completed generation")
    if diversity is None:
        diversity = gens[-1].diversity
    window = cfg.convergence_window
    if len(gens) >= window:
        recent = [g.best for g in gens[-window:]]
        if max(recent) - min(recent) <= cfg.convergence_epsilon and diversity <= cfg.diversity_epsilon:
            return Termination.CONVERGED
    if len(gens) >= cfg.max_generations:
        return Termination.MAX_GENERATIONS
    return None


def _evaluate_population(pop, cfg, generation, known: dict[int, float], pool):
    """Fitness per individual; entries in ``known`` (the carried elite) are reused."""
    todo = [i for i in range(len(pop)) if i not in known]
    jobs = []
    for i in todo:
        jobs.extend(_fitness_jobs(pop[i], cfg, generation, i))
    results = list(pool.map(_eval_one, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers)))
                   if pool else map(_eval_one, jobs))
    fit = [0.0] * len(pop)
    flagged = 0
    for i, v in known.items():
        fit[i] = v
    n = cfg.n_fitness_evals
    for slot, i in enumerate(todo):
        chunk = results[slot * n:(slot + 1) * n]
        if any(f for _, f in chunk):
            fit[i] = 0.0
            flagged += 1
        else:
            fit[i] = sum(v for v, _ in chunk) / n
    return fit, flagged


def evolve(cfg: EvolutionConfig, progress=None) -> EvolutionRecord:
    """Run the GA to termination. Reproducible from ``cfg`` alone.

    The elite's fitness is carried over instead of being re-measured on the
    next generation's placements, so the best-fitness trace never drops.
    """
    rng = np.random.default_rng(derive_seed(cfg.seed, 0xE70))
    pop = [sample_initial_params(rng) for _ in range(cfg.population_size)]
    record = EvolutionRecord()
    known: dict[int, float] = {}
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for gen in range(cfg.max_generations):
            for g in pop:
                bad = validate_params(g)
                if bad:
                    raise AssertionError(f"invalid genome in generation {gen}: {bad}")
            fit, flagged = _evaluate_population(pop, cfg, gen, known, pool)
            f = np.asarray(fit)
            best = int(np.argmax(f))
            stats = GenerationStats(gen, float(f[best]), float(f.mean()), float(f.std()),
                                    population_diversity(pop), pop[best], flagged)
            record.generations.append(stats)
            if progress:
                progress(stats)
            reason = check_termination(record, cfg)
            if reason is not None:
                record.termination = reason
                break
            pop = next_generation(pop, fit, cfg, rng)
            known = {0: stats.best}
    finally:
        if pool:
            pool.shutdown()
    return record


def config_from_sections(sections: dict, seed: Optional[int] = None, mode: Optional[str] = None,
                         workers: Optional[int] = None) -> EvolutionConfig:
    evo = dict(sections.get("evolution", {}))
    world = dict(sections.get("world", {}))
    base = EvolutionConfig()
    wkw = {k: getattr(base.eval_world, k) for k in ("n_robots", "n_targets", "sim_minutes")}
    wkw.update(world)
    if mode is not None:
        wkw["mode"] = mode
    kw = {}
    for key, raw in evo.items():
        if not hasattr(base, key) or key == "eval_world":
            raise ValueError(f"unknown evolution option {key!r}")
        kw[key] = type(getattr(base, key))(float(raw)) if isinstance(getattr(base, key), int) else float(raw)
    if seed is not None:
        kw["seed"] = seed
    if workers is not None:
        kw["workers"] = workers
    return replace(base, eval_world=WorldConfig.from_mapping(wkw), **kw)


__all__ = [
    "EvolutionConfig",
    "EvolutionRecord",
    "GenerationStats",
    "Termination",
    "check_termination",
    "evolve",
    "fitness",
    "gaussian_mutate",
    "next_generation",
    "population_diversity",
    "uniform_crossover",
]
