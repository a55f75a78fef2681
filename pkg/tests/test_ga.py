from dataclasses import replace

import numpy as np
import pytest

from swarmforage.ga import (
    EvolutionConfig,
    EvolutionRecord,
    GenerationStats,
    Termination,
    check_termination,
    config_from_sections,
    evolve,
    fitness,
    gaussian_mutate,
    next_generation,
    normalize,
    population_diversity,
    uniform_crossover,
)
from swarmforage.model import DEFAULT_PARAMS, ParamSet, WorldConfig, validate_params

TINY_WORLD = WorldConfig(n_robots=4, n_targets=64, sim_minutes=1.0)
TINY = EvolutionConfig(population_size=6, max_generations=3, n_fitness_evals=2, eval_world=TINY_WORLD, seed=5)

A = ParamSet(0.1, 0.2, 0.3, 0.4, 5.0, 6.0, 0.7)
B = ParamSet(0.9, 0.8, 2.0, 1.5, 15.0, 16.0, 0.01)


def test_crossover_identical_parents():
    assert uniform_crossover(A, A, np.random.default_rng(0)) == A


def test_crossover_allele_frequency():
    rng = np.random.default_rng(1)
    n = 100_000
    hits = np.zeros(7)
    a, b = A.as_array(), B.as_array()
    for _ in range(n):
        hits += uniform_crossover(A, B, rng).as_array() == a
    assert np.all(np.abs(hits / n - 0.5) <= 0.01)
    assert np.all(a != b)


def test_mutation_rate_zero_unchanged():
    assert gaussian_mutate(A, 0.0, 0.5, np.random.default_rng(0)) == A


def test_mutation_clamps_at_maximum():
    top = ParamSet(1.0, 1.0, np.pi, 0.5, 20.0, 20.0, 0.5)
    rng = np.random.default_rng(2)
    for _ in range(200):
        out = gaussian_mutate(top, 1.0, 0.5, rng)
        assert validate_params(out) == []
        assert out.p_search <= 1.0 and out.lambda_sf <= 20.0 and out.omega <= np.pi


def test_mutation_sd_in_normalised_units():
    mid = ParamSet(0.5, 0.5, np.pi / 2, 0.5, 10.0, 10.0, 0.5)
    rng = np.random.default_rng(3)
    base = normalize(mid)
    d = np.array([normalize(gaussian_mutate(mid, 1.0, 0.02, rng)) - base for _ in range(100_000)])
    assert np.all(np.abs(d.std(axis=0) / 0.02 - 1.0) <= 0.05)


def test_next_generation_fixed_point():
    cfg = replace(TINY, population_size=2, mutation_rate=0.0)
    assert next_generation([A, A], [3.0, 3.0], cfg, np.random.default_rng(0)) == [A, A]


def test_next_generation_elite_first_and_uniform_fallback():
    cfg = replace(TINY, population_size=4, mutation_rate=0.0)
    pop = [A, B, DEFAULT_PARAMS, A]
    out = next_generation(pop, [1.0, 9.0, 2.0, 0.0], cfg, np.random.default_rng(0))
    assert out[0] == B and len(out) == 4
    out0 = next_generation(pop, [0.0] * 4, cfg, np.random.default_rng(0))
    assert len(out0) == 4 and out0[0] == A


def test_roulette_ignores_zero_fitness():
    cfg = replace(TINY, population_size=50, mutation_rate=0.0)
    out = next_generation([A, B], [1.0, 0.0], cfg, np.random.default_rng(9))
    assert all(g == A for g in out)


def _record(bests, diversity=0.0):
    r = EvolutionRecord()
    for i, b in enumerate(bests):
        r.generations.append(GenerationStats(i, b, b, 0.0, diversity, A))
    return r


def test_termination_rules():
    cfg = EvolutionConfig(max_generations=100, convergence_window=15)
    assert check_termination(_record([5.0] * 100, diversity=1.0), cfg) == Termination.MAX_GENERATIONS
    assert check_termination(_record([5.0] * 15), cfg) == Termination.CONVERGED
    assert check_termination(_record([5.0, 8.0] * 10), cfg) is None
    assert check_termination(_record([5.0] * 14), cfg) is None
    with pytest.raises(ValueError):
        check_termination(EvolutionRecord(), cfg)
    assert Termination.CONVERGED.value == "FitnessConverged+LowDiversity"


def test_diversity():
    assert population_diversity([A, A, A]) == pytest.approx(0.0, abs=1e-15)
    assert population_diversity([A, B]) > 0.0


def test_fitness_fixtures():
    assert fitness(A, replace(TINY, eval_world=TINY_WORLD.with_(n_targets=0))) == 0.0
    assert fitness(replace(DEFAULT_PARAMS, p_search=0.0), TINY) == 0.0
    assert fitness(DEFAULT_PARAMS, TINY, 1, 2) == fitness(DEFAULT_PARAMS, TINY, 1, 2)


def test_evolve_deterministic_and_monotone():
    a, b = evolve(TINY), evolve(TINY)
    assert a.to_csv() == b.to_csv()
    assert a.best_genome == b.best_genome
    assert all(y >= x for x, y in zip(a.best_trace, a.best_trace[1:]))
    assert a.termination == Termination.MAX_GENERATIONS
    assert len(a.generations) == 3


def test_config_from_sections():
    cfg = config_from_sections({"evolution": {"population_size": "12", "mutation_sd": "0.1"},
                                "world": {"n_robots": "6"}}, seed=4, mode="cpfa")
    assert cfg.population_size == 12 and cfg.mutation_sd == 0.1 and cfg.seed == 4
    assert cfg.eval_world.n_robots == 6 and cfg.eval_world.n_targets == 1024
    with pytest.raises(ValueError):
        config_from_sections({"evolution": {"bogus": "1"}})


def test_config_validation():
    with pytest.raises(ValueError):
        EvolutionConfig(population_size=1)
    with pytest.raises(ValueError):
        EvolutionConfig(mutation_rate=1.5)
