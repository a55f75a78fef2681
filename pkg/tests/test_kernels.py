import itertools

import numpy as np
import pytest

from swarmforage import _kernels_py, kernels
from tests.conftest import BACKENDS

HALF = 7.5


def brute_pairs(xs, ys, r):
    return [(i, j) for i, j in itertools.combinations(range(len(xs)), 2)
            if (xs[i] - xs[j]) ** 2 + (ys[i] - ys[j]) ** 2 < r * r]


def test_threshold_is_strict(backend):
    assert backend.collision_pairs(np.array([0.0, 0.24]), np.array([0.0, 0.0]), 0.25, HALF) == [(0, 1)]
    assert backend.collision_pairs(np.array([0.0, 0.25]), np.array([0.0, 0.0]), 0.25, HALF) == []


def test_matches_brute_force(backend):
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(0, 257))
        pts = rng.uniform(-HALF, HALF, size=(n, 2))
        # Squeeze some fixtures into a small box so pairs are plentiful.
        if rng.random() < 0.5:
            pts *= 0.1
        xs, ys = pts[:, 0], pts[:, 1]
        assert backend.collision_pairs(xs, ys, 0.25, HALF) == brute_pairs(xs, ys, 0.25)


def test_points_on_walls(backend):
    xs = np.array([-HALF, -HALF + 0.1, HALF, HALF - 0.2])
    ys = np.array([HALF, HALF, -HALF, -HALF])
    assert backend.collision_pairs(xs, ys, 0.25, HALF) == [(0, 1), (2, 3)]


def _grid_fixture(backend, seed=2, n=2000):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-HALF, HALF, size=(n, 2))
    return pts, backend.TargetGrid(pts[:, 0], pts[:, 1], 0.3, HALF)


def test_grid_queries_match_brute_force(backend):
    pts, grid = _grid_fixture(backend)
    rng = np.random.default_rng(3)
    removed = set(rng.choice(len(pts), size=300, replace=False).tolist())
    for t in removed:
        grid.remove(t)
    assert grid.n_available == len(pts) - 300
    for _ in range(300):
        x, y = rng.uniform(-HALF - 0.2, HALF + 0.2, size=2)
        r = float(rng.choice([0.1, 0.3, 0.7]))
        d = np.hypot(pts[:, 0] - x, pts[:, 1] - y)
        expect = [i for i in np.flatnonzero(d <= r).tolist() if i not in removed]
        assert grid.within(x, y, r) == expect
        assert grid.count_within(x, y, r) == len(expect)
        if expect:
            ex = expect[0]
            assert grid.count_within(x, y, r, ex) == len(expect) - 1
            best = min(expect, key=lambda i: (d[i], i))
            assert grid.nearest_within(x, y, r) == best
        else:
            assert grid.nearest_within(x, y, r) == -1


def test_grid_remove_twice_raises(backend):
    _, grid = _grid_fixture(backend, n=10)
    grid.remove(3)
    assert not grid.is_available(3)
    with pytest.raises(KeyError):
        grid.remove(3)


def test_grid_empty(backend):
    grid = backend.TargetGrid(np.zeros(0), np.zeros(0), 0.3, HALF)
    assert grid.within(0.0, 0.0, 1.0) == [] and grid.nearest_within(0.0, 0.0, 1.0) == -1


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_exactly():
    rng = np.random.default_rng(99)
    py, cy = BACKENDS
    for _ in range(20):
        pts = rng.uniform(-HALF, HALF, size=(200, 2)) * rng.uniform(0.05, 1)
        assert py.collision_pairs(pts[:, 0], pts[:, 1], 0.25, HALF) == cy.collision_pairs(
            pts[:, 0], pts[:, 1], 0.25, HALF)


def test_selector_exposes_backend():
    assert kernels.BACKEND in ("python", "cython")
    if kernels.BACKEND == "python":
        assert kernels.TargetGrid is _kernels_py.TargetGrid


def test_env_forces_python_fallback():
    import os
    import subprocess
    import sys
    env = dict(os.environ, SWARMFORAGE_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import swarmforage; print(swarmforage.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
