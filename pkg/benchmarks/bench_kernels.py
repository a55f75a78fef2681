"""Compare the compiled and pure-Python kernel backends.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the two spatial kernels in isolation, then a full world run under
each backend (the backend is chosen at import, so each world run happens in
a fresh interpreter).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from swarmforage import _kernels_py

try:
    from swarmforage import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

HALF = 7.5

WORLD_SNIPPET = """
import time
from swarmforage import BACKEND, DEFAULT_PARAMS, WorldConfig, run_world
cfg = WorldConfig(mode="{mode}", n_robots={robots}, n_targets={targets}, sim_minutes={minutes}, seed=1)
t0 = time.perf_counter()
m = run_world(cfg, DEFAULT_PARAMS)
print(BACKEND, time.perf_counter() - t0, m.targets_collected)
"""


def bench_kernels(mod, repeat):
    rng = np.random.default_rng(0)
    robots = rng.uniform(-HALF, HALF, size=(64, 2))
    targets = rng.uniform(-HALF, HALF, size=(2048, 2))
    queries = rng.uniform(-HALF, HALF, size=(1000, 2))

    def pairs():
        mod.collision_pairs(robots[:, 0], robots[:, 1], 0.25, HALF)

    grid = mod.TargetGrid(targets[:, 0], targets[:, 1], 0.3, HALF)

    def lookups():
        for x, y in queries:
            t = grid.nearest_within(x, y, 0.1)
            grid.count_within(x, y, 0.3, t)

    def build():
        mod.TargetGrid(targets[:, 0], targets[:, 1], 0.3, HALF)

    return {name: min(timeit.repeat(fn, number=20, repeat=repeat)) / 20
            for name, fn in (("collision_pairs(64)", pairs), ("1000 target lookups", lookups),
                             ("grid build(2048)", build))}


def bench_world(backend, mode, robots, targets, minutes):
    env = dict(os.environ)
    if backend == "python":
        env["SWARMFORAGE_BACKEND"] = "python"
    else:
        env.pop("SWARMFORAGE_BACKEND", None)
    code = WORLD_SNIPPET.format(mode=mode, robots=robots, targets=targets, minutes=minutes)
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, secs, collected = out.stdout.split()
    return name, float(secs), int(collected)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    mods = [("python", _kernels_py)] + ([("cython", _kernels_cy)] if _kernels_cy else [])
    if _kernels_cy is None:
        print("compiled extension not built; timing the Python fallback only")
    timings = {name: bench_kernels(mod, args.repeat) for name, mod in mods}
    print(f"{'kernel':<22}" + "".join(f"{n:>12}" for n, _ in mods) + ("     speedup" if len(mods) > 1 else ""))
    for k in timings["python"]:
        row = f"{k:<22}" + "".join(f"{timings[n][k] * 1e3:>10.3f}ms" for n, _ in mods)
        if len(mods) > 1:
            row += f"{timings['python'][k] / timings['cython'][k]:>11.1f}x"
        print(row)

    print()
    print("full world, 16 robots / 256 targets / 20 min and 64 robots / 1024 targets / 7.5 min:")
    for robots, targets, minutes in ((16, 256, 20.0), (64, 1024, 7.5)):
        for mode in ("cpfa", "mpfa"):
            res = [bench_world(n, mode, robots, targets, minutes) for n, _ in mods]
            same = len({c for _, _, c in res}) == 1
            cells = "  ".join(f"{n} {s:.2f}s" for n, s, _ in res)
            print(f"  {mode} {robots:>2} robots: {cells}  collected={res[0][2]} identical={same}")


if __name__ == "__main__":
    main()
