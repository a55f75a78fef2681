"""Target placement: the partially clustered layout and a uniform layout.

The arena is centred on the origin, so coordinates lie in [-side/2, side/2].
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

LARGE_FRACTION = 0.25
MEDIUM_FRACTION = 0.25
MEDIUM_CLUSTER_SIZE = 16
GRID_SPACING = 0.15
NEST_CLEARANCE = 0.5
MAX_ANCHOR_TRIES = 10_000

UNIFORM = -1
LARGE = 0


@dataclass
class TargetField:
    xs: np.ndarray
    ys: np.ndarray
    # -1 scattered, 0 the large cluster, 1.. medium clusters.
    labels: np.ndarray = field(default=None)
    degraded: bool = False

    def __post_init__(self):
        if self.labels is None:
            self.labels = np.full(len(self.xs), UNIFORM, dtype=np.int64)

    @property
    def n(self) -> int:
        return len(self.xs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "y"])
        for x, y in zip(self.xs.tolist(), self.ys.tolist()):
            w.writerow([repr(x), repr(y)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TargetField":
        rows = list(csv.reader(io.StringIO(text)))
        body = [r for r in rows[1:] if r]
        xs = np.array([float(r[0]) for r in body], dtype=float)
        ys = np.array([float(r[1]) for r in body], dtype=float)
        return cls(xs, ys)


def uniform_random(n: int, arena_side: float, rng: np.random.Generator) -> TargetField:
    if n < 0:
        raise ValueError("n must be >= 0")
    half = arena_side / 2.0
    pts = rng.uniform(-half, half, size=(n, 2))
    return TargetField(pts[:, 0].copy(), pts[:, 1].copy())


def _grid_offsets(count: int, side: int) -> np.ndarray:
    idx = np.arange(count)
    return np.stack([idx % side, idx // side], axis=1) * GRID_SPACING


def _place_cluster(offsets, half, rng, nests, placed_boxes):
    extent = offsets.max(axis=0) if len(offsets) else np.zeros(2)
    for _ in range(MAX_ANCHOR_TRIES):
        ax = rng.uniform(-half, half - extent[0])
        ay = rng.uniform(-half, half - extent[1])
        pts = offsets + (ax, ay)
        if len(nests):
            d = np.hypot(pts[:, None, 0] - nests[None, :, 0], pts[:, None, 1] - nests[None, :, 1])
            if (d < NEST_CLEARANCE).any():
                continue
        box = (ax - GRID_SPACING, ay - GRID_SPACING,
               ax + extent[0] + GRID_SPACING, ay + extent[1] + GRID_SPACING)
        if any(box[0] < b[2] and b[0] < box[2] and box[1] < b[3] and b[1] < box[3]
               for b in placed_boxes):
            continue
        placed_boxes.append(box)
        return pts
    raise RuntimeError("could not place target cluster; arena too crowded")


def partially_clustered(n: int, arena_side: float, rng: np.random.Generator,
                        nests=None) -> TargetField:
    """One large square cluster, medium 4x4 clusters and uniformly scattered targets.

    A quarter of the targets go to the large cluster, a quarter to medium
    clusters of 16 (the last one partial if needed) and the rest are
    scattered. Clusters stay inside the arena, do not overlap each other and
    keep ``NEST_CLEARANCE`` from every nest. Below 16 targets no cluster is
    formed and the field is flagged ``degraded``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    half = arena_side / 2.0
    if n < MEDIUM_CLUSTER_SIZE:
        out = uniform_random(n, arena_side, rng)
        out.degraded = True
        return out

    nests = np.zeros((0, 2)) if nests is None else np.asarray(nests, dtype=float).reshape(-1, 2)
    n_large = int(n * LARGE_FRACTION)
    n_medium = int(n * MEDIUM_FRACTION)
    n_scatter = n - n_large - n_medium

    xs, ys, labels = [], [], []
    boxes: list[tuple] = []
    large = _place_cluster(_grid_offsets(n_large, math.ceil(math.sqrt(n_large))), half, rng, nests, boxes)
    xs.append(large[:, 0]); ys.append(large[:, 1]); labels.append(np.full(n_large, LARGE))

    label = 1
    remaining = n_medium
    while remaining > 0:
        size = min(MEDIUM_CLUSTER_SIZE, remaining)
        pts = _place_cluster(_grid_offsets(size, 4), half, rng, nests, boxes)
        xs.append(pts[:, 0]); ys.append(pts[:, 1]); labels.append(np.full(size, label))
        label += 1
        remaining -= size

    scatter = uniform_random(n_scatter, arena_side, rng)
    xs.append(scatter.xs); ys.append(scatter.ys); labels.append(np.full(n_scatter, UNIFORM))

    return TargetField(
        np.clip(np.concatenate(xs), -half, half),
        np.clip(np.concatenate(ys), -half, half),
        np.concatenate(labels).astype(np.int64),
    )
