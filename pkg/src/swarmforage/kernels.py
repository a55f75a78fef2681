"""Spatial kernel backend, chosen at import.

The compiled extension is used when it was built; otherwise the pure-Python
module is used. Set ``SWARMFORAGE_BACKEND=python`` to force the fallback.
"""

import os

from swarmforage import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("SWARMFORAGE_BACKEND", "").lower() != "python":
    try:
        from swarmforage import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

collision_pairs = _impl.collision_pairs
TargetGrid = _impl.TargetGrid

__all__ = ["BACKEND", "collision_pairs", "TargetGrid"]
