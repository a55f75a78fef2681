"""Central-place and multiple-place swarm foraging simulation with GA parameter search."""

from swarmforage.kernels import BACKEND
from swarmforage.model import DEFAULT_PARAMS, Mode, ParamSet, WorldConfig, validate_params
from swarmforage.world import World, run_world

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DEFAULT_PARAMS",
    "Mode",
    "ParamSet",
    "World",
    "WorldConfig",
    "run_world",
    "validate_params",
]
