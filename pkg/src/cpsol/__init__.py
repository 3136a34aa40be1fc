"""Multi-swarm cellular particle swarm optimisation with clustering and
local search, plus static and dynamic benchmarks."""

from .baseline import GlobalBestPSO
from .benchmarks import Environment, MovingParabola, MovingPeaks, MpbConfig, StaticFunction
from .core import Bounds, RandomSource, make_random_source
from .harness import ExperimentConfig, load_config, run_experiment, run_single
from .metrics import MetricsTracker, RunReport, aggregate, offline_error
from .swarm import CellularSwarm, SwarmParams

__all__ = [
    "Bounds", "CellularSwarm", "Environment", "ExperimentConfig", "GlobalBestPSO",
    "MetricsTracker", "MovingParabola", "MovingPeaks", "MpbConfig", "RandomSource",
    "RunReport", "StaticFunction", "SwarmParams", "aggregate", "load_config",
    "make_random_source", "offline_error", "run_experiment", "run_single",
]
__version__ = "0.1.0"
