"""Latency-aware simulated-annealing architecture search for trajectory forecasters."""
from .energy import CandidateMetrics, EnergyWeights, energy
from .estimators import ArchitectureSearch, ConstantVelocityForecaster, TrajectoryForecaster
from .genome import Genome, SearchSpaceSpec, default_space, deserialize, mutate, random_genome, serialize
from .search import SearchConfig, local_search, mosa_search, random_search, run_search
from .surrogate import SurrogateSpec, brute_force_optimum, surrogate_evaluate

__version__ = "0.1.0"

__all__ = [
    "ArchitectureSearch", "CandidateMetrics", "ConstantVelocityForecaster", "TrajectoryForecaster",
    "EnergyWeights", "Genome", "SearchConfig", "SearchSpaceSpec", "SurrogateSpec",
    "brute_force_optimum", "default_space", "deserialize", "energy", "local_search", "mosa_search",
    "mutate", "random_genome", "random_search", "run_search", "serialize", "surrogate_evaluate",
]
