"""Scalar energy combining latency with forecasting quality.

    E = latency * mAP_f**alpha * ADE**beta * FDE**gamma

With ``alpha < 0`` a higher forecasting mAP lowers the energy, while
``beta, gamma >= 0`` penalise displacement errors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .exceptions import InvalidMetrics

EPSILON_ERROR_M = 1e-3
EPSILON_MAP = 1e-3


@dataclass(frozen=True)
class EnergyWeights:
    alpha: float = -1.0
    beta: float = 0.5
    gamma: float = 0.5

    def __post_init__(self):
        if not self.alpha < 0:
            raise ValueError(f"alpha must be negative, got {self.alpha}")
        if self.beta < 0 or self.gamma < 0:
            raise ValueError("beta and gamma must be non-negative")


@dataclass(frozen=True)
class CandidateMetrics:
    latency_s: float
    map_f: float
    ade_m: float
    fde_m: float
    map_det: float = 0.0

    def validate(self):
        values = asdict(self)
        for name, v in values.items():
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidMetrics(f"{name} must be finite, got {v!r}")
        if self.latency_s <= 0:
            raise InvalidMetrics(f"latency_s must be positive, got {self.latency_s}")
        if not 0.0 <= self.map_f <= 1.0 or not 0.0 <= self.map_det <= 1.0:
            raise InvalidMetrics("mAP values must lie in [0, 1]")
        if self.ade_m < 0 or self.fde_m < 0:
            raise InvalidMetrics("displacement errors must be non-negative")
        return self

    def to_dict(self):
        return asdict(self)


def energy(metrics: CandidateMetrics, weights: EnergyWeights = EnergyWeights()) -> float:
    metrics.validate()
    # only exact zeros are clamped, so the energy stays strictly monotone elsewhere
    map_f = metrics.map_f or EPSILON_MAP
    ade = metrics.ade_m or EPSILON_ERROR_M
    fde = metrics.fde_m or EPSILON_ERROR_M
    return metrics.latency_s * map_f**weights.alpha * ade**weights.beta * fde**weights.gamma
