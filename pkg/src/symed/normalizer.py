"""Online z-score normalization with exponentially weighted statistics.

The stream mean and variance are tracked with a damped window::

    ewma_j = alpha * t_j + (1 - alpha) * ewma_{j-1}
    ewmv_j = alpha * (t_j - ewma_j)**2 + (1 - alpha) * ewmv_{j-1}

The first observation initializes ``ewma = t_0`` and ``ewmv = 1.0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateVarianceError, StreamCorruptionError

DEFAULT_ALPHA = 0.01
EWMV_FLOOR = 1e-300


@dataclass(frozen=True)
class NormalizerState:
    alpha: float = DEFAULT_ALPHA
    ewma: float = 0.0
    ewmv: float = 1.0
    count: int = 0

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0) or not math.isfinite(self.alpha):
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha!r}")
        if self.ewmv < 0.0:
            raise ConfigError(f"ewmv must be non-negative, got {self.ewmv!r}")

    def update(self, t: float) -> "NormalizerState":
        return update(self, t)

    def standardize(self, t: float) -> float:
        return standardize(self, t)

    def standardize_segment(self, segment: Sequence[float]) -> np.ndarray:
        return standardize_segment(self, segment)

    @property
    def std(self) -> float:
        return math.sqrt(self.ewmv)


def update(state: NormalizerState, t: float) -> NormalizerState:
    """Fold one observation into the running statistics and return the new state."""
    t = float(t)
    if not math.isfinite(t):
        raise StreamCorruptionError(f"non-finite stream value {t!r}")
    if state.count == 0:
        return replace(state, ewma=t, ewmv=1.0, count=1)
    a = state.alpha
    ewma = a * t + (1.0 - a) * state.ewma
    ewmv = a * (t - ewma) ** 2 + (1.0 - a) * state.ewmv
    if ewmv <= EWMV_FLOOR:
        ewmv = EWMV_FLOOR
    return replace(state, ewma=ewma, ewmv=ewmv, count=state.count + 1)


def _check_ready(state: NormalizerState) -> None:
    if state.count == 0:
        raise DegenerateVarianceError("normalizer has not observed any value yet")
    if state.ewmv <= 0.0:
        raise DegenerateVarianceError("ewmv is zero; cannot standardize")


def standardize(state: NormalizerState, t: float) -> float:
    _check_ready(state)
    return (float(t) - state.ewma) / math.sqrt(state.ewmv)


def standardize_segment(state: NormalizerState, segment: Sequence[float]) -> np.ndarray:
    """Standardize every element with the current statistics, preserving order."""
    arr = np.asarray(segment, dtype=np.float64)
    if arr.size == 0:
        return arr.copy()
    _check_ready(state)
    return (arr - state.ewma) / math.sqrt(state.ewmv)
