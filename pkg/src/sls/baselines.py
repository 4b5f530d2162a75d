"""Reference decoding transforms operating on the same top-K interface:
greedy selection, temperature scaling, and iterative token-level entropy
minimization."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TopKSlice
from .errors import ConfigError, InputError, NumericalError

__all__ = [
    "EmInfConfig",
    "greedy_select",
    "temperature_scale",
    "entropy_minimize",
]


@dataclass(frozen=True)
class EmInfConfig:
    """Settings for the entropy-minimization baseline."""

    steps: int = 10
    learning_rate: float = 0.1
    entropy_threshold: float = 0.3

    def __post_init__(self):
        if not isinstance(self.steps, (int, np.integer)) or self.steps < 1:
            raise ConfigError(f"steps must be a positive integer, got {self.steps}")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0.0):
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (math.isfinite(self.entropy_threshold) and self.entropy_threshold >= 0.0):
            raise ConfigError(
                f"entropy_threshold must be >= 0, got {self.entropy_threshold}"
            )


def greedy_select(slice_: TopKSlice) -> int:
    """Vocabulary id of the largest value; ties go to the lower id."""
    top = slice_.values.max()
    return int(slice_.indices[slice_.values == top].min())


def temperature_scale(slice_: TopKSlice, tau: float) -> TopKSlice:
    """Divide values by tau on unchanged indices; tau=1 is the identity."""
    if not (math.isfinite(tau) and tau > 0.0):
        raise InputError(f"tau must be finite and > 0, got {tau}")
    return slice_.with_values(slice_.values / tau)


def _softmax_entropy(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Softmax probabilities, their logs, and the exact entropy -sum(p log p)."""
    shifted = np.exp(values - values.max())
    p = shifted / shifted.sum()
    log_p = np.log(p)
    return p, log_p, float(-(p * log_p).sum())


def entropy_minimize(slice_: TopKSlice, config: EmInfConfig) -> TopKSlice:
    """Gradient-descend the softmax entropy of the values.

    Returns the input unchanged when entropy is already at or below the
    threshold; otherwise runs the configured number of plain gradient steps
    using the analytic gradient dH/dv_i = -p_i (log p_i + H).
    """
    _, _, entropy = _softmax_entropy(slice_.values)
    if entropy <= config.entropy_threshold:
        return slice_

    values = np.array(slice_.values, dtype=np.float64, copy=True)
    # divergence shows up as non-finite values; detect it instead of warning
    with np.errstate(invalid="ignore", over="ignore", divide="ignore"):
        for iteration in range(config.steps):
            p, log_p, entropy = _softmax_entropy(values)
            gradient = -p * (log_p + entropy)
            values -= config.learning_rate * gradient
            if not np.isfinite(values).all():
                raise NumericalError(
                    "entropy minimization produced non-finite values", step=iteration
                )
    return slice_.with_values(values)
