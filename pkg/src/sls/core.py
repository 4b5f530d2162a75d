"""Per-stream decoding state machine: top-K extraction, entropy gate,
adaptive spectral rescaling, and buffer write-back.

One :class:`SlidingLogitBuffer` plus one :class:`SlsConfig` serve exactly one
decode stream and are mutated single-threaded; distinct streams use distinct
buffers.  The config is immutable and freely shareable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, fields
from typing import Iterator, Mapping

import numpy as np

from .errors import ConfigError, InputError
from .spectral import center_buffer, project_split, recombine, spectral_basis

__all__ = [
    "SlsConfig",
    "TopKSlice",
    "SlidingLogitBuffer",
    "StepDiagnostics",
    "extract_top_k",
    "compute_entropy",
    "logit_gap",
    "adaptive_alpha",
    "sls_step",
    "scatter_adjusted",
]

_INT_FIELDS = ("k", "window", "rank")


@dataclass(frozen=True)
class SlsConfig:
    """Every hyperparameter of the rescaling pipeline, validated up front.

    k          number of retained top logits per step
    window     sliding buffer capacity (rows)
    rank       requested number of spectral directions
    h_thres    entropy gate threshold, nats
    alpha_max  upper bound of the adaptive scaling factor (> 1)
    gamma      damping factor for the residual component, in (0, 1]
    s_h, s_d   sensitivity scales of the entropy / gap terms
    h_0, d_0   centering points of the entropy / gap terms
    epsilon    additive constant inside the entropy logarithm
    svd_tol    degenerate-buffer cutoff for the leading singular value
    """

    k: int = 512
    window: int = 16
    rank: int = 8
    h_thres: float = 0.5
    alpha_max: float = 1.5
    gamma: float = 0.85
    s_h: float = 0.5
    s_d: float = 1.0
    h_0: float = 0.0
    d_0: float = 2.0
    epsilon: float = 1e-12
    svd_tol: float = 1e-10

    def __post_init__(self):
        for name in _INT_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value}")
        if not (math.isfinite(self.h_thres) and self.h_thres >= 0.0):
            raise ConfigError(f"h_thres must be finite and >= 0, got {self.h_thres}")
        if not (math.isfinite(self.alpha_max) and self.alpha_max > 1.0):
            raise ConfigError(f"alpha_max must be > 1, got {self.alpha_max}")
        if not 0.0 < self.gamma <= 1.0:
            raise ConfigError(f"gamma must be in (0, 1], got {self.gamma}")
        for name in ("s_h", "s_d", "epsilon", "svd_tol"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigError(f"{name} must be finite and > 0, got {value}")
        for name in ("h_0", "d_0"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite, got {getattr(self, name)}")

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "SlsConfig":
        """Build a config from string-keyed values, e.g. a parsed config file."""
        known = cls.field_names()
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r} (expected one of {', '.join(known)})")
            try:
                kwargs[key] = int(raw) if key in _INT_FIELDS else float(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"config key {key!r} has invalid value {raw!r}") from exc
        return cls(**kwargs)

    def as_dict(self) -> dict[str, int | float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class TopKSlice:
    """One decode step's retained logits and their vocabulary ids.

    Extraction produces values in descending order; adjusted slices returned
    by :func:`sls_step` keep positional correspondence with the original
    indices and are deliberately not re-sorted.
    """

    values: np.ndarray
    indices: np.ndarray
    step: int = 0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        if values.ndim != 1 or indices.ndim != 1:
            raise InputError("values and indices must be 1-D")
        if values.shape != indices.shape:
            raise InputError(
                f"values length {values.size} != indices length {indices.size}"
            )
        if values.size == 0:
            raise InputError("slice must hold at least one logit")
        if not np.isfinite(values).all():
            raise InputError("slice values must be finite")
        if indices.min() < 0:
            raise InputError("vocabulary indices must be non-negative")
        if np.unique(indices).size != indices.size:
            raise InputError("vocabulary indices must be distinct")
        if self.step < 0:
            raise InputError(f"step must be non-negative, got {self.step}")
        values.setflags(write=False)
        indices.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "indices", indices)

    @property
    def k(self) -> int:
        return self.values.size

    def with_values(self, values: np.ndarray) -> "TopKSlice":
        """Same indices and step, new values (positional correspondence)."""
        return TopKSlice(values=values, indices=self.indices, step=self.step)


class SlidingLogitBuffer:
    """FIFO of the last <= capacity stored per-step value rows (oldest first).

    Pushing at capacity evicts exactly the oldest row.  A gated step later
    overwrites the newest row with its adjusted values, so the buffer holds
    whatever was actually used downstream.
    """

    def __init__(self, capacity: int):
        if not isinstance(capacity, (int, np.integer)) or capacity < 1:
            raise ConfigError(f"capacity must be a positive integer, got {capacity}")
        self.capacity = int(capacity)
        self._rows: deque[np.ndarray] = deque(maxlen=self.capacity)

    def __len__(self) -> int:
        return len(self._rows)

    def __iter__(self) -> Iterator[np.ndarray]:
        return iter(self._rows)

    @property
    def rows(self) -> tuple[np.ndarray, ...]:
        return tuple(self._rows)

    def as_matrix(self) -> np.ndarray:
        if not self._rows:
            raise InputError("buffer is empty")
        return np.asarray(self._rows, dtype=np.float64)

    def push(self, values: np.ndarray) -> None:
        row = np.array(values, dtype=np.float64, copy=True)
        if row.ndim != 1:
            raise InputError("buffer rows must be 1-D")
        if self._rows and row.size != self._rows[0].size:
            raise InputError(
                f"row length {row.size} != buffer row length {self._rows[0].size}"
            )
        row.setflags(write=False)
        self._rows.append(row)

    def overwrite_newest(self, values: np.ndarray) -> None:
        if not self._rows:
            raise InputError("cannot overwrite newest row of an empty buffer")
        row = np.array(values, dtype=np.float64, copy=True)
        if row.shape != self._rows[-1].shape:
            raise InputError("replacement row has mismatched length")
        row.setflags(write=False)
        self._rows[-1] = row

    def clear(self) -> None:
        self._rows.clear()


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step telemetry of one pass through :func:`sls_step`.

    alpha, m_eff and singular_values are None whenever the gate did not
    fire; entropy_post then equals entropy_pre bit-for-bit.
    """

    step: int
    entropy_pre: float
    gap: float
    gate_fired: bool
    alpha: float | None
    m_eff: int | None
    singular_values: tuple[float, ...] | None
    entropy_post: float

    def to_mapping(self) -> dict[str, object]:
        return {
            "step": self.step,
            "entropy_pre": self.entropy_pre,
            "gap": self.gap,
            "gate_fired": self.gate_fired,
            "alpha": self.alpha,
            "m_eff": self.m_eff,
            "singular_values": None
            if self.singular_values is None
            else list(self.singular_values),
            "entropy_post": self.entropy_post,
        }


def extract_top_k(full_logits, k: int, step: int = 0) -> TopKSlice:
    """The k largest logits in descending order with their vocabulary ids.

    Ties are broken toward the lower vocabulary index, so extraction is
    deterministic for any input.
    """
    full = np.ascontiguousarray(full_logits, dtype=np.float64)
    if full.ndim != 1:
        raise InputError(f"logits must be 1-D, got shape {full.shape}")
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ConfigError(f"k must be a positive integer, got {k}")
    if full.size < k:
        raise ConfigError(f"k={k} exceeds vocab_size={full.size}")
    if not np.isfinite(full).all():
        raise InputError("logits must be finite")
    # stable sort on the negated values keeps ties in ascending-index order
    order = np.argsort(-full, kind="stable")[:k]
    return TopKSlice(values=full[order], indices=order, step=step)


def compute_entropy(values, epsilon: float) -> float:
    """Entropy in nats of the softmax distribution over ``values``.

    Uses max-subtraction for overflow safety and the smoothed logarithm
    log(p + epsilon) exactly as configured; the result may therefore dip a
    hair below zero (about -epsilon) for a one-hot distribution.
    """
    if not epsilon > 0.0:
        raise ConfigError(f"epsilon must be > 0, got {epsilon}")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"values must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise InputError("values must be finite")
    shifted = np.exp(v - v.max())
    p = shifted / shifted.sum()
    return float(-(p * np.log(p + epsilon)).sum())


def logit_gap(slice_: TopKSlice) -> float:
    """Difference between the two largest logits of a descending slice.

    Assumes extraction order (values descending).  A single-logit slice has
    a gap of +inf by convention: confidence is maximal.
    """
    if slice_.k == 1:
        return math.inf
    return float(slice_.values[0] - slice_.values[1])


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def adaptive_alpha(h: float, gap: float, config: SlsConfig) -> float:
    """Scaling factor in (1, alpha_max), driven by entropy and top-2 gap.

    Monotone non-decreasing in ``h`` and in ``gap``.  A +inf gap is treated
    as the limit (alpha_max); for finite arguments the value is strictly
    inside the interval, up to float64 sigmoid saturation beyond
    |argument| of roughly 37.
    """
    if not math.isfinite(h):
        raise InputError(f"entropy must be finite, got {h}")
    if math.isnan(gap) or gap == -math.inf:
        raise InputError(f"gap must be finite or +inf, got {gap}")
    argument = (h - config.h_0) / config.s_h - (config.d_0 - gap) / config.s_d
    return 1.0 + _sigmoid(argument) * (config.alpha_max - 1.0)


def sls_step(
    slice_: TopKSlice, buffer: SlidingLogitBuffer, config: SlsConfig
) -> tuple[TopKSlice, StepDiagnostics]:
    """Run one decode step through the gate/rescale pipeline.

    The raw values are pushed first, so at decomposition time the buffer
    holds the current step like its formulation requires; on a gated step
    the newest row is then overwritten with the adjusted values.  When the
    gate does not fire (low entropy, fewer than two rows, or a degenerate
    buffer) the input slice is returned unchanged.
    """
    if slice_.k != config.k:
        raise InputError(f"slice k={slice_.k} does not match config k={config.k}")
    if buffer.capacity != config.window:
        raise InputError(
            f"buffer capacity {buffer.capacity} does not match config window {config.window}"
        )

    buffer.push(slice_.values)
    entropy_pre = compute_entropy(slice_.values, config.epsilon)
    gap = logit_gap(slice_)

    basis = None
    if entropy_pre > config.h_thres and len(buffer) >= 2:
        basis = spectral_basis(center_buffer(buffer.as_matrix()), config.rank, config.svd_tol)

    if basis is None:
        diagnostics = StepDiagnostics(
            step=slice_.step,
            entropy_pre=entropy_pre,
            gap=gap,
            gate_fired=False,
            alpha=None,
            m_eff=None,
            singular_values=None,
            entropy_post=entropy_pre,
        )
        return slice_, diagnostics

    alpha = adaptive_alpha(entropy_pre, gap, config)
    in_span, residual = project_split(slice_.values, basis)
    adjusted_values = recombine(in_span, residual, alpha, config.gamma)
    buffer.overwrite_newest(adjusted_values)
    diagnostics = StepDiagnostics(
        step=slice_.step,
        entropy_pre=entropy_pre,
        gap=gap,
        gate_fired=True,
        alpha=alpha,
        m_eff=basis.m_eff,
        singular_values=tuple(float(s) for s in basis.singular_values),
        entropy_post=compute_entropy(adjusted_values, config.epsilon),
    )
    return slice_.with_values(adjusted_values), diagnostics


def scatter_adjusted(adjusted: TopKSlice, vocab_size: int) -> np.ndarray:
    """Spread a slice back over the full vocabulary, masking everything else.

    Positions not covered by the slice get -inf so downstream softmax
    sampling assigns them probability exactly zero.
    """
    if not isinstance(vocab_size, (int, np.integer)) or vocab_size < 1:
        raise InputError(f"vocab_size must be a positive integer, got {vocab_size}")
    if int(adjusted.indices.max()) >= vocab_size:
        raise InputError(
            f"index {int(adjusted.indices.max())} out of range for vocab_size {vocab_size}"
        )
    full = np.full(int(vocab_size), -np.inf, dtype=np.float64)
    full[adjusted.indices] = adjusted.values
    return full
