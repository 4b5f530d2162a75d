"""Bit-exact logit trace persistence plus a character-level Markov source
for generating synthetic autoregressive streams.

Trace files are UTF-8 line-delimited JSON (extension ``.slstrace.jsonl``):
line 1 holds the header object, every following line one step record.
Values are stored at 32-bit precision as the shortest decimal that
round-trips through float32, and are widened back to float64 on load, so
write -> read -> write reproduces a byte-identical file.
"""

from __future__ import annotations

import bisect
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .baselines import greedy_select
from .core import TopKSlice, extract_top_k
from .errors import ConfigError, InputError, TraceParseError, ValidationError
from .rng import CounterRng

__all__ = [
    "TRACE_SUFFIX",
    "TraceHeader",
    "TraceRecord",
    "MarkovSource",
    "UnknownContextWarning",
    "format_trace",
    "write_trace",
    "read_trace",
    "fit_markov",
    "markov_logits",
    "generate_stream",
    "sample_categorical",
]

TRACE_SUFFIX = ".slstrace.jsonl"
_FORMAT_VERSION = 1
_SAMPLERS = ("greedy", "categorical")


class UnknownContextWarning(UserWarning):
    """A context character outside the fitted vocabulary was remapped."""


@dataclass(frozen=True)
class TraceHeader:
    vocab_size: int
    k: int
    source_label: str
    seed: int
    format_version: int = _FORMAT_VERSION

    def __post_init__(self):
        if self.format_version != _FORMAT_VERSION:
            raise ValidationError(
                f"unsupported trace format_version {self.format_version} (expected {_FORMAT_VERSION})"
            )
        if not isinstance(self.vocab_size, (int, np.integer)) or self.vocab_size < 1:
            raise ValidationError(f"vocab_size must be a positive integer, got {self.vocab_size}")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValidationError(f"k must be a positive integer, got {self.k}")
        if self.k > self.vocab_size:
            raise ValidationError(f"k={self.k} exceeds vocab_size={self.vocab_size}")
        if not isinstance(self.source_label, str):
            raise ValidationError("source_label must be a string")
        if not 0 <= self.seed < (1 << 64):
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class TraceRecord:
    """One step's stored top-K slice; values are float32 on disk."""

    step: int
    indices: np.ndarray
    values: np.ndarray
    chosen_token: int | None = None

    def __post_init__(self):
        indices = np.ascontiguousarray(self.indices, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if indices.ndim != 1 or values.ndim != 1 or indices.shape != values.shape:
            raise ValidationError(
                f"record at step {self.step}: indices/values must be 1-D of equal length"
            )
        indices.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "values", values)

    def validate_against(self, header: TraceHeader) -> None:
        tag = f"record at step {self.step}"
        if self.step < 0:
            raise ValidationError(f"{tag}: step must be non-negative")
        if self.values.size != header.k:
            raise ValidationError(
                f"{tag}: holds {self.values.size} values, header k is {header.k}"
            )
        if not np.isfinite(self.values).all():
            raise ValidationError(f"{tag}: values must be finite")
        if not np.isfinite(self.values.astype(np.float32)).all():
            raise ValidationError(f"{tag}: values overflow 32-bit storage")
        if np.any(np.diff(self.values) > 0.0):
            raise ValidationError(f"{tag}: values must be sorted non-increasing")
        if np.unique(self.indices).size != self.indices.size:
            raise ValidationError(f"{tag}: duplicate vocabulary indices")
        if self.indices.min() < 0 or self.indices.max() >= header.vocab_size:
            raise ValidationError(
                f"{tag}: indices out of range for vocab_size {header.vocab_size}"
            )
        if self.chosen_token is not None and not (
            0 <= self.chosen_token < header.vocab_size
        ):
            raise ValidationError(
                f"{tag}: chosen_token {self.chosen_token} out of range"
            )


def _format_f32(x: float) -> str:
    """Shortest decimal uniquely identifying the float32 rounding of x."""
    return np.format_float_positional(np.float32(x), unique=True, trim="0")


def _header_line(header: TraceHeader) -> str:
    return (
        f'{{"format_version":{header.format_version}'
        f',"vocab_size":{header.vocab_size}'
        f',"k":{header.k}'
        f',"source_label":{json.dumps(header.source_label, ensure_ascii=False)}'
        f',"seed":{header.seed}}}'
    )


def _record_line(record: TraceRecord) -> str:
    indices = ",".join(str(int(i)) for i in record.indices)
    values = ",".join(_format_f32(v) for v in record.values)
    chosen = "null" if record.chosen_token is None else str(int(record.chosen_token))
    return (
        f'{{"step":{record.step},"indices":[{indices}]'
        f',"values":[{values}],"chosen_token":{chosen}}}'
    )


def format_trace(header: TraceHeader, records) -> list[str]:
    """Validate records against the header and render the trace lines."""
    records = list(records)
    for record in records:
        record.validate_against(header)
    return [_header_line(header)] + [_record_line(r) for r in records]


def write_trace(path, header: TraceHeader, records) -> None:
    """Write header + records as line-delimited JSON; rewrite is byte-stable."""
    lines = format_trace(header, records)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
        fh.flush()


def _widen_values(raw) -> np.ndarray:
    # disk precision is float32; widen so downstream math runs at 64-bit
    return np.asarray(raw, dtype=np.float64).astype(np.float32).astype(np.float64)


def read_trace(path) -> tuple[TraceHeader, list[TraceRecord]]:
    """Parse and validate a trace file; rejects any format_version != 1."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise TraceParseError("empty trace file", line_number=1)

    def parse(line: str, line_number: int) -> dict:
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise TraceParseError(f"malformed JSON: {exc.msg}", line_number=line_number) from exc
        if not isinstance(obj, dict):
            raise TraceParseError("expected a JSON object", line_number=line_number)
        return obj

    head = parse(lines[0], 1)
    try:
        header = TraceHeader(
            vocab_size=head["vocab_size"],
            k=head["k"],
            source_label=head["source_label"],
            seed=head["seed"],
            format_version=head.get("format_version", -1),
        )
    except KeyError as exc:
        raise ValidationError(f"trace header missing field {exc.args[0]!r}") from exc

    records: list[TraceRecord] = []
    previous_step = -1
    for line_number, line in enumerate(lines[1:], start=2):
        obj = parse(line, line_number)
        try:
            record = TraceRecord(
                step=obj["step"],
                indices=np.asarray(obj["indices"], dtype=np.int64),
                values=_widen_values(obj["values"]),
                chosen_token=obj.get("chosen_token"),
            )
        except KeyError as exc:
            raise TraceParseError(
                f"record missing field {exc.args[0]!r}", line_number=line_number
            ) from exc
        record.validate_against(header)
        if record.step <= previous_step:
            raise ValidationError(
                f"record at step {record.step}: steps must be strictly increasing"
            )
        previous_step = record.step
        records.append(record)
    return header, records


@dataclass(frozen=True)
class MarkovSource:
    """Additively smoothed character n-gram model fit from a corpus.

    ``counts`` maps each observed context (string of length ``order``) to a
    count vector over the vocabulary; unseen contexts fall back to the
    all-zero row, i.e. the uniform smoothed distribution.
    """

    order: int
    vocab: tuple[str, ...]
    counts: dict[str, np.ndarray]
    smoothing: float

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def conditional(self, context: str) -> np.ndarray:
        row = self.counts.get(context)
        if row is None:
            row = np.zeros(self.vocab_size, dtype=np.float64)
        return (row + self.smoothing) / (row.sum() + self.smoothing * self.vocab_size)


def fit_markov(text: str, order: int, smoothing: float) -> MarkovSource:
    """Count all (context, next-char) transitions of the given order.

    order=0 fits the unigram character distribution.
    """
    if not isinstance(order, (int, np.integer)) or order < 0:
        raise ConfigError(f"order must be a non-negative integer, got {order}")
    if not smoothing > 0.0:
        raise ConfigError(f"smoothing must be > 0, got {smoothing}")
    if len(text) <= order:
        raise InputError(
            f"text length {len(text)} is too short for order {order}"
        )
    vocab = tuple(sorted(set(text)))
    index_of = {c: i for i, c in enumerate(vocab)}
    counts: dict[str, np.ndarray] = {}
    for i in range(len(text) - order):
        context = text[i : i + order]
        row = counts.get(context)
        if row is None:
            row = counts.setdefault(context, np.zeros(len(vocab), dtype=np.float64))
        row[index_of[text[i + order]]] += 1.0
    return MarkovSource(order=int(order), vocab=vocab, counts=counts, smoothing=float(smoothing))


def _map_to_vocab(source: MarkovSource, context: str) -> str:
    """Replace characters outside the vocabulary by the nearest codepoint."""
    ordinals = [ord(c) for c in source.vocab]
    mapped = []
    remapped_any = False
    for ch in context:
        if ch in source.vocab:
            mapped.append(ch)
            continue
        pos = bisect.bisect_left(ordinals, ord(ch))
        candidates = []
        if pos > 0:
            candidates.append(source.vocab[pos - 1])
        if pos < len(ordinals):
            candidates.append(source.vocab[pos])
        nearest = min(candidates, key=lambda c: (abs(ord(c) - ord(ch)), ord(c)))
        mapped.append(nearest)
        remapped_any = True
    if remapped_any:
        warnings.warn(
            "context contains characters outside the fitted vocabulary; "
            "remapped to nearest codepoints",
            UnknownContextWarning,
            stacklevel=3,
        )
    return "".join(mapped)


def markov_logits(source: MarkovSource, context: str) -> np.ndarray:
    """Log of the smoothed conditional distribution for the trailing context."""
    if len(context) < source.order:
        raise InputError(
            f"context length {len(context)} shorter than order {source.order}"
        )
    tail = context[len(context) - source.order :] if source.order else ""
    if any(ch not in source.vocab for ch in tail):
        tail = _map_to_vocab(source, tail)
    return np.log(source.conditional(tail))


def sample_categorical(values: np.ndarray, rng: CounterRng) -> int:
    """Position sampled from softmax(values) using one unit draw.

    The cumulative sums are plain sequential float64 additions and the
    chosen position is the first whose cumulative mass exceeds the draw,
    so any implementation following this recipe reproduces the stream.
    """
    shifted = np.exp(values - values.max())
    p = shifted / shifted.sum()
    cumulative = np.cumsum(p)
    u = rng.next_unit()
    position = int(np.searchsorted(cumulative, u, side="right"))
    return min(position, values.size - 1)


def generate_stream(
    source: MarkovSource,
    length: int,
    k: int,
    seed: int,
    sampler: str = "categorical",
) -> list[TraceRecord]:
    """Autoregressively generate ``length`` steps of top-k slices.

    The initial context is the lowest vocabulary character repeated
    ``order`` times.  Greedy sampling consumes no randomness; categorical
    sampling consumes exactly one counter draw per step.
    """
    if length < 1:
        raise InputError(f"length must be >= 1, got {length}")
    if sampler not in _SAMPLERS:
        raise ConfigError(
            f"unknown sampler {sampler!r} (expected one of {', '.join(_SAMPLERS)})"
        )
    if k > source.vocab_size:
        raise ConfigError(f"k={k} exceeds vocab_size={source.vocab_size}")

    rng = CounterRng(seed)
    context = source.vocab[0] * source.order
    records: list[TraceRecord] = []
    for step in range(length):
        full = markov_logits(source, context)
        slice_ = extract_top_k(full, k, step=step)
        if sampler == "greedy":
            chosen = greedy_select(slice_)
        else:
            chosen = int(slice_.indices[sample_categorical(slice_.values, rng)])
        records.append(
            TraceRecord(
                step=step,
                indices=slice_.indices,
                values=slice_.values,
                chosen_token=chosen,
            )
        )
        if source.order:
            context = (context + source.vocab[chosen])[-source.order :]
    return records
