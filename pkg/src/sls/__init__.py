"""Entropy-gated spectral reshaping of top-K decoding logits.

The core pipeline keeps a sliding buffer of recent top-K logit rows, and on
high-entropy steps splits the current logits against the buffer's dominant
singular directions, amplifies the in-span part with an adaptive factor, and
damps the residual before sampling.  Baseline transforms (greedy,
temperature, iterative entropy minimization) share the same slice interface,
and a Markov trace harness exercises everything end to end without a model.
"""

from .baselines import EmInfConfig, entropy_minimize, greedy_select, temperature_scale
from .core import (
    SlidingLogitBuffer,
    SlsConfig,
    StepDiagnostics,
    TopKSlice,
    adaptive_alpha,
    compute_entropy,
    extract_top_k,
    logit_gap,
    scatter_adjusted,
    sls_step,
)
from .errors import (
    ConfigError,
    InputError,
    NumericalError,
    SlsError,
    TraceParseError,
    UsageError,
    ValidationError,
)
from .rng import CounterRng
from .spectral import (
    CenteredBuffer,
    SpectralBasis,
    center_buffer,
    project_split,
    recombine,
    spectral_basis,
)
from .trace_io import (
    MarkovSource,
    TraceHeader,
    TraceRecord,
    UnknownContextWarning,
    fit_markov,
    format_trace,
    generate_stream,
    markov_logits,
    read_trace,
    sample_categorical,
    write_trace,
)

__version__ = "0.1.0"

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
    "CenteredBuffer",
    "SpectralBasis",
    "center_buffer",
    "spectral_basis",
    "project_split",
    "recombine",
    "EmInfConfig",
    "greedy_select",
    "temperature_scale",
    "entropy_minimize",
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
    "CounterRng",
    "SlsError",
    "ConfigError",
    "InputError",
    "ValidationError",
    "TraceParseError",
    "NumericalError",
    "UsageError",
]
