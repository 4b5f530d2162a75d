"""Replay, comparison, and benchmarking of decoding transforms over traces.

Reports are line-delimited JSON: one metadata line (method, resolved
configuration, summary), one line per step, and a final timing line.  The
timing line is the only part that varies between identical runs, so byte
comparisons exclude it.  A non-finite gap (single-logit slices) serializes
as null.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import EmInfConfig, entropy_minimize, temperature_scale
from .core import (
    SlidingLogitBuffer,
    SlsConfig,
    StepDiagnostics,
    TopKSlice,
    compute_entropy,
    extract_top_k,
    logit_gap,
    scatter_adjusted,
    sls_step,
)
from .errors import ConfigError, ValidationError
from .rng import CounterRng
from .trace_io import TraceHeader, TraceRecord, sample_categorical

__all__ = [
    "METHODS",
    "SAMPLERS",
    "DEMO_CORPUS",
    "RunReport",
    "CompareResult",
    "run_replay",
    "run_compare",
    "run_bench",
    "serialize_replay_report",
    "serialize_compare_result",
    "serialize_bench_report",
    "render_compare_table",
]

METHODS = ("sls", "identity", "greedy", "temperature", "eminf")
SAMPLERS = ("greedy", "categorical")

# Built-in corpus for --demo runs: pangram-heavy so the character vocabulary
# is large enough for meaningful top-k slices (61 distinct characters).
DEMO_CORPUS = (
    "The quick brown fox jumps over the lazy dog, while 12 ravens watch "
    "from a BIRCH tree; later, 7 foxes (and 3 dogs!) sprint past Quiet "
    "Zebras. Why? Nobody knows: perhaps joy, perhaps hunger. 'Go west,' "
    "said the old Kestrel, 'beyond 89 hills and 406 rivers.' Every vixen "
    "jumped quickly over frozen streams; dawn broke, gold and pale. "
    "Jackdaws love my big sphinx of quartz! Pack my box with five dozen "
    "liquor jugs. How vexingly quick daft zebras jump; 50 mixed up "
    "quizzes lay on the desk."
)


@dataclass
class RunReport:
    """Outcome of replaying one method over one trace."""

    method: str
    sampler: str
    config_echo: dict
    per_step: list[StepDiagnostics]
    tokens: list[int]
    summary: dict
    wall_time_per_step_us: float
    values_post: list[np.ndarray] | None = None


@dataclass
class CompareResult:
    """Side-by-side replays of several methods over the same trace."""

    methods: list[str]
    reports: dict[str, RunReport]
    sls_gate_mask: list[bool]
    config_echo: dict
    summaries: dict[str, dict] = field(default_factory=dict)


def _summarize(per_step: list[StepDiagnostics]) -> dict:
    gated = [d for d in per_step if d.gate_fired]
    alphas = [d.alpha for d in gated if d.alpha is not None]
    return {
        "steps_total": len(per_step),
        "steps_gated": len(gated),
        "mean_entropy_pre": (
            sum(d.entropy_pre for d in per_step) / len(per_step) if per_step else None
        ),
        "mean_entropy_post_on_gated_steps": (
            sum(d.entropy_post for d in gated) / len(gated) if gated else None
        ),
        "mean_alpha_on_gated_steps": (sum(alphas) / len(alphas) if alphas else None),
    }


def _method_settings(method: str, em_config: EmInfConfig, tau: float) -> dict:
    if method == "temperature":
        return {"tau": tau}
    if method == "eminf":
        return {
            "steps": em_config.steps,
            "learning_rate": em_config.learning_rate,
            "entropy_threshold": em_config.entropy_threshold,
        }
    return {}


def _config_echo(config: SlsConfig, method: str, em_config: EmInfConfig, tau: float) -> dict:
    return {"core": config.as_dict(), "method": _method_settings(method, em_config, tau)}


def run_replay(
    header: TraceHeader,
    records: list[TraceRecord],
    method: str,
    *,
    config: SlsConfig | None = None,
    em_config: EmInfConfig | None = None,
    tau: float = 1.0,
    sampler: str = "greedy",
    seed: int = 0,
    dump_values: bool = False,
) -> RunReport:
    """Stream trace records through one transform, sampling a token per step.

    The per-step diagnostics reuse the gate-step record shape for every
    method; gate_fired means "this transform modified the step" (always
    false for identity/greedy, tau != 1 for temperature, threshold
    exceeded for eminf, the entropy/spectral gate for sls).
    """
    config = config or SlsConfig()
    em_config = em_config or EmInfConfig()
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r} (expected one of {', '.join(METHODS)})")
    if sampler not in SAMPLERS:
        raise ConfigError(f"unknown sampler {sampler!r} (expected one of {', '.join(SAMPLERS)})")
    if method == "sls" and config.k != header.k:
        raise ValidationError(
            f"config k={config.k} does not match trace k={header.k}"
        )

    buffer = SlidingLogitBuffer(config.window) if method == "sls" else None
    rng = CounterRng(seed)
    per_step: list[StepDiagnostics] = []
    tokens: list[int] = []
    values_post: list[np.ndarray] | None = [] if dump_values else None

    start_ns = time.perf_counter_ns()
    for record in records:
        slice_ = TopKSlice(values=record.values, indices=record.indices, step=record.step)
        if method == "sls":
            out, diag = sls_step(slice_, buffer, config)
        else:
            entropy_pre = compute_entropy(slice_.values, config.epsilon)
            if method == "temperature":
                out = temperature_scale(slice_, tau)
                fired = tau != 1.0
            elif method == "eminf":
                out = entropy_minimize(slice_, em_config)
                fired = out is not slice_
            else:  # identity, greedy: logits pass through untouched
                out = slice_
                fired = False
            entropy_post = (
                compute_entropy(out.values, config.epsilon) if fired else entropy_pre
            )
            diag = StepDiagnostics(
                step=slice_.step,
                entropy_pre=entropy_pre,
                gap=logit_gap(slice_),
                gate_fired=fired,
                alpha=None,
                m_eff=None,
                singular_values=None,
                entropy_post=entropy_post,
            )
        full = scatter_adjusted(out, header.vocab_size)
        if method == "greedy" or sampler == "greedy":
            token = int(np.argmax(full))
        else:
            token = sample_categorical(full, rng)
        per_step.append(diag)
        tokens.append(token)
        if values_post is not None:
            values_post.append(np.array(out.values, copy=True))
    elapsed_us = (time.perf_counter_ns() - start_ns) / 1000.0

    return RunReport(
        method=method,
        sampler=sampler,
        config_echo=_config_echo(config, method, em_config, tau),
        per_step=per_step,
        tokens=tokens,
        summary=_summarize(per_step),
        wall_time_per_step_us=elapsed_us / max(len(records), 1),
        values_post=values_post,
    )


def run_compare(
    header: TraceHeader,
    records: list[TraceRecord],
    methods: list[str],
    *,
    config: SlsConfig | None = None,
    em_config: EmInfConfig | None = None,
    tau: float = 1.0,
    sampler: str = "greedy",
    seed: int = 0,
) -> CompareResult:
    """Replay every method over the same records.

    The gate mask always comes from a run of the spectral method (reused
    when requested, run silently otherwise) so each method's entropy can be
    compared on exactly the steps where the gate fired.
    """
    config = config or SlsConfig()
    em_config = em_config or EmInfConfig()
    if len(methods) < 2:
        raise ConfigError("compare needs at least two methods")
    for method in methods:
        if method not in METHODS:
            raise ConfigError(
                f"unknown method {method!r} (expected one of {', '.join(METHODS)})"
            )

    reports = {
        method: run_replay(
            header,
            records,
            method,
            config=config,
            em_config=em_config,
            tau=tau,
            sampler=sampler,
            seed=seed,
        )
        for method in dict.fromkeys(methods)
    }
    if "sls" in reports:
        gate_source = reports["sls"]
    else:
        gate_source = run_replay(
            header, records, "sls", config=config, em_config=em_config,
            tau=tau, sampler=sampler, seed=seed,
        )
    mask = [d.gate_fired for d in gate_source.per_step]

    result = CompareResult(
        methods=list(dict.fromkeys(methods)),
        reports=reports,
        sls_gate_mask=mask,
        config_echo={"core": config.as_dict()},
    )
    gated_count = sum(mask)
    for method, report in reports.items():
        posts = [d.entropy_post for d, fired in zip(report.per_step, mask) if fired]
        summary = dict(report.summary)
        summary["mean_entropy_post_on_sls_gated_steps"] = (
            sum(posts) / len(posts) if posts else None
        )
        summary["method_settings"] = _method_settings(method, em_config, tau)
        result.summaries[method] = summary
    result.config_echo["sls_gated_steps"] = gated_count
    return result


def run_bench(
    config: SlsConfig | None = None,
    *,
    steps: int = 10_000,
    mode: str = "gated",
    seed: int = 0,
) -> dict:
    """Measure per-step latency of the core step over synthetic slices.

    ``gated`` mode feeds near-uniform noise (entropy close to log k) with a
    pre-filled buffer so every timed step takes the full spectral path;
    ``off`` mode adds a large top-logit margin so only the entropy gate
    runs.  Slices are built before timing starts.
    """
    config = config or SlsConfig()
    if mode not in ("gated", "off"):
        raise ConfigError(f"unknown bench mode {mode!r} (expected 'gated' or 'off')")
    if steps < 1:
        raise ConfigError(f"steps must be >= 1, got {steps}")

    rng = CounterRng(seed)
    slices = []
    for step in range(steps):
        raw = 0.05 * rng.unit_block(config.k)
        if mode == "off":
            raw[0] += 15.0  # dominant top logit, entropy collapses below any gate
        slices.append(extract_top_k(raw, config.k, step=step))

    buffer = SlidingLogitBuffer(config.window)
    if mode == "gated":
        buffer.push(0.05 * rng.unit_block(config.k))  # warm row: T_b >= 2 from step one

    timings_ns = []
    fired_count = 0
    for slice_ in slices:
        t0 = time.perf_counter_ns()
        _, diag = sls_step(slice_, buffer, config)
        timings_ns.append(time.perf_counter_ns() - t0)
        fired_count += diag.gate_fired

    ordered = sorted(timings_ns)
    n = len(ordered)
    return {
        "mode": mode,
        "steps": steps,
        "seed": seed,
        "config_echo": {"core": config.as_dict()},
        "gated_fraction": fired_count / steps,
        "timing": {
            "median_us": ordered[n // 2] / 1000.0,
            "p99_us": ordered[min(n - 1, math.ceil(0.99 * n) - 1)] / 1000.0,
            "mean_us": sum(ordered) / n / 1000.0,
        },
    }


def _finite_or_none(x: float | None):
    if x is None or not math.isfinite(x):
        return None
    return x


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def _step_line(diag: StepDiagnostics, token: int, values_post: np.ndarray | None) -> str:
    body = diag.to_mapping()
    body["gap"] = _finite_or_none(diag.gap)
    body["token"] = token
    if values_post is not None:
        body["values_post"] = [float(v) for v in values_post]
    return _dumps(body)


def serialize_replay_report(report: RunReport, header: TraceHeader) -> list[str]:
    """Report lines: metadata, one line per step, then the timing line."""
    meta = {
        "report_version": 1,
        "kind": "replay",
        "method": report.method,
        "sampler": report.sampler,
        "trace": {"vocab_size": header.vocab_size, "k": header.k, "seed": header.seed},
        "config_echo": report.config_echo,
        "summary": report.summary,
    }
    lines = [_dumps(meta)]
    for i, diag in enumerate(report.per_step):
        values_post = report.values_post[i] if report.values_post is not None else None
        lines.append(_step_line(diag, report.tokens[i], values_post))
    lines.append(_dumps({"timing": {"wall_time_per_step_us": report.wall_time_per_step_us}}))
    return lines


def serialize_compare_result(result: CompareResult, header: TraceHeader) -> list[str]:
    meta = {
        "report_version": 1,
        "kind": "compare",
        "methods": result.methods,
        "trace": {"vocab_size": header.vocab_size, "k": header.k, "seed": header.seed},
        "config_echo": result.config_echo,
        "summaries": result.summaries,
    }
    timing = {
        "timing": {
            "wall_time_per_step_us": {
                method: result.reports[method].wall_time_per_step_us
                for method in result.methods
            }
        }
    }
    return [_dumps(meta), _dumps(timing)]


def serialize_bench_report(bench: dict) -> list[str]:
    meta = {
        "report_version": 1,
        "kind": "bench",
        "mode": bench["mode"],
        "steps": bench["steps"],
        "seed": bench["seed"],
        "config_echo": bench["config_echo"],
        "gated_fraction": bench["gated_fraction"],
    }
    return [_dumps(meta), _dumps({"timing": bench["timing"]})]


def render_compare_table(result: CompareResult) -> str:
    """Fixed-width text table of the side-by-side summaries."""
    headers = (
        "method",
        "steps",
        "gated",
        "mean_H_pre",
        "mean_H_post@gated",
        "mean_H_post@sls_gated",
        "mean_alpha",
    )
    rows = []
    for method in result.methods:
        s = result.summaries[method]

        def cell(value):
            return "-" if value is None else f"{value:.6f}"

        rows.append(
            (
                method,
                str(s["steps_total"]),
                str(s["steps_gated"]),
                cell(s["mean_entropy_pre"]),
                cell(s["mean_entropy_post_on_gated_steps"]),
                cell(s["mean_entropy_post_on_sls_gated_steps"]),
                cell(s["mean_alpha_on_gated_steps"]),
            )
        )
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(len(headers))))
    return "\n".join(lines)
