"""Command-line front door: record synthetic traces, replay them through the
decoding transforms, compare methods side by side, and benchmark the core
step.

Exit codes are a stable contract: 0 success, 2 usage error, 3 validation
error, 4 numerical error.  The environment variable SLS_LOG (off|info|debug)
controls diagnostics on standard error; reports go to --out or stdout.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from .baselines import EmInfConfig
from .core import SlsConfig
from .errors import (
    ConfigError,
    InputError,
    NumericalError,
    SlsError,
    UsageError,
    ValidationError,
)
from .harness import (
    DEMO_CORPUS,
    METHODS,
    SAMPLERS,
    render_compare_table,
    run_bench,
    run_compare,
    run_replay,
    serialize_bench_report,
    serialize_compare_result,
    serialize_replay_report,
)
from .trace_io import TraceHeader, fit_markov, format_trace, generate_stream, read_trace

log = logging.getLogger("sls")

_CONFIG_FLAGS = {
    "k": int,
    "window": int,
    "rank": int,
    "h_thres": float,
    "alpha_max": float,
    "gamma": float,
    "s_h": float,
    "s_d": float,
    "h_0": float,
    "d_0": float,
    "epsilon": float,
    "svd_tol": float,
}


def _add_shared_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="key=value config file")
    parser.add_argument("--seed", type=int, default=0, help="64-bit unsigned seed")
    parser.add_argument("--out", metavar="PATH", help="output path (default: stdout)")
    group = parser.add_argument_group("core config overrides")
    for name, type_ in _CONFIG_FLAGS.items():
        group.add_argument(f"--{name.replace('_', '-')}", type=type_, default=None)


def _parse_config_file(path: str) -> dict[str, str]:
    mapping: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_number, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}: line {line_number}: expected key=value")
                key, _, value = line.partition("=")
                mapping[key.strip()] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return mapping


def _resolve_config(args) -> tuple[SlsConfig, set[str]]:
    """Built-in defaults < config file < command-line flags."""
    mapping: dict[str, object] = {}
    if args.config:
        mapping.update(_parse_config_file(args.config))
    for name in _CONFIG_FLAGS:
        value = getattr(args, name, None)
        if value is not None:
            mapping[name] = value
    explicit = set(mapping)
    try:
        return SlsConfig.from_mapping(mapping), explicit
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _emit(lines: list[str], out_path: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _check_seed(seed: int) -> int:
    if not 0 <= seed < (1 << 64):
        raise UsageError(f"--seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def _cmd_record(args) -> int:
    config, explicit = _resolve_config(args)
    seed = _check_seed(args.seed)
    if args.demo:
        corpus, label = DEMO_CORPUS, "demo"
    else:
        try:
            with open(args.corpus, "r", encoding="utf-8") as fh:
                corpus = fh.read()
        except OSError as exc:
            raise UsageError(f"cannot read corpus {args.corpus}: {exc}") from exc
        label = os.path.basename(args.corpus)
    try:
        source = fit_markov(corpus, args.order, args.smoothing)
    except (ConfigError, InputError) as exc:
        raise UsageError(str(exc)) from exc

    if "k" in explicit:
        k = config.k
        if k > source.vocab_size:
            raise UsageError(
                f"k={k} exceeds the corpus vocabulary size {source.vocab_size}"
            )
    else:
        k = min(config.k, source.vocab_size)

    log.info(
        "fitted order-%d source over %d characters (vocab %d)",
        args.order, len(corpus), source.vocab_size,
    )
    records = generate_stream(source, args.length, k, seed, args.sampler)
    header = TraceHeader(
        vocab_size=source.vocab_size,
        k=k,
        source_label=args.label or label,
        seed=seed,
    )
    _emit(format_trace(header, records), args.out)
    log.info("wrote %d records (k=%d) to %s", len(records), k, args.out or "<stdout>")
    return 0


def _load_trace(path: str):
    try:
        return read_trace(path)
    except OSError as exc:
        raise UsageError(f"cannot read trace {path}: {exc}") from exc


def _em_config(args) -> EmInfConfig:
    try:
        return EmInfConfig(
            steps=args.em_steps,
            learning_rate=args.em_lr,
            entropy_threshold=args.em_threshold,
        )
    except ConfigError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_replay(args) -> int:
    config, _ = _resolve_config(args)
    seed = _check_seed(args.seed)
    header, records = _load_trace(args.trace)
    report = run_replay(
        header,
        records,
        args.method,
        config=config,
        em_config=_em_config(args),
        tau=args.tau,
        sampler=args.sampler,
        seed=seed,
        dump_values=args.dump_values,
    )
    _emit(serialize_replay_report(report, header), args.out)
    log.info(
        "replayed %d steps with method %s (%d gated)",
        report.summary["steps_total"], args.method, report.summary["steps_gated"],
    )
    return 0


def _cmd_compare(args) -> int:
    config, _ = _resolve_config(args)
    seed = _check_seed(args.seed)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    if len(methods) < 2:
        raise UsageError("--methods needs at least two comma-separated tags")
    for method in methods:
        if method not in METHODS:
            raise UsageError(
                f"unknown method {method!r} (valid tags: {', '.join(METHODS)})"
            )
    header, records = _load_trace(args.trace)
    result = run_compare(
        header,
        records,
        methods,
        config=config,
        em_config=_em_config(args),
        tau=args.tau,
        sampler=args.sampler,
        seed=seed,
    )
    table = render_compare_table(result)
    lines = serialize_compare_result(result, header)
    if args.out:
        _emit(lines, args.out)
        print(table)
    else:
        print(table, file=sys.stderr)
        _emit(lines, None)
    return 0


def _cmd_bench(args) -> int:
    config, _ = _resolve_config(args)
    seed = _check_seed(args.seed)
    bench = run_bench(config, steps=args.steps, mode=args.mode, seed=seed)
    _emit(serialize_bench_report(bench), args.out)
    log.info(
        "bench mode=%s median=%.1fus p99=%.1fus",
        args.mode, bench["timing"]["median_us"], bench["timing"]["p99_us"],
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sls",
        description="Entropy-gated spectral logit reshaping: trace, replay, compare, bench.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_record = sub.add_parser("record", help="fit a Markov source and record a trace")
    src = p_record.add_mutually_exclusive_group(required=True)
    src.add_argument("--demo", action="store_true", help="use the built-in corpus")
    src.add_argument("--corpus", metavar="PATH", help="UTF-8 text corpus to fit")
    p_record.add_argument("--length", type=int, default=256, help="steps to generate")
    p_record.add_argument("--order", type=int, default=2, help="Markov context length")
    p_record.add_argument("--smoothing", type=float, default=0.05, help="additive smoothing")
    p_record.add_argument("--sampler", choices=SAMPLERS, default="categorical")
    p_record.add_argument("--label", default=None, help="source label for the header")
    _add_shared_flags(p_record)
    p_record.set_defaults(func=_cmd_record)

    p_replay = sub.add_parser("replay", help="stream a trace through one method")
    p_replay.add_argument("--trace", required=True, metavar="PATH")
    p_replay.add_argument("--method", required=True, choices=METHODS)
    p_replay.add_argument("--tau", type=float, default=1.0, help="temperature divisor")
    p_replay.add_argument("--em-steps", type=int, default=10)
    p_replay.add_argument("--em-lr", type=float, default=0.1)
    p_replay.add_argument("--em-threshold", type=float, default=0.3)
    p_replay.add_argument("--sampler", choices=SAMPLERS, default="greedy")
    p_replay.add_argument(
        "--dump-values",
        action="store_true",
        help="include post-transform values in every step line",
    )
    _add_shared_flags(p_replay)
    p_replay.set_defaults(func=_cmd_replay)

    p_compare = sub.add_parser("compare", help="replay several methods side by side")
    p_compare.add_argument("--trace", required=True, metavar="PATH")
    p_compare.add_argument(
        "--methods", required=True, help="comma-separated method tags (>= 2)"
    )
    p_compare.add_argument("--tau", type=float, default=1.0)
    p_compare.add_argument("--em-steps", type=int, default=10)
    p_compare.add_argument("--em-lr", type=float, default=0.1)
    p_compare.add_argument("--em-threshold", type=float, default=0.3)
    p_compare.add_argument("--sampler", choices=SAMPLERS, default="greedy")
    _add_shared_flags(p_compare)
    p_compare.set_defaults(func=_cmd_compare)

    p_bench = sub.add_parser("bench", help="measure per-step latency of the core step")
    p_bench.add_argument("--steps", type=int, default=10_000)
    p_bench.add_argument("--mode", choices=("gated", "off"), default="gated")
    _add_shared_flags(p_bench)
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("SLS_LOG", "off").lower()
    levels = {"off": logging.CRITICAL + 10, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        print(f"warning: unknown SLS_LOG value {level_name!r}, using 'off'", file=sys.stderr)
        level_name = "off"
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(levels[level_name])


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage problems
        code = exc.code
        return code if isinstance(code, int) else 2
    _configure_logging()
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except (ValidationError, InputError, ConfigError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SlsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
