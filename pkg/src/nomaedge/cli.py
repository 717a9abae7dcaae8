"""Command-line interface.

Verbs:
    run        - execute a Monte Carlo sweep and write results.csv + metadata.json
    summarize  - aggregate a results.csv into per-cell statistics
    trace      - print the event trace of a single simulated round

Exit codes: 0 success, 1 validation error (bad arguments or configuration),
2 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

from . import __version__
from .allocate import ALGORITHMS
from .protocol import run_round, serialize_trace
from .scenario import GENERATOR_NAME, GenSpec, ScenarioError, TrainingParams, generate
from .sweep import (SweepSpec, format_summary_table, parse_sweep_argument,
                    read_results_csv, render_summary_csv, run_sweep, summarize,
                    write_results)
from . import kernels


class CliError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so usage errors map to exit 1."""

    def error(self, message):
        raise CliError(message)


_CONFIG_KEYS = {
    "m": ("num_devices", int),
    "n": ("num_channels", int),
    "h_min": ("h_min", float),
    "h_max": ("h_max", float),
    "mean_dataset_bits": ("mean_dataset_bits", float),
    "bits_per_sample": ("bits_per_sample", float),
    "bandwidth_hz": ("bandwidth_hz", float),
    "noise_w": ("noise_w", float),
    "power_w": ("power_w", float),
}
_TRAINING_KEYS = {
    "batch_size": float,
    "compute_rate": float,
    "alpha": float,
    "sigma": float,
    "round_cap": int,
}


def load_gen_config(path) -> GenSpec:
    """Flat key = value file overriding GenSpec defaults (grammar in README)."""
    overrides = {}
    training = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ScenarioError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            key = key.lower()
            if key in _CONFIG_KEYS:
                field_name, converter = _CONFIG_KEYS[key]
            elif key in _TRAINING_KEYS:
                field_name, converter = key, _TRAINING_KEYS[key]
            else:
                raise ScenarioError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                converted = converter(value)
            except ValueError:
                raise ScenarioError(f"{path}:{lineno}: bad value for {key!r}: {value!r}") from None
            if key in _CONFIG_KEYS:
                overrides[field_name] = converted
            else:
                training[field_name] = converted
    return GenSpec(training=TrainingParams(**training), **overrides)


def _parse_deadline(text: str) -> float | None:
    if text.strip().lower() == "maxh":
        return None
    try:
        value = float(text)
    except ValueError:
        raise CliError(f"--deadline must be 'maxh' or a number of seconds, got {text!r}") from None
    if value < 0:
        raise CliError(f"--deadline must be >= 0, got {value}")
    return value


def _parse_algorithms(text: str) -> tuple[str, ...]:
    names = tuple(tok.strip() for tok in text.split(",") if tok.strip())
    for name in names:
        if name not in ALGORITHMS:
            raise CliError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")
    if not names:
        raise CliError("--algorithms needs at least one name")
    return names


def build_parser() -> _Parser:
    parser = _Parser(prog="nomaedge",
                     description="NOMA uplink edge-learning delay simulator")
    parser.add_argument("--metadata", action="store_true",
                        help="print generator name and version, then exit")
    sub = parser.add_subparsers(dest="verb")

    run_p = sub.add_parser("run", help="run a Monte Carlo sweep")
    run_p.add_argument("--config", help="generator config file (key = value)")
    run_p.add_argument("--seed", type=int, default=1, help="first seed (default 1)")
    run_p.add_argument("--seeds", type=int, default=100,
                       help="number of consecutive seeds (default 100)")
    run_p.add_argument("--sweep", required=True,
                       help="m=<a>..<b> or n=<v1,v2,...> (also accepts m=<list>, n=<a>..<b>)")
    run_p.add_argument("--algorithms", default="dd-maxh,max-h,min-h,spdm",
                       help="comma-separated algorithm names")
    run_p.add_argument("--deadline", default="maxh",
                       help="'maxh' (best-gain rule, default) or seconds")
    run_p.add_argument("--out", required=True, help="output directory")

    sum_p = sub.add_parser("summarize", help="summarize a results.csv")
    sum_p.add_argument("--in", dest="in_path", required=True, help="results.csv path")
    sum_p.add_argument("--out", dest="out_path",
                       help="summary CSV path (default: summary.csv next to the input)")

    trace_p = sub.add_parser("trace", help="print one round's event trace")
    trace_p.add_argument("--config", help="generator config file (key = value)")
    trace_p.add_argument("--seed", type=int, default=1)
    trace_p.add_argument("--algorithm", default="dd-maxh", choices=ALGORITHMS)
    trace_p.add_argument("--deadline", default="maxh",
                         help="'maxh' (default) or seconds")
    return parser


def _cmd_run(args) -> int:
    base = load_gen_config(args.config) if args.config else GenSpec()
    if args.seed < 0 or args.seeds < 1:
        raise CliError("--seed must be >= 0 and --seeds >= 1")
    variable, values = parse_sweep_argument(args.sweep)
    spec = SweepSpec(
        variable=variable,
        values=values,
        base=base,
        algorithms=_parse_algorithms(args.algorithms),
        seeds=tuple(range(args.seed, args.seed + args.seeds)),
        deadline_s=_parse_deadline(args.deadline),
    )
    result = run_sweep(spec)
    csv_path, meta_path = write_results(result, args.out)
    print(format_summary_table(summarize(result.rows)))
    if result.skips:
        print(f"skipped {len(result.skips)} cell(s); reasons in {meta_path}")
    print(f"wrote {csv_path} ({len(result.rows)} rows) and {meta_path}")
    return 0


def _cmd_summarize(args) -> int:
    rows = read_results_csv(args.in_path)
    summaries = summarize(rows)
    out_path = args.out_path or os.path.join(os.path.dirname(os.path.abspath(args.in_path)),
                                             "summary.csv")
    with open(out_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_summary_csv(summaries))
    print(format_summary_table(summaries))
    print(f"wrote {out_path}")
    return 0


def _cmd_trace(args) -> int:
    base = load_gen_config(args.config) if args.config else GenSpec()
    scenario = generate(dataclasses.replace(base, seed=args.seed))
    deadline = _parse_deadline(args.deadline)
    if deadline is not None:
        scenario = scenario.with_deadline(deadline)
    trace = run_round(scenario, args.algorithm)
    sys.stdout.write(serialize_trace(trace))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.metadata:
            print(f"nomaedge {__version__} generator={GENERATOR_NAME} "
                  f"backend={kernels.backend_name()}")
            return 0
        if args.verb == "run":
            return _cmd_run(args)
        if args.verb == "summarize":
            return _cmd_summarize(args)
        if args.verb == "trace":
            return _cmd_trace(args)
        parser.print_help()
        return 1
    except (CliError, ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
