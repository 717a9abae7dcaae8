"""Monte Carlo experiment harness: sweeps over device or channel counts.

A sweep runs every (seed, swept value, algorithm) cell: it generates the
scenario, fixes the upload deadline (by default with the best-gain rule,
once per scenario and shared by all algorithms of that cell), simulates
the full protocol round, and records one result row.  Rows are emitted in
(seed, value, algorithm) order and the whole run is a pure function of the
spec, so the CSV is reproducible byte for byte.

Exhaustive-search cells that exceed the enumeration cap are recorded as
skips, not failures.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, kernels
from .allocate import DEFAULT_EXHAUSTIVE_CAP, SearchSpaceError, get_allocator
from .protocol import run_round
from .scenario import GENERATOR_NAME, GenSpec, generate

CSV_COLUMNS = ("seed", "m", "n", "algorithm", "d_tx", "d_cpu", "d_total",
               "received_samples", "dropped_count", "k_r", "iterations")

DEFAULT_ALGORITHMS = ("dd-maxh", "max-h", "min-h", "spdm")
DEFAULT_SEEDS = tuple(range(1, 101))
DEFAULT_N_GRID = (2, 3, 4, 6, 8, 12, 16)


@dataclass
class SweepSpec:
    """What to sweep and how.

    variable is "m" (device count, channel count fixed by base) or "n"
    (channel count, device count fixed by base).  deadline_s of None means
    the best-gain rule is applied per scenario; a number fixes the same
    deadline everywhere.
    """

    variable: str
    values: tuple[int, ...]
    base: GenSpec = field(default_factory=GenSpec)
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    deadline_s: float | None = None
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP

    def validate(self) -> None:
        if self.variable not in ("m", "n"):
            raise ValueError(f"variable must be 'm' or 'n', got {self.variable!r}")
        if not self.values:
            raise ValueError("values must be non-empty")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError(f"values must be strictly increasing, got {self.values}")
        if any(v < 1 for v in self.values):
            raise ValueError(f"values must be positive, got {self.values}")
        if not self.algorithms:
            raise ValueError("at least one algorithm is required")
        for name in self.algorithms:
            get_allocator(name)
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if self.deadline_s is not None and self.deadline_s < 0:
            raise ValueError(f"deadline_s must be >= 0, got {self.deadline_s}")


@dataclass
class SweepRow:
    seed: int
    m: int
    n: int
    algorithm: str
    d_tx: float
    d_cpu: float
    d_total: float
    received_samples: int
    dropped_count: int
    k_r: int
    iterations: int


@dataclass
class SweepResult:
    rows: list[SweepRow]
    skips: list[dict]
    metadata: dict


def _spec_echo(spec: SweepSpec) -> dict:
    return dataclasses.asdict(spec)  # recurses into GenSpec and TrainingParams


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Run all cells of the sweep; deterministic given the spec."""
    spec.validate()
    rows: list[SweepRow] = []
    skips: list[dict] = []
    for seed in spec.seeds:
        for value in spec.values:
            gen_spec = dataclasses.replace(
                spec.base,
                seed=seed,
                num_devices=value if spec.variable == "m" else spec.base.num_devices,
                num_channels=value if spec.variable == "n" else spec.base.num_channels,
            )
            scenario = generate(gen_spec)
            if spec.deadline_s is not None:
                scenario = scenario.with_deadline(spec.deadline_s)
            for algorithm in spec.algorithms:
                kwargs = {"eval_cap": spec.exhaustive_cap} if algorithm == "exhaustive" else {}
                try:
                    trace = run_round(scenario, algorithm, **kwargs)
                except SearchSpaceError as exc:
                    skips.append({"seed": seed, "m": gen_spec.num_devices,
                                  "n": gen_spec.num_channels, "algorithm": algorithm,
                                  "reason": str(exc)})
                    continue
                report = trace.report
                decision = next(e for e in trace.events if e.kind == "ALLOCATION_DECISION")
                rows.append(SweepRow(
                    seed=seed,
                    m=gen_spec.num_devices,
                    n=gen_spec.num_channels,
                    algorithm=algorithm,
                    d_tx=report.d_tx,
                    d_cpu=report.d_cpu,
                    d_total=report.d_total,
                    received_samples=report.received_samples,
                    dropped_count=int(gen_spec.num_devices - report.received_mask.sum()),
                    k_r=report.k_r,
                    iterations=decision.payload["iterations"],
                ))
    metadata = {
        "generator": GENERATOR_NAME,
        "version": __version__,
        "backend": kernels.backend_name(),
        "spec": _spec_echo(spec),
        "skips": skips,
    }
    return SweepResult(rows=rows, skips=skips, metadata=metadata)


# ---------------------------------------------------------------------------
# CSV emission (period decimal separator, newline-terminated, header first)


def _cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(rows) -> str:
    out = io.StringIO()
    out.write(",".join(CSV_COLUMNS) + "\n")
    for row in rows:
        out.write(",".join(_cell(getattr(row, column)) for column in CSV_COLUMNS) + "\n")
    return out.getvalue()


def write_results(result: SweepResult, out_dir) -> tuple[str, str]:
    """Write results.csv and metadata.json into out_dir; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, "results.csv")
    meta_path = os.path.join(out_dir, "metadata.json")
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(result.rows))
    with open(meta_path, "w", encoding="utf-8") as fh:
        json.dump(result.metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, meta_path


def read_results_csv(path) -> list[SweepRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing CSV columns {sorted(missing)}")
        for record in reader:
            rows.append(SweepRow(
                seed=int(record["seed"]),
                m=int(record["m"]),
                n=int(record["n"]),
                algorithm=record["algorithm"],
                d_tx=float(record["d_tx"]),
                d_cpu=float(record["d_cpu"]),
                d_total=float(record["d_total"]),
                received_samples=int(record["received_samples"]),
                dropped_count=int(record["dropped_count"]),
                k_r=int(record["k_r"]),
                iterations=int(record["iterations"]),
            ))
    return rows


# ---------------------------------------------------------------------------
# Summaries

SUMMARY_COLUMNS = ("m", "n", "algorithm", "rows",
                   "mean_d_total", "std_d_total", "min_d_total", "max_d_total",
                   "mean_d_tx", "std_d_tx", "min_d_tx", "max_d_tx",
                   "mean_d_cpu", "std_d_cpu", "min_d_cpu", "max_d_cpu",
                   "drop_rate")


def summarize(rows) -> list[dict]:
    """Per (m, n, algorithm): mean/std/min/max of the delay columns and the
    fraction of device datasets dropped.  Standard deviations are
    population standard deviations (zero for a single row)."""
    if not rows:
        raise ValueError("cannot summarize an empty result")
    groups: dict[tuple, list[SweepRow]] = {}
    for row in rows:
        groups.setdefault((row.m, row.n, row.algorithm), []).append(row)
    summaries = []
    for (m, n, algorithm) in sorted(groups):
        members = groups[(m, n, algorithm)]
        entry = {"m": m, "n": n, "algorithm": algorithm, "rows": len(members)}
        for column in ("d_total", "d_tx", "d_cpu"):
            data = np.array([getattr(r, column) for r in members], dtype=np.float64)
            entry[f"mean_{column}"] = float(data.mean())
            entry[f"std_{column}"] = float(data.std())
            entry[f"min_{column}"] = float(data.min())
            entry[f"max_{column}"] = float(data.max())
        dropped = sum(r.dropped_count for r in members)
        total = sum(r.m for r in members)
        entry["drop_rate"] = dropped / total
        summaries.append(entry)
    return summaries


def render_summary_csv(summaries) -> str:
    out = io.StringIO()
    out.write(",".join(SUMMARY_COLUMNS) + "\n")
    for entry in summaries:
        out.write(",".join(_cell(entry[column]) for column in SUMMARY_COLUMNS) + "\n")
    return out.getvalue()


def format_summary_table(summaries) -> str:
    """Aligned text table of the headline statistics."""
    header = ("m", "n", "algorithm", "rows", "d_total mean", "d_total std",
              "d_tx mean", "d_cpu mean", "drop_rate")
    body = [(str(e["m"]), str(e["n"]), e["algorithm"], str(e["rows"]),
             f"{e['mean_d_total']:.4f}", f"{e['std_d_total']:.4f}",
             f"{e['mean_d_tx']:.6f}", f"{e['mean_d_cpu']:.4f}",
             f"{e['drop_rate']:.4f}") for e in summaries]
    widths = [max(len(header[i]), *(len(row[i]) for row in body)) for i in range(len(header))]
    lines = ["  ".join(header[i].rjust(widths[i]) for i in range(len(header)))]
    lines.append("  ".join("-" * w for w in widths))
    for row in body:
        lines.append("  ".join(row[i].rjust(widths[i]) for i in range(len(header))))
    return "\n".join(lines)


def parse_sweep_argument(text: str) -> tuple[str, tuple[int, ...]]:
    """Parse a CLI sweep argument: 'm=4..10' or 'n=2,3,4,6,8,12,16'."""
    if "=" not in text:
        raise ValueError(f"sweep must look like m=<a>..<b> or n=<list>, got {text!r}")
    variable, _, values_text = text.partition("=")
    variable = variable.strip().lower()
    if variable not in ("m", "n"):
        raise ValueError(f"sweep variable must be 'm' or 'n', got {variable!r}")
    values_text = values_text.strip()
    try:
        if ".." in values_text:
            lo_text, _, hi_text = values_text.partition("..")
            lo, hi = int(lo_text), int(hi_text)
            if hi < lo:
                raise ValueError
            values = tuple(range(lo, hi + 1))
        else:
            values = tuple(int(tok) for tok in values_text.split(","))
    except ValueError:
        raise ValueError(f"could not parse sweep values from {values_text!r}") from None
    if not values:
        raise ValueError("sweep needs at least one value")
    return variable, values
