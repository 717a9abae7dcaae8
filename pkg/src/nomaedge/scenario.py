"""Problem instances: radio constants, per-device data, and their generation.

A :class:`Scenario` fixes everything the delay model needs: the gain matrix
of M single-antenna devices over N uplink channels, transmit powers, dataset
sizes, the shared channel bandwidth and noise floor, an optional upload
deadline, and the training-stage constants.

:func:`generate` draws scenarios reproducibly.  Gains are sampled
log-uniformly over the configured range (a linear draw over eight decades
would almost never produce a small gain), dataset sizes uniformly within
+/-50% of the configured mean, and sample counts follow from a fixed
bits-per-sample ratio.

Every device owns its own random substream keyed by (seed, stream, device),
so the scenario for (seed, M devices) is a row-prefix of the scenario for
(seed, M+1 devices), and each device's gain row over N channels is a prefix
of its row over N+1 channels.  Sweeps over M or N therefore compare nested
instances, which removes a large chunk of Monte Carlo variance from
cross-size comparisons.  The generator identity is recorded in experiment
metadata; results are only comparable across builds using the same one.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

GENERATOR_NAME = "numpy-pcg64-device-substreams"

# Substream tags under the scenario seed.
_GAIN_STREAM = 0
_DATA_STREAM = 1

# Round count calibration: 20 rounds when the nominal six devices deliver
# 8000 samples each.
NOMINAL_TOTAL_SAMPLES = 6 * 8000
DEFAULT_SIGMA = 1.2
DEFAULT_ALPHA = 20.0 * NOMINAL_TOTAL_SAMPLES ** DEFAULT_SIGMA


class ScenarioError(ValueError):
    """Invalid scenario contents or an unparseable scenario file."""


@dataclass
class TrainingParams:
    """Constants of the training stage at the edge server.

    batch_size and compute_rate are in samples and samples/second.  The
    round count for a received total of S samples is
    ceil(alpha / S**sigma), clamped to round_cap; sigma must exceed 1.
    """

    batch_size: float = 100.0
    compute_rate: float = 1.0e3
    alpha: float = DEFAULT_ALPHA
    sigma: float = DEFAULT_SIGMA
    round_cap: int = 1_000_000

    def validate(self) -> None:
        if not self.batch_size > 0:
            raise ScenarioError(f"training.batch_size must be > 0, got {self.batch_size}")
        if not self.compute_rate > 0:
            raise ScenarioError(f"training.compute_rate must be > 0, got {self.compute_rate}")
        if not self.alpha > 0:
            raise ScenarioError(f"training.alpha must be > 0, got {self.alpha}")
        if not self.sigma > 1:
            raise ScenarioError(f"training.sigma must be > 1, got {self.sigma}")
        if int(self.round_cap) != self.round_cap or self.round_cap < 1:
            raise ScenarioError(f"training.round_cap must be a positive integer, got {self.round_cap}")


@dataclass
class Scenario:
    """One fully specified problem instance.

    gains and powers are (M, N); dataset_bits and sample_counts are (M,).
    deadline_s of None means the upload deadline has not been fixed yet
    (the experiment harness computes one before running).
    """

    gains: np.ndarray
    powers: np.ndarray
    dataset_bits: np.ndarray
    sample_counts: np.ndarray
    bandwidth_hz: float
    noise_w: float
    training: TrainingParams = field(default_factory=TrainingParams)
    deadline_s: float | None = None

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=np.float64)
        self.powers = np.asarray(self.powers, dtype=np.float64)
        self.dataset_bits = np.asarray(self.dataset_bits, dtype=np.float64)
        self.sample_counts = np.asarray(self.sample_counts, dtype=np.int64)

    @property
    def num_devices(self) -> int:
        return self.gains.shape[0]

    @property
    def num_channels(self) -> int:
        return self.gains.shape[1]

    def with_deadline(self, deadline_s: float) -> "Scenario":
        """Copy of this scenario with the upload deadline fixed."""
        return dataclasses.replace(self, deadline_s=deadline_s)

    def validate(self) -> None:
        """Raise ScenarioError naming the offending field."""
        if self.gains.ndim != 2 or 0 in self.gains.shape:
            raise ScenarioError(f"gains must be a non-empty 2-D matrix, got shape {self.gains.shape}")
        m, n = self.gains.shape
        if not np.all(np.isfinite(self.gains)) or not np.all(self.gains > 0):
            raise ScenarioError("gains must be finite and strictly positive")
        if self.powers.shape != (m, n):
            raise ScenarioError(f"powers shape {self.powers.shape} does not match gains shape {(m, n)}")
        if not np.all(np.isfinite(self.powers)) or not np.all(self.powers > 0):
            raise ScenarioError("powers must be finite and strictly positive")
        if self.dataset_bits.shape != (m,):
            raise ScenarioError(f"dataset_bits must have length {m}, got shape {self.dataset_bits.shape}")
        if not np.all(np.isfinite(self.dataset_bits)) or not np.all(self.dataset_bits > 0):
            raise ScenarioError("dataset_bits must be finite and strictly positive")
        if self.sample_counts.shape != (m,):
            raise ScenarioError(f"sample_counts must have length {m}, got shape {self.sample_counts.shape}")
        if not np.all(self.sample_counts > 0):
            raise ScenarioError("sample_counts must be strictly positive")
        if not (np.isfinite(self.bandwidth_hz) and self.bandwidth_hz > 0):
            raise ScenarioError(f"bandwidth_hz must be finite and > 0, got {self.bandwidth_hz}")
        if not (np.isfinite(self.noise_w) and self.noise_w > 0):
            raise ScenarioError(f"noise_w must be finite and > 0, got {self.noise_w}")
        if self.deadline_s is not None and (np.isnan(self.deadline_s) or self.deadline_s < 0):
            raise ScenarioError(f"deadline_s must be >= 0 or None, got {self.deadline_s}")
        self.training.validate()


@dataclass
class GenSpec:
    """Knobs of the scenario generator, defaulting to the nominal setup:

    6 devices, 3 channels, 5 MHz channels, 1e-10 W noise, 0.1 W transmit
    power, gains spanning [4e-10, 0.035], 1.8 MB mean dataset
    (1.44e7 bits) at 1800 bits/sample (8000 samples mean).
    """

    seed: int = 0
    num_devices: int = 6
    num_channels: int = 3
    h_min: float = 4.0e-10
    h_max: float = 0.035
    mean_dataset_bits: float = 1.44e7
    bits_per_sample: float = 1800.0
    bandwidth_hz: float = 5.0e6
    noise_w: float = 1.0e-10
    power_w: float = 0.1
    training: TrainingParams = field(default_factory=TrainingParams)

    def validate(self) -> None:
        if int(self.seed) != self.seed or self.seed < 0:
            raise ScenarioError(f"seed must be a non-negative integer, got {self.seed}")
        if self.num_devices < 1 or self.num_channels < 1:
            raise ScenarioError("num_devices and num_channels must be >= 1")
        if not 0 < self.h_min < self.h_max:
            raise ScenarioError(f"gain range must satisfy 0 < h_min < h_max, got [{self.h_min}, {self.h_max}]")
        for name in ("mean_dataset_bits", "bits_per_sample", "bandwidth_hz", "noise_w", "power_w"):
            if not getattr(self, name) > 0:
                raise ScenarioError(f"{name} must be > 0, got {getattr(self, name)}")
        self.training.validate()


def generate(spec: GenSpec) -> Scenario:
    """Draw a scenario deterministically from the spec's seed.

    Device m's gain row comes from PCG64 seeded with (seed, 0, m), sampled
    log-uniformly over [h_min, h_max]; dataset sizes come from (seed, 1),
    uniform on [0.5, 1.5] * mean_dataset_bits.  Sample counts are the
    dataset size divided by bits_per_sample, rounded to nearest.
    """
    spec.validate()
    m, n = spec.num_devices, spec.num_channels
    log_lo, log_hi = np.log(spec.h_min), np.log(spec.h_max)
    gains = np.empty((m, n), dtype=np.float64)
    for dev in range(m):
        rng = np.random.default_rng([spec.seed, _GAIN_STREAM, dev])
        gains[dev] = np.exp(rng.uniform(log_lo, log_hi, n))
    data_rng = np.random.default_rng([spec.seed, _DATA_STREAM])
    bits = data_rng.uniform(0.5, 1.5, m) * spec.mean_dataset_bits
    samples = np.rint(bits / spec.bits_per_sample).astype(np.int64)
    scenario = Scenario(
        gains=gains,
        powers=np.full((m, n), spec.power_w, dtype=np.float64),
        dataset_bits=bits,
        sample_counts=samples,
        bandwidth_hz=spec.bandwidth_hz,
        noise_w=spec.noise_w,
        training=dataclasses.replace(spec.training),
    )
    scenario.validate()
    return scenario


# ---------------------------------------------------------------------------
# Scenario files: sectioned key = value text, matrices as rows of numbers.
# Grammar is documented in README.md.


def _fmt(value: float) -> str:
    return repr(float(value))


def save(scenario: Scenario, path) -> None:
    """Write a scenario file that :func:`load` restores exactly."""
    lines = ["[radio]"]
    lines.append(f"bandwidth_hz = {_fmt(scenario.bandwidth_hz)}")
    lines.append(f"noise_w = {_fmt(scenario.noise_w)}")
    deadline = "none" if scenario.deadline_s is None else _fmt(scenario.deadline_s)
    lines.append(f"deadline_s = {deadline}")
    lines.append("")
    lines.append("[training]")
    tr = scenario.training
    lines.append(f"batch_size = {_fmt(tr.batch_size)}")
    lines.append(f"compute_rate = {_fmt(tr.compute_rate)}")
    lines.append(f"alpha = {_fmt(tr.alpha)}")
    lines.append(f"sigma = {_fmt(tr.sigma)}")
    lines.append(f"round_cap = {int(tr.round_cap)}")
    lines.append("")
    lines.append("[devices]")
    lines.append("dataset_bits = " + " ".join(_fmt(v) for v in scenario.dataset_bits))
    lines.append("sample_counts = " + " ".join(str(int(v)) for v in scenario.sample_counts))
    lines.append("")
    lines.append("[gains]")
    for row in scenario.gains:
        lines.append(" ".join(_fmt(v) for v in row))
    lines.append("")
    lines.append("[powers]")
    for row in scenario.powers:
        lines.append(" ".join(_fmt(v) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load(path) -> Scenario:
    """Parse a scenario file and validate the result.

    Parse failures raise ScenarioError with the line number; contents that
    parse but violate an invariant raise ScenarioError naming the field.
    """
    sections: dict[str, dict[str, str]] = {}
    matrix_sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                current = line[1:-1].strip().lower()
                if current in ("gains", "powers"):
                    matrix_sections.setdefault(current, [])
                else:
                    sections.setdefault(current, {})
                continue
            if current is None:
                raise ScenarioError(f"line {lineno}: content before any [section] header")
            if current in ("gains", "powers"):
                matrix_sections[current].append((lineno, line))
            else:
                if "=" not in line:
                    raise ScenarioError(f"line {lineno}: expected 'key = value' in [{current}]")
                key, value = (part.strip() for part in line.split("=", 1))
                sections[current][key] = value

    def need(section: str, key: str) -> str:
        try:
            return sections[section][key]
        except KeyError:
            raise ScenarioError(f"missing key '{key}' in section [{section}]") from None

    def number(section: str, key: str, text: str) -> float:
        try:
            return float(text)
        except ValueError:
            raise ScenarioError(f"section [{section}], key '{key}': not a number: {text!r}") from None

    def matrix(name: str) -> np.ndarray:
        rows = []
        width = None
        for lineno, line in matrix_sections.get(name, []):
            try:
                row = [float(tok) for tok in line.split()]
            except ValueError:
                raise ScenarioError(f"line {lineno}: malformed number in [{name}] row") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ScenarioError(f"line {lineno}: [{name}] row has {len(row)} entries, expected {width}")
            rows.append(row)
        if not rows:
            raise ScenarioError(f"missing or empty [{name}] section")
        return np.array(rows, dtype=np.float64)

    for required in ("radio", "training", "devices"):
        if required not in sections:
            raise ScenarioError(f"missing [{required}] section")

    gains = matrix("gains")
    if "powers" in matrix_sections:
        powers = matrix("powers")
    else:
        power_w = number("radio", "power_w", need("radio", "power_w"))
        powers = np.full_like(gains, power_w)

    deadline_text = sections["radio"].get("deadline_s", "none").lower()
    deadline = None if deadline_text == "none" else number("radio", "deadline_s", deadline_text)

    bits = np.array([number("devices", "dataset_bits", tok)
                     for tok in need("devices", "dataset_bits").split()], dtype=np.float64)
    samples = np.array([number("devices", "sample_counts", tok)
                        for tok in need("devices", "sample_counts").split()], dtype=np.int64)

    scenario = Scenario(
        gains=gains,
        powers=powers,
        dataset_bits=bits,
        sample_counts=samples,
        bandwidth_hz=number("radio", "bandwidth_hz", need("radio", "bandwidth_hz")),
        noise_w=number("radio", "noise_w", need("radio", "noise_w")),
        training=TrainingParams(
            batch_size=number("training", "batch_size", need("training", "batch_size")),
            compute_rate=number("training", "compute_rate", need("training", "compute_rate")),
            alpha=number("training", "alpha", need("training", "alpha")),
            sigma=number("training", "sigma", need("training", "sigma")),
            round_cap=int(number("training", "round_cap", need("training", "round_cap"))),
        ),
        deadline_s=deadline,
    )
    scenario.validate()
    return scenario
