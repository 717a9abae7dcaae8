"""Uplink rate and delay model for a NOMA cell with power-domain ordering.

A device transmitting on its allocated channel is decoded against the
interference of every other active device whose allocated gain is strictly
lower, whether that device shares the channel (intra-cell term) or sits on
another one (cross-channel term).  Ties in gain contribute nothing in
either direction.  The rate is the Shannon rate at the resulting SINR; the
upload delay is dataset size over rate; the system upload phase ends when
every dataset has arrived or the deadline timer fires, whichever is first.
Datasets arriving after the deadline are dropped before aggregation, and
the training stage then runs ceil(alpha / S**sigma) rounds over the S
samples that did arrive.

The scalar operations below follow those definitions term by term and are
cross-checked against a naive reimplementation in the test suite; the
report-producing paths (:func:`upload_delay_vector`, :func:`total_delay`)
go through the compiled kernels so that allocator search, protocol
simulation, and reporting all see bit-identical delay values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .scenario import Scenario, ScenarioError


class AllocationError(ValueError):
    """Allocation matrix violates the one-channel-per-device constraint."""


@dataclass
class AllocationMatrix:
    """Binary device-to-channel assignment, one channel per device.

    Stored as a channel-index vector: channels[m] is the column holding
    device m's single 1, or -1 for a row of zeros (a device that holds no
    channel; such rows appear only in intermediate states, never in an
    allocator's output).
    """

    channels: np.ndarray
    num_channels: int

    def __post_init__(self):
        self.channels = np.asarray(self.channels, dtype=np.int64)
        if self.channels.ndim != 1:
            raise AllocationError(f"channels must be 1-D, got shape {self.channels.shape}")
        if np.any(self.channels < -1) or np.any(self.channels >= self.num_channels):
            raise AllocationError(
                f"channel indices must be in [-1, {self.num_channels}), got {self.channels}")

    @classmethod
    def from_matrix(cls, matrix) -> "AllocationMatrix":
        """Build from an (M, N) 0/1 matrix with row sums of 1 (or 0)."""
        matrix = np.asarray(matrix)
        if matrix.ndim != 2:
            raise AllocationError(f"expected a 2-D matrix, got shape {matrix.shape}")
        if not np.isin(matrix, (0, 1)).all():
            raise AllocationError("matrix entries must be 0 or 1")
        row_sums = matrix.sum(axis=1)
        if np.any(row_sums > 1):
            raise AllocationError(f"row sums must be at most 1, got {row_sums}")
        channels = np.where(row_sums == 1, matrix.argmax(axis=1), -1)
        return cls(channels=channels.astype(np.int64), num_channels=matrix.shape[1])

    def as_matrix(self) -> np.ndarray:
        out = np.zeros((len(self.channels), self.num_channels), dtype=np.int64)
        assigned = self.channels >= 0
        out[np.nonzero(assigned)[0], self.channels[assigned]] = 1
        return out

    def is_complete(self) -> bool:
        """True when every device holds exactly one channel."""
        return bool(np.all(self.channels >= 0))

    def move(self, device: int, channel: int) -> "AllocationMatrix":
        new = self.channels.copy()
        new[device] = channel
        return AllocationMatrix(channels=new, num_channels=self.num_channels)


@dataclass
class DelayReport:
    """All delay quantities of one collection-and-training round."""

    per_device_delay: np.ndarray   # (M,) seconds, +inf for zero-rate devices
    d_tx: float                    # upload phase duration
    received_mask: np.ndarray      # (M,) bool, True where the dataset arrived in time
    received_samples: int
    k_r: int                       # training rounds
    d_cpu: float                   # training duration
    d_total: float                 # d_tx + d_cpu
    no_data: bool                  # True when nothing arrived before the deadline


def _check_index(value: int, size: int, name: str) -> int:
    value = int(value)
    if not 0 <= value < size:
        raise IndexError(f"{name} index {value} out of range [0, {size})")
    return value


def cross_channel_interference(s: Scenario, alloc: AllocationMatrix, m: int, n: int) -> float:
    """Interference power at device m's decoder on channel n from active
    devices on OTHER channels whose allocated gain is strictly lower than
    device m's gain on channel n."""
    m = _check_index(m, s.num_devices, "device")
    n = _check_index(n, s.num_channels, "channel")
    reference = s.gains[m, n]
    total = 0.0
    for k in range(s.num_devices):
        ck = int(alloc.channels[k])
        if k == m or ck < 0 or ck == n:
            continue
        gain = s.gains[k, ck]
        if gain < reference:
            total += s.powers[k, ck] * gain
    return total


# The cell-external interference term of the rate formula; the sum runs over
# this cell's devices on other channels.
inter_cell_interference = cross_channel_interference


def intra_cell_interference(s: Scenario, alloc: AllocationMatrix, m: int, n: int) -> float:
    """Interference power from co-channel devices with strictly lower gain."""
    m = _check_index(m, s.num_devices, "device")
    n = _check_index(n, s.num_channels, "channel")
    reference = s.gains[m, n]
    total = 0.0
    for k in range(s.num_devices):
        if k == m or int(alloc.channels[k]) != n:
            continue
        gain = s.gains[k, n]
        if gain < reference:
            total += s.powers[k, n] * gain
    return total


def uplink_rate(s: Scenario, alloc: AllocationMatrix, m: int, n: int) -> float:
    """Shannon rate of device m on channel n in bits/second.

    Zero when the channel is not allocated to the device.  The denominator
    is cross-channel interference + intra-cell interference + noise, so it
    never vanishes.
    """
    m = _check_index(m, s.num_devices, "device")
    n = _check_index(n, s.num_channels, "channel")
    if int(alloc.channels[m]) != n:
        return 0.0
    denom = (cross_channel_interference(s, alloc, m, n)
             + intra_cell_interference(s, alloc, m, n)
             + s.noise_w)
    sinr = s.powers[m, n] * s.gains[m, n] / denom
    return s.bandwidth_hz * math.log2(1.0 + sinr)


def device_rate(s: Scenario, alloc: AllocationMatrix, m: int) -> float:
    """Total rate of device m, i.e. its rate summed over all channels.

    At most one term is nonzero because a device holds at most one channel;
    a device holding none uploads at rate zero.
    """
    m = _check_index(m, s.num_devices, "device")
    channel = int(alloc.channels[m])
    if channel < 0:
        return 0.0
    return uplink_rate(s, alloc, m, channel)


def upload_delay(s: Scenario, alloc: AllocationMatrix, m: int) -> float:
    """Seconds for device m's dataset to arrive; +inf at zero rate."""
    m = _check_index(m, s.num_devices, "device")
    rate = device_rate(s, alloc, m)
    if rate <= 0.0:
        return math.inf
    return float(s.dataset_bits[m]) / rate


def upload_delay_vector(s: Scenario, alloc: AllocationMatrix) -> np.ndarray:
    """Per-device upload delays via the compiled kernel (shared by the
    allocators, the protocol simulation, and :func:`total_delay`)."""
    return kernels.upload_delays(s.gains, s.powers, s.dataset_bits,
                                 alloc.channels, s.noise_w, s.bandwidth_hz)


def system_upload_delay(s: Scenario, alloc: AllocationMatrix) -> tuple[float, np.ndarray]:
    """Duration of the upload phase and the on-time mask.

    The phase ends at the last arrival or at the deadline, whichever comes
    first; received_mask[m] is True when device m met the deadline.
    """
    if s.deadline_s is None:
        raise ScenarioError("deadline_s is unset; fix the deadline before evaluating the system upload delay")
    delays = upload_delay_vector(s, alloc)
    d_tx = float(min(np.max(delays), s.deadline_s))
    return d_tx, delays <= s.deadline_s


def training_delay(s: Scenario, received_samples: int) -> tuple[int, float]:
    """Rounds and seconds of training over the received sample total.

    One round sweeps all received samples once at the server's compute
    rate.  The round count is ceil(alpha / S**sigma) clamped to round_cap;
    with nothing received there is nothing to train, so the duration is
    zero (and the round count reports the cap).
    """
    if received_samples < 0:
        raise ValueError(f"received_samples must be >= 0, got {received_samples}")
    tr = s.training
    round_seconds = received_samples / tr.compute_rate
    if received_samples == 0:
        return int(tr.round_cap), 0.0
    k_r = min(int(tr.round_cap), math.ceil(tr.alpha / received_samples ** tr.sigma))
    return k_r, k_r * round_seconds


def total_delay(s: Scenario, alloc: AllocationMatrix) -> DelayReport:
    """Full round evaluation: upload phase, deadline drops, training.

    Requires a complete allocation (every device on exactly one channel)
    and a fixed deadline.
    """
    if not alloc.is_complete():
        raise AllocationError("allocation must give every device exactly one channel")
    if s.deadline_s is None:
        raise ScenarioError("deadline_s is unset; fix the deadline before evaluating the total delay")
    delays = upload_delay_vector(s, alloc)
    d_tx = float(min(np.max(delays), s.deadline_s))
    mask = delays <= s.deadline_s
    received = int(s.sample_counts[mask].sum())
    k_r, d_cpu = training_delay(s, received)
    return DelayReport(
        per_device_delay=delays,
        d_tx=d_tx,
        received_mask=mask,
        received_samples=received,
        k_r=k_r,
        d_cpu=d_cpu,
        d_total=d_tx + d_cpu,
        no_data=received == 0,
    )
