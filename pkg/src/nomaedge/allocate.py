"""Channel allocators: the delay-descent heuristic, three baselines, and an
exhaustive oracle.

All of them minimize, more or less directly, the learning delay of one
collection round by choosing each device's single uplink channel:

* ``max-h``    - every device takes its best-gain channel.
* ``min-h``    - every device takes its worst-gain channel (interference
                 avoidance taken to its extreme).
* ``spdm``     - devices placed one by one in descending dataset-size
                 order, each on the channel minimizing its own upload
                 delay against the devices already placed.
* ``dd-maxh``  - best-gain start, then iteratively re-home the device with
                 the largest upload delay onto whichever channel minimizes
                 its delay, as long as that strictly lowers both its own
                 delay and the global maximum.
* ``exhaustive`` - scores every assignment, for use as an oracle at small
                 sizes.

Every tie (argmax, argmin, worst device, candidate channel, equal scores)
is broken toward the lowest index, so identical scenarios always produce
identical results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .model import AllocationMatrix, total_delay, training_delay, upload_delay_vector
from .scenario import Scenario, ScenarioError

ALGORITHMS = ("dd-maxh", "max-h", "min-h", "spdm", "exhaustive")

DEFAULT_EXHAUSTIVE_CAP = 1_000_000


class SearchSpaceError(ValueError):
    """Exhaustive enumeration refused: the assignment space exceeds the cap."""


@dataclass
class AllocationResult:
    """Outcome of one allocator run.

    iterations counts committed delay-descent switches (0 for the
    non-iterative algorithms).  objective is the total learning delay of
    the returned allocation under the scenario's deadline, or NaN when the
    scenario has no deadline yet.  best_max_upload_delay is filled by the
    exhaustive search only: the smallest max upload delay over ALL
    assignments, which may be attained by a different assignment than the
    returned (total-delay-optimal) one.
    """

    alloc: AllocationMatrix
    iterations: int
    max_upload_delay: float
    objective: float
    best_max_upload_delay: float | None = None


def _finalize(s: Scenario, alloc: AllocationMatrix, iterations: int,
              best_max_upload_delay: float | None = None) -> AllocationResult:
    delays = upload_delay_vector(s, alloc)
    objective = total_delay(s, alloc).d_total if s.deadline_s is not None else math.nan
    return AllocationResult(
        alloc=alloc,
        iterations=iterations,
        max_upload_delay=float(np.max(delays)),
        objective=objective,
        best_max_upload_delay=best_max_upload_delay,
    )


def max_h_greedy(s: Scenario) -> AllocationResult:
    """Each device on its highest-gain channel (ties to the lowest index)."""
    channels = np.argmax(s.gains, axis=1).astype(np.int64)
    return _finalize(s, AllocationMatrix(channels, s.num_channels), 0)


def min_h_greedy(s: Scenario) -> AllocationResult:
    """Each device on its lowest-gain channel (ties to the lowest index)."""
    channels = np.argmin(s.gains, axis=1).astype(np.int64)
    return _finalize(s, AllocationMatrix(channels, s.num_channels), 0)


def spdm(s: Scenario) -> AllocationResult:
    """Strict-priority delay minimization.

    Devices are processed in decreasing dataset size (ties toward the
    lower device index).  Each takes the channel minimizing its own upload
    delay evaluated against the devices placed so far; devices not yet
    placed do not interfere.
    """
    m_count, n_count = s.num_devices, s.num_channels
    order = sorted(range(m_count), key=lambda m: (-s.dataset_bits[m], m))
    channels = np.full(m_count, -1, dtype=np.int64)
    placed_gain: list[float] = []
    placed_power_gain: list[float] = []
    for m in order:
        best_channel, best_delay = 0, math.inf
        for n in range(n_count):
            gain = s.gains[m, n]
            interference = sum(pg for g, pg in zip(placed_gain, placed_power_gain) if g < gain)
            sinr = s.powers[m, n] * gain / (interference + s.noise_w)
            rate = s.bandwidth_hz * math.log2(1.0 + sinr)
            delay = s.dataset_bits[m] / rate if rate > 0.0 else math.inf
            if delay < best_delay:
                best_delay, best_channel = delay, n
        channels[m] = best_channel
        placed_gain.append(float(s.gains[m, best_channel]))
        placed_power_gain.append(float(s.powers[m, best_channel] * s.gains[m, best_channel]))
    return _finalize(s, AllocationMatrix(channels, s.num_channels), 0)


def dd_maxh(s: Scenario, max_iterations: int | None = None,
            history: list | None = None) -> AllocationResult:
    """Delay-descent refinement of the best-gain assignment.

    Repeatedly: find the device with the largest upload delay (ties to the
    lowest index); evaluate its delay on every other channel with all other
    assignments fixed; take the best candidate (ties to the lowest channel
    index).  Commit the switch only when it strictly lowers both the
    device's own delay and the global maximum delay, then repeat;
    otherwise stop.  The commit rule makes the maximum strictly decrease
    at each step, so the loop terminates; max_iterations (default 10 * M)
    is a safety bound on committed switches.

    When a list is passed as ``history``, the global maximum delay is
    appended after initialization and after every committed switch.
    """
    m_count, n_count = s.num_devices, s.num_channels
    cap = 10 * m_count if max_iterations is None else max_iterations
    channels = np.argmax(s.gains, axis=1).astype(np.int64)
    delays = kernels.upload_delays(s.gains, s.powers, s.dataset_bits,
                                   channels, s.noise_w, s.bandwidth_hz)
    if history is not None:
        history.append(float(np.max(delays)))
    iterations = 0
    while iterations < cap:
        worst = int(np.argmax(delays))
        current_delay = delays[worst]
        current_max = np.max(delays)
        candidates = np.array([n for n in range(n_count) if n != channels[worst]],
                              dtype=np.int64)
        if len(candidates) == 0:
            break
        trials = np.repeat(channels[None, :], len(candidates), axis=0)
        trials[:, worst] = candidates
        trial_delays = kernels.upload_delays_batch(
            s.gains, s.powers, s.dataset_bits, trials, s.noise_w, s.bandwidth_hz)
        best = int(np.argmin(trial_delays[:, worst]))
        if not (trial_delays[best, worst] < current_delay
                and np.max(trial_delays[best]) < current_max):
            break
        channels = trials[best]
        delays = trial_delays[best]
        iterations += 1
        if history is not None:
            history.append(float(np.max(delays)))
    return _finalize(s, AllocationMatrix(channels, s.num_channels), iterations)


def _enumerate_assignments(m_count: int, n_count: int) -> np.ndarray:
    """All N**M channel vectors in lexicographic order (device 0 slowest)."""
    total = n_count ** m_count
    index = np.arange(total, dtype=np.int64)
    out = np.empty((total, m_count), dtype=np.int64)
    for m in range(m_count):
        out[:, m] = (index // (n_count ** (m_count - 1 - m))) % n_count
    return out


def exhaustive(s: Scenario, eval_cap: int = DEFAULT_EXHAUSTIVE_CAP) -> AllocationResult:
    """Score every assignment; return the one minimizing total delay.

    Ties go to the lexicographically smallest channel vector.  Requires a
    deadline (the objective includes deadline drops and training).  Also
    reports the smallest max-upload-delay over all assignments, the
    min-max oracle value the heuristics are judged against.
    """
    if s.deadline_s is None:
        raise ScenarioError("deadline_s is unset; the exhaustive objective needs the deadline")
    space = s.num_channels ** s.num_devices
    if space > eval_cap:
        raise SearchSpaceError(
            f"{s.num_channels}**{s.num_devices} = {space} assignments exceed the cap"
            f" of {eval_cap}; raise eval_cap to at least {space} to enumerate this instance")
    assignments = _enumerate_assignments(s.num_devices, s.num_channels)
    delays = kernels.upload_delays_batch(
        s.gains, s.powers, s.dataset_bits, assignments, s.noise_w, s.bandwidth_hz)
    max_delay = delays.max(axis=1)
    d_tx = np.minimum(max_delay, s.deadline_s)
    received = (delays <= s.deadline_s) @ s.sample_counts
    # Route the few distinct received totals through the scalar training
    # path so these scores match total_delay() of the same assignment
    # bit for bit (ties then resolve lexicographically, not by float noise).
    uniq, inverse = np.unique(received, return_inverse=True)
    d_cpu = np.array([training_delay(s, int(v))[1] for v in uniq])[inverse]
    best = int(np.argmin(d_tx + d_cpu))
    return _finalize(
        s,
        AllocationMatrix(assignments[best].copy(), s.num_channels),
        0,
        best_max_upload_delay=float(max_delay.min()),
    )


_BY_NAME = {
    "dd-maxh": dd_maxh,
    "max-h": max_h_greedy,
    "min-h": min_h_greedy,
    "spdm": spdm,
    "exhaustive": exhaustive,
}


def get_allocator(name: str):
    """Look an allocator up by its command-line name."""
    try:
        return _BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}") from None
