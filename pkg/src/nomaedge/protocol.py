"""Event-level simulation of one collection-and-training round.

The round walks seven steps between an edge server, a base station, and M
devices: the server requests data and starts a deadline timer, devices
request channels (reporting their dataset sizes), the base station runs a
channel allocator and feeds the decision back, all devices start uploading
at once, each dataset either arrives or is dropped when the timer fires,
the server aggregates what arrived, trains, and feeds the result back.

Signaling steps are modeled with zero duration (upload and training
dominate the round), so the clock starts at UPLOAD_START and every
pre-upload event sits at time zero.  A device whose upload cannot finish
in time keeps transmitting, and interfering, through the whole upload
window; its drop event carries the arrival time it would have had.

The emitted trace is totally ordered by (time, protocol step, actor) and
serializes to a stable line format for golden-file comparison; `replay`
rebuilds the delay report from the events alone.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .allocate import get_allocator, max_h_greedy
from .model import DelayReport, total_delay
from .scenario import Scenario

EVENT_KINDS = (
    "COLLECTION_REQUEST",
    "CHANNEL_REQUEST",
    "ALLOCATION_DECISION",
    "UPLOAD_START",
    "UPLOAD_COMPLETE",
    "DATASET_DROPPED",
    "AGGREGATION_DONE",
    "TRAINING_DONE",
    "RESULT_FEEDBACK",
)
_STEP = {kind: i for i, kind in enumerate(EVENT_KINDS)}

EDGE_SERVER = "EDGE_SERVER"
BASE_STATION = "BASE_STATION"


def device_actor(m: int) -> str:
    return f"DEVICE({m})"


class TraceError(ValueError):
    """Trace violates an ordering or completeness invariant."""


@dataclass
class ProtocolEvent:
    time: float
    actor: str
    kind: str
    payload: dict


@dataclass
class EventTrace:
    events: list[ProtocolEvent]
    report: DelayReport


def deadline_rule(s: Scenario) -> float:
    """Upload deadline used by the experiments: the largest per-device
    upload delay under the best-gain-greedy allocation, so that allocation
    itself never drops a dataset."""
    value = max_h_greedy(s).max_upload_delay
    if not math.isfinite(value):
        warnings.warn("deadline rule produced a non-finite deadline; "
                      "some device has zero rate even on its best channel")
    return value


def run_round(s: Scenario, algorithm: str = "dd-maxh", **allocator_kwargs) -> EventTrace:
    """Simulate one full round under the named allocator.

    Uses the scenario's deadline when set, otherwise fixes it with
    :func:`deadline_rule` first.  The embedded report equals
    :func:`nomaedge.model.total_delay` of the same scenario and
    allocation exactly.
    """
    if s.deadline_s is None:
        s = s.with_deadline(deadline_rule(s))
    result = get_allocator(algorithm)(s, **allocator_kwargs)
    report = total_delay(s, result.alloc)
    m_count = s.num_devices
    deadline = float(s.deadline_s)

    events = [ProtocolEvent(0.0, EDGE_SERVER, "COLLECTION_REQUEST",
                            {"devices": m_count, "deadline_s": deadline})]
    for m in range(m_count):
        events.append(ProtocolEvent(0.0, device_actor(m), "CHANNEL_REQUEST",
                                    {"device": m, "bits": float(s.dataset_bits[m])}))
    events.append(ProtocolEvent(
        0.0, BASE_STATION, "ALLOCATION_DECISION",
        {"algorithm": algorithm,
         "channels": [int(c) for c in result.alloc.channels],
         "iterations": result.iterations}))
    for m in range(m_count):
        events.append(ProtocolEvent(0.0, device_actor(m), "UPLOAD_START",
                                    {"device": m, "channel": int(result.alloc.channels[m])}))

    outcomes = []
    for m in range(m_count):
        delay = float(report.per_device_delay[m])
        if report.received_mask[m]:
            outcomes.append(ProtocolEvent(delay, device_actor(m), "UPLOAD_COMPLETE",
                                          {"device": m, "samples": int(s.sample_counts[m])}))
        else:
            outcomes.append(ProtocolEvent(deadline, EDGE_SERVER, "DATASET_DROPPED",
                                          {"device": m, "samples": int(s.sample_counts[m]),
                                           "delay_s": delay}))
    outcomes.sort(key=lambda e: (e.time, _STEP[e.kind], e.payload["device"]))
    events.extend(outcomes)

    events.append(ProtocolEvent(report.d_tx, EDGE_SERVER, "AGGREGATION_DONE",
                                {"received_samples": report.received_samples,
                                 "dropped": int(m_count - report.received_mask.sum())}))
    finish = report.d_tx + report.d_cpu
    events.append(ProtocolEvent(finish, EDGE_SERVER, "TRAINING_DONE",
                                {"rounds": report.k_r, "cpu_s": report.d_cpu}))
    events.append(ProtocolEvent(finish, EDGE_SERVER, "RESULT_FEEDBACK",
                                {"total_s": report.d_total}))
    return EventTrace(events=events, report=report)


def _first(events, kind):
    for event in events:
        if event.kind == kind:
            return event
    return None


_TIME_TOLERANCE = 1e-9  # slack for traces whose times were re-printed or perturbed


def replay(trace) -> DelayReport:
    """Rebuild the delay report from a trace's events alone.

    Accepts an :class:`EventTrace` or a plain event sequence.  Raises
    :class:`TraceError` describing the first violated invariant when the
    trace is malformed (bad ordering, missing or duplicated events).
    """
    events = list(trace.events) if hasattr(trace, "events") else list(trace)
    if not events:
        raise TraceError("empty trace")
    if events[0].kind != "COLLECTION_REQUEST" or abs(events[0].time) > _TIME_TOLERANCE:
        raise TraceError("trace must open with COLLECTION_REQUEST at time 0")
    for kind in ("COLLECTION_REQUEST", "ALLOCATION_DECISION", "AGGREGATION_DONE",
                 "TRAINING_DONE", "RESULT_FEEDBACK"):
        count = sum(1 for e in events if e.kind == kind)
        if count != 1:
            raise TraceError(f"expected exactly one {kind} event, found {count}")
    for prev, nxt in zip(events, events[1:]):
        if nxt.time < prev.time - _TIME_TOLERANCE:
            raise TraceError(f"event times decrease: {nxt.kind} at {nxt.time} "
                             f"after {prev.kind} at {prev.time}")
        if nxt.time == prev.time and _STEP[nxt.kind] < _STEP[prev.kind]:
            raise TraceError(f"protocol steps out of order at time {nxt.time}: "
                             f"{nxt.kind} after {prev.kind}")

    allocation = _first(events, "ALLOCATION_DECISION")
    channel_list = allocation.payload["channels"]
    if isinstance(channel_list, int):
        channel_list = [channel_list]  # single-device payload parses as a scalar
    m_count = len(channel_list)
    requests: set[int] = set()
    starts: dict[int, float] = {}
    finishes: dict[int, ProtocolEvent] = {}
    for event in events:
        if event.kind == "CHANNEL_REQUEST":
            requests.add(event.payload["device"])
        elif event.kind == "UPLOAD_START":
            starts[event.payload["device"]] = event.time
        elif event.kind in ("UPLOAD_COMPLETE", "DATASET_DROPPED"):
            device = event.payload["device"]
            if device in finishes:
                raise TraceError(f"device {device} has more than one upload outcome")
            finishes[device] = event
    for m in range(m_count):
        if m not in requests:
            raise TraceError(f"device {m} has no CHANNEL_REQUEST event")
        if m not in starts:
            raise TraceError(f"device {m} has no UPLOAD_START event")
        if m not in finishes:
            raise TraceError(f"device {m} has neither UPLOAD_COMPLETE nor DATASET_DROPPED")

    per_device = np.empty(m_count, dtype=np.float64)
    mask = np.zeros(m_count, dtype=bool)
    received = 0
    for m in range(m_count):
        outcome = finishes[m]
        if outcome.kind == "UPLOAD_COMPLETE":
            per_device[m] = outcome.time - starts[m]
            mask[m] = True
            received += outcome.payload["samples"]
        else:
            per_device[m] = outcome.payload["delay_s"]

    d_tx = _first(events, "AGGREGATION_DONE").time
    training_done = _first(events, "TRAINING_DONE")
    d_cpu = training_done.payload["cpu_s"]
    return DelayReport(
        per_device_delay=per_device,
        d_tx=d_tx,
        received_mask=mask,
        received_samples=received,
        k_r=int(training_done.payload["rounds"]),
        d_cpu=d_cpu,
        d_total=d_tx + d_cpu,
        no_data=received == 0,
    )


# ---------------------------------------------------------------------------
# Trace wire format: one event per line, tab-separated
#   time <TAB> actor <TAB> kind <TAB> key=value [<TAB> key=value ...]
# with times and float payload values printed to 12 significant digits.


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def serialize_trace(trace) -> str:
    """Render events in the wire format; stable across runs."""
    events = trace.events if hasattr(trace, "events") else trace
    lines = []
    for event in events:
        fields = [f"{event.time:.12g}", event.actor, event.kind]
        fields.extend(f"{key}={_fmt_value(value)}" for key, value in event.payload.items())
        lines.append("\t".join(fields))
    return "\n".join(lines) + "\n"


def _parse_value(text: str):
    if "," in text:
        return [_parse_value(tok) for tok in text.split(",")]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_trace(text: str) -> list[ProtocolEvent]:
    """Parse the wire format back into events (inverse of serialize_trace
    up to float printing precision)."""
    events = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 3:
            raise TraceError(f"line {lineno}: expected at least time, actor and kind")
        time_text, actor, kind = fields[0], fields[1], fields[2]
        if kind not in _STEP:
            raise TraceError(f"line {lineno}: unknown event kind {kind!r}")
        payload = {}
        for item in fields[3:]:
            if "=" not in item:
                raise TraceError(f"line {lineno}: malformed payload field {item!r}")
            key, value = item.split("=", 1)
            payload[key] = _parse_value(value)
        events.append(ProtocolEvent(float(time_text), actor, kind, payload))
    return events
