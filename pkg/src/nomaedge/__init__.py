"""nomaedge: deterministic delay simulator and channel-allocation optimizer
for collaborative edge learning over a MIMO-NOMA uplink."""

__version__ = "0.1.0"

from .scenario import (GENERATOR_NAME, GenSpec, Scenario, ScenarioError,
                       TrainingParams, generate, load, save)
from .model import (AllocationError, AllocationMatrix, DelayReport,
                    cross_channel_interference, device_rate,
                    inter_cell_interference, intra_cell_interference,
                    system_upload_delay, total_delay, training_delay,
                    upload_delay, upload_delay_vector, uplink_rate)
from .allocate import (ALGORITHMS, AllocationResult, SearchSpaceError,
                       dd_maxh, exhaustive, get_allocator, max_h_greedy,
                       min_h_greedy, spdm)
from .protocol import (EventTrace, ProtocolEvent, TraceError, deadline_rule,
                       parse_trace, replay, run_round, serialize_trace)
from .sweep import (SweepResult, SweepRow, SweepSpec, read_results_csv,
                    render_csv, run_sweep, summarize, write_results)
from . import kernels

__all__ = [
    "__version__",
    "GENERATOR_NAME", "GenSpec", "Scenario", "ScenarioError", "TrainingParams",
    "generate", "load", "save",
    "AllocationError", "AllocationMatrix", "DelayReport",
    "cross_channel_interference", "inter_cell_interference",
    "intra_cell_interference", "uplink_rate", "device_rate", "upload_delay",
    "upload_delay_vector", "system_upload_delay", "training_delay", "total_delay",
    "ALGORITHMS", "AllocationResult", "SearchSpaceError",
    "dd_maxh", "exhaustive", "get_allocator", "max_h_greedy", "min_h_greedy", "spdm",
    "EventTrace", "ProtocolEvent", "TraceError", "deadline_rule",
    "parse_trace", "replay", "run_round", "serialize_trace",
    "SweepResult", "SweepRow", "SweepSpec", "read_results_csv", "render_csv",
    "run_sweep", "summarize", "write_results",
    "kernels",
]
