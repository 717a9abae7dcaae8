"""Hot numeric kernels: per-device upload delays under a channel allocation.

Two interchangeable backends compute the same quantity:

* ``numba``  - @njit loop kernels, the default whenever numba imports.
* ``numpy``  - vectorized fallback, no compilation step.

Selection happens once at import time from the ``NOMAEDGE_BACKEND``
environment variable ("numba" or "numpy"); :func:`set_backend` can switch
later (used by the benchmark and by tests that pin a backend).

Within one backend, the single-allocation path is the batch path with one
row, so values coming out of a heuristic and out of a batch enumeration of
the same allocation are bit-identical and safe to compare with ``<=``.

An allocation is a length-M vector of channel indices; the entry -1 marks
a device that holds no channel (it neither transmits nor interferes and
its upload delay is +inf).
"""

from __future__ import annotations

import os

import numpy as np

ENV_FLAG = "NOMAEDGE_BACKEND"

# Rows per chunk in the numpy batch path; bounds the (rows, M, M) mask.
_CHUNK_ROWS = 4096


def _batch_numpy(gains, powers, bits, channels, noise_w, bandwidth_hz):
    """Pure-numpy batch kernel. channels has shape (rows, M)."""
    rows, num_dev = channels.shape
    out = np.empty((rows, num_dev), dtype=np.float64)
    dev = np.arange(num_dev)
    for lo in range(0, rows, _CHUNK_ROWS):
        chans = channels[lo:lo + _CHUNK_ROWS]
        assigned = chans >= 0
        safe = np.where(assigned, chans, 0)
        gain = np.where(assigned, gains[dev[None, :], safe], 0.0)
        weight = np.where(assigned, powers[dev[None, :], safe] * gain, 0.0)
        # below[r, m, j] is True when device j's allocated gain is strictly
        # under device m's; the j == m diagonal is False by irreflexivity.
        below = gain[:, None, :] < gain[:, :, None]
        interference = np.einsum("rmj,rj->rm", below.astype(np.float64), weight)
        sinr = weight / (interference + noise_w)
        rate = bandwidth_hz * np.log2(1.0 + sinr)
        with np.errstate(divide="ignore"):
            out[lo:lo + chans.shape[0]] = np.where(rate > 0.0, bits[None, :] / rate, np.inf)
    return out


def _make_numba_batch():
    from numba import njit

    @njit(cache=True)
    def _batch_numba(gains, powers, bits, channels, noise_w, bandwidth_hz):
        rows, num_dev = channels.shape
        out = np.empty((rows, num_dev), dtype=np.float64)
        for r in range(rows):
            for m in range(num_dev):
                cm = channels[r, m]
                if cm < 0:
                    out[r, m] = np.inf
                    continue
                g = gains[m, cm]
                denom = noise_w
                for j in range(num_dev):
                    if j == m:
                        continue
                    cj = channels[r, j]
                    if cj < 0:
                        continue
                    gj = gains[j, cj]
                    if gj < g:
                        denom += powers[j, cj] * gj
                rate = bandwidth_hz * np.log2(1.0 + powers[m, cm] * g / denom)
                out[r, m] = bits[m] / rate if rate > 0.0 else np.inf
        return out

    return _batch_numba


_IMPLS = {"numpy": _batch_numpy}
try:
    _IMPLS["numba"] = _make_numba_batch()
    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False


def _initial_backend() -> str:
    choice = os.environ.get(ENV_FLAG, "").strip().lower()
    if choice and choice not in ("numba", "numpy"):
        raise RuntimeError(f"{ENV_FLAG} must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numpy":
        return "numpy"
    if choice == "numba" and not _HAVE_NUMBA:
        raise RuntimeError(f"{ENV_FLAG}=numba but numba is not importable")
    return "numba" if _HAVE_NUMBA else "numpy"


_active = _initial_backend()


def backend_name() -> str:
    """Name of the backend currently answering kernel calls."""
    return _active


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_IMPLS))


def set_backend(name: str) -> str:
    """Switch backends at runtime; returns the previous backend name."""
    global _active
    if name not in _IMPLS:
        raise ValueError(f"unknown backend {name!r}; available: {available_backends()}")
    previous = _active
    _active = name
    return previous


def upload_delays_batch(gains, powers, bits, channels, noise_w, bandwidth_hz):
    """Upload delay of every device under every allocation in a batch.

    Args:
        gains: (M, N) channel power gains.
        powers: (M, N) transmit powers in watts.
        bits: (M,) dataset sizes in bits.
        channels: (rows, M) int64 channel index per device, -1 = none.
        noise_w: noise power in watts.
        bandwidth_hz: per-channel bandwidth.

    Returns:
        (rows, M) float64 delays in seconds; +inf where the rate is zero.
    """
    channels = np.ascontiguousarray(channels, dtype=np.int64)
    return _IMPLS[_active](gains, powers, bits, channels, noise_w, bandwidth_hz)


def upload_delays(gains, powers, bits, channels, noise_w, bandwidth_hz):
    """Single-allocation variant; identical arithmetic to the batch path."""
    channels = np.ascontiguousarray(channels, dtype=np.int64)
    return upload_delays_batch(gains, powers, bits, channels[None, :],
                               noise_w, bandwidth_hz)[0]
