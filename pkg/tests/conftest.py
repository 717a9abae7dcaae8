import math

import numpy as np
import pytest

from nomaedge import AllocationMatrix, GenSpec, generate, kernels


def rel_close(a, b, tol=1e-12):
    """Relative closeness that treats matching infinities as equal."""
    if math.isinf(a) or math.isinf(b):
        return a == b
    return math.isclose(a, b, rel_tol=tol, abs_tol=0.0)


def random_instance(rng, m=None, n=None, **gen_kwargs):
    """A generated scenario plus a random complete allocation."""
    m = m if m is not None else int(rng.integers(1, 7))
    n = n if n is not None else int(rng.integers(1, 4))
    scenario = generate(GenSpec(seed=int(rng.integers(0, 2**63)),
                                num_devices=m, num_channels=n, **gen_kwargs))
    channels = rng.integers(0, n, size=m).astype(np.int64)
    return scenario, AllocationMatrix(channels, n)


def as_lists(scenario, alloc):
    """Plain-python view of an instance for the naive reference model."""
    return {
        "bandwidth": float(scenario.bandwidth_hz),
        "noise": float(scenario.noise_w),
        "gains": scenario.gains.tolist(),
        "powers": scenario.powers.tolist(),
        "bits": scenario.dataset_bits.tolist(),
        "samples": scenario.sample_counts.tolist(),
        "alloc": alloc.as_matrix().tolist(),
    }


def reports_equal(a, b):
    """Bit-for-bit equality of two delay reports."""
    return (np.array_equal(a.per_device_delay, b.per_device_delay)
            and a.d_tx == b.d_tx
            and np.array_equal(a.received_mask, b.received_mask)
            and a.received_samples == b.received_samples
            and a.k_r == b.k_r
            and a.d_cpu == b.d_cpu
            and a.d_total == b.d_total
            and a.no_data == b.no_data)


@pytest.fixture
def numpy_backend():
    """Force the pure-numpy kernel backend for the duration of a test."""
    previous = kernels.set_backend("numpy")
    yield
    kernels.set_backend(previous)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Touch both backends once so jit compilation happens outside timings."""
    gains = np.array([[0.02, 0.001], [0.005, 0.03]])
    powers = np.full((2, 2), 0.1)
    bits = np.array([1.0e7, 2.0e7])
    channels = np.array([[0, 1], [1, 0]], dtype=np.int64)
    for name in kernels.available_backends():
        previous = kernels.set_backend(name)
        kernels.upload_delays_batch(gains, powers, bits, channels, 1e-10, 5e6)
        kernels.set_backend(previous)
