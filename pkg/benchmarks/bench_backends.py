#!/usr/bin/env python3
"""Benchmark the numba kernel backend against the pure-numpy fallback.

Times the three hot paths: a single-allocation delay evaluation, the batch
evaluation the exhaustive oracle relies on, and a full delay-descent
allocator run.  Medians over repeated calls, compilation warmed up first.

    python3 benchmarks/bench_backends.py [--m 10] [--n 8] [--repeats 200]
"""

import argparse
import statistics
import time

import numpy as np

from nomaedge import GenSpec, dd_maxh, generate, kernels
from nomaedge.allocate import _enumerate_assignments


def time_call(fn, repeats):
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--m", type=int, default=10, help="devices (default 10)")
    parser.add_argument("--n", type=int, default=8, help="channels (default 8)")
    parser.add_argument("--batch-m", type=int, default=6,
                        help="devices for the batch case (default 6, 3 channels)")
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    scenario = generate(GenSpec(seed=1, num_devices=args.m, num_channels=args.n))
    channels = np.argmax(scenario.gains, axis=1).astype(np.int64)
    small = generate(GenSpec(seed=1, num_devices=args.batch_m, num_channels=3))
    assignments = _enumerate_assignments(args.batch_m, 3)

    cases = {
        f"single delay eval (M={args.m}, N={args.n})": lambda: kernels.upload_delays(
            scenario.gains, scenario.powers, scenario.dataset_bits,
            channels, scenario.noise_w, scenario.bandwidth_hz),
        f"batch of {len(assignments)} assignments (M={args.batch_m}, N=3)":
            lambda: kernels.upload_delays_batch(
                small.gains, small.powers, small.dataset_bits,
                assignments, small.noise_w, small.bandwidth_hz),
        f"dd-maxh end to end (M={args.m}, N={args.n})": lambda: dd_maxh(scenario),
    }

    backends = kernels.available_backends()
    if "numba" not in backends:
        print("numba backend unavailable; timing numpy only")

    results = {}
    for backend in backends:
        previous = kernels.set_backend(backend)
        for fn in cases.values():
            fn()  # warm-up (jit compile, cache touch)
        results[backend] = {label: time_call(fn, args.repeats)
                            for label, fn in cases.items()}
        kernels.set_backend(previous)

    width = max(len(label) for label in cases)
    header = f"{'case'.ljust(width)}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) > 1:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label in cases:
        row = label.ljust(width) + "  "
        row += "".join(f"{results[b][label] * 1e6:>10.1f}us" for b in backends)
        if "numba" in results and "numpy" in results:
            row += f"{results['numpy'][label] / results['numba'][label]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
