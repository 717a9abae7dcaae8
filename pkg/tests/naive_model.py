"""Straight-from-the-formula reference model used only by the tests.

Deliberately naive and independent of the package code paths: plain python
floats, nested loops over the full (M, N) binary allocation matrix, the
indicator written out as a comparison.  The package must agree with this
module to 1e-12 relative tolerance on small instances.
"""

import math


def inter_cell(gains, powers, alloc, m, n):
    m_count, n_count = len(gains), len(gains[0])
    total = 0.0
    for k in range(m_count):
        if k == m:
            continue
        for other in range(n_count):
            if other == n:
                continue
            if alloc[k][other] == 1 and gains[k][other] < gains[m][n]:
                total += powers[k][other] * gains[k][other]
    return total


def intra_cell(gains, powers, alloc, m, n):
    m_count = len(gains)
    total = 0.0
    for k in range(m_count):
        if k == m:
            continue
        if alloc[k][n] == 1 and gains[k][n] < gains[m][n]:
            total += powers[k][n] * gains[k][n]
    return total


def rate(bandwidth, noise, gains, powers, alloc, m, n):
    if alloc[m][n] != 1:
        return 0.0
    denom = (inter_cell(gains, powers, alloc, m, n)
             + intra_cell(gains, powers, alloc, m, n)
             + noise)
    return bandwidth * math.log2(1.0 + powers[m][n] * gains[m][n] / denom)


def device_rate(bandwidth, noise, gains, powers, alloc, m):
    return sum(rate(bandwidth, noise, gains, powers, alloc, m, n)
               for n in range(len(gains[0])))


def upload_delay(bandwidth, noise, gains, powers, bits, alloc, m):
    r = device_rate(bandwidth, noise, gains, powers, alloc, m)
    return bits[m] / r if r > 0.0 else math.inf


def all_delays(bandwidth, noise, gains, powers, bits, alloc):
    return [upload_delay(bandwidth, noise, gains, powers, bits, alloc, m)
            for m in range(len(gains))]


def system_upload(delays, deadline):
    d_tx = min(max(delays), deadline)
    return d_tx, [d <= deadline for d in delays]


def training(alpha, sigma, round_cap, compute_rate, received, batch_size=100.0):
    # Written as the per-batch composition: a batch takes batch_size /
    # compute_rate seconds, a round runs received / batch_size batches.
    if received == 0:
        return round_cap, 0.0
    per_batch = batch_size / compute_rate
    per_round = per_batch * received / batch_size
    k_r = min(round_cap, math.ceil(alpha / received ** sigma))
    return k_r, k_r * per_round


def total(bandwidth, noise, gains, powers, bits, samples, alloc, deadline,
          alpha, sigma, round_cap, compute_rate, batch_size=100.0):
    delays = all_delays(bandwidth, noise, gains, powers, bits, alloc)
    d_tx, mask = system_upload(delays, deadline)
    received = sum(w for w, ok in zip(samples, mask) if ok)
    k_r, d_cpu = training(alpha, sigma, round_cap, compute_rate, received, batch_size)
    return {
        "delays": delays,
        "d_tx": d_tx,
        "mask": mask,
        "received": received,
        "k_r": k_r,
        "d_cpu": d_cpu,
        "d_total": d_tx + d_cpu,
    }
