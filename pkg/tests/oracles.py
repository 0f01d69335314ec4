"""Brute-force reference implementations used only by the test suite.

Everything here favors explicit loops and dictionaries over vectorized
code so that indexing or broadcasting mistakes in the package cannot hide:
co-occurrence matrices come from literal pixel-pair enumeration, size zones
from a hand-rolled flood fill, statistics from sorted lists.
"""

from __future__ import annotations

import math

import numpy as np


def percentile_linear(sorted_values, q):
    """Linear-interpolation percentile on a pre-sorted list."""
    n = len(sorted_values)
    if n == 1:
        return float(sorted_values[0])
    rank = q / 100.0 * (n - 1)
    lo = int(math.floor(rank))
    hi = int(math.ceil(rank))
    frac = rank - lo
    return float(sorted_values[lo] * (1 - frac) + sorted_values[hi] * frac)


def oracle_quantize(image, roi, n_levels):
    values = [float(image[y][x]) for y, x in zip(*np.nonzero(roi))]
    lo, hi = min(values), max(values)
    out = np.zeros(np.asarray(image).shape, dtype=int)
    for y, x in zip(*np.nonzero(roi)):
        if hi <= lo:
            out[y, x] = 1
        else:
            level = int((float(image[y][x]) - lo) / (hi - lo) * n_levels) + 1
            out[y, x] = min(max(level, 1), n_levels)
    return out


def oracle_firstorder(image, roi):
    values = sorted(float(image[y][x]) for y, x in zip(*np.nonzero(roi)))
    n = len(values)
    mean = sum(values) / n
    m2 = sum((v - mean) ** 2 for v in values) / n
    m3 = sum((v - mean) ** 3 for v in values) / n
    m4 = sum((v - mean) ** 4 for v in values) / n

    lo, hi = values[0], values[-1]
    bins = [0] * 16
    if hi > lo:
        for v in values:
            idx = int((v - lo) / (hi - lo) * 16)
            bins[min(idx, 15)] += 1
        probs = [b / n for b in bins if b]
    else:
        probs = [1.0]
    entropy = -sum(p * math.log2(p) for p in probs)
    uniformity = sum(p * p for p in probs)

    p10 = percentile_linear(values, 10)
    p25 = percentile_linear(values, 25)
    p75 = percentile_linear(values, 75)
    p90 = percentile_linear(values, 90)
    robust = [v for v in values if p10 <= v <= p90]
    rmean = sum(robust) / len(robust)
    rmad = sum(abs(v - rmean) for v in robust) / len(robust)

    energy = sum(v * v for v in values)
    median = percentile_linear(values, 50)
    return np.array(
        [
            energy,
            entropy,
            lo,
            p10,
            p90,
            hi,
            mean,
            median,
            p75 - p25,
            hi - lo,
            sum(abs(v - mean) for v in values) / n,
            rmad,
            math.sqrt(energy / n),
            m3 / m2**1.5 if m2 > 0 else 0.0,
            m4 / m2**2 if m2 > 0 else 0.0,
            m2,
            uniformity,
            energy,
        ]
    )


def oracle_cooccurrence(levels, roi, offset, n_levels):
    """Pair enumeration for one offset; symmetric, normalized; None if no pair."""
    h, w = np.asarray(roi).shape
    dy, dx = offset
    counts = {}
    total = 0
    for y in range(h):
        for x in range(w):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h and 0 <= nx < w):
                continue
            if roi[y][x] and roi[ny][nx]:
                a, b = int(levels[y][x]), int(levels[ny][nx])
                counts[(a, b)] = counts.get((a, b), 0) + 1
                counts[(b, a)] = counts.get((b, a), 0) + 1
                total += 2
    if not total:
        return None
    p = np.zeros((n_levels, n_levels))
    for (a, b), c in counts.items():
        p[a - 1, b - 1] = c / total
    return p


def oracle_glcm(levels, roi, n_levels, offsets):
    per_offset = []
    for offset in offsets:
        p = oracle_cooccurrence(levels, roi, offset, n_levels)
        if p is not None:
            per_offset.append(_oracle_glcm_single(p, n_levels))
    if not per_offset:
        return np.zeros(24)
    return np.mean(per_offset, axis=0)


def _oracle_glcm_single(p, n_levels):
    rng_levels = range(1, n_levels + 1)
    px = {i: sum(p[i - 1, j - 1] for j in rng_levels) for i in rng_levels}
    py = {j: sum(p[i - 1, j - 1] for i in rng_levels) for j in rng_levels}
    ux = sum(i * px[i] for i in rng_levels)
    uy = sum(j * py[j] for j in rng_levels)
    sigx = math.sqrt(sum((i - ux) ** 2 * px[i] for i in rng_levels))
    sigy = math.sqrt(sum((j - uy) ** 2 * py[j] for j in rng_levels))

    p_sum = {k: 0.0 for k in range(2, 2 * n_levels + 1)}
    p_diff = {k: 0.0 for k in range(0, n_levels)}
    for i in rng_levels:
        for j in rng_levels:
            p_sum[i + j] += p[i - 1, j - 1]
            p_diff[abs(i - j)] += p[i - 1, j - 1]

    def ent(probs):
        return -sum(q * math.log2(q) for q in probs if q > 0)

    hx = ent(px.values())
    hy = ent(py.values())
    hxy = ent(p.ravel())
    hxy1 = -sum(
        p[i - 1, j - 1] * math.log2(px[i] * py[j])
        for i in rng_levels
        for j in rng_levels
        if p[i - 1, j - 1] > 0
    )
    hxy2 = ent([px[i] * py[j] for i in rng_levels for j in rng_levels])

    autocorrelation = sum(i * j * p[i - 1, j - 1] for i in rng_levels for j in rng_levels)
    cluster = lambda power: sum(
        (i + j - ux - uy) ** power * p[i - 1, j - 1] for i in rng_levels for j in rng_levels
    )
    contrast = sum((i - j) ** 2 * p[i - 1, j - 1] for i in rng_levels for j in rng_levels)
    if sigx * sigy > 0:
        correlation = (
            sum((i - ux) * (j - uy) * p[i - 1, j - 1] for i in rng_levels for j in rng_levels)
            / (sigx * sigy)
        )
    else:
        correlation = 1.0
    diff_avg = sum(k * v for k, v in p_diff.items())
    diff_var = sum((k - diff_avg) ** 2 * v for k, v in p_diff.items())
    imc1 = (hxy - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    imc2 = math.sqrt(max(0.0, 1.0 - math.exp(-2.0 * (hxy2 - hxy))))
    idm = sum(p[i - 1, j - 1] / (1 + (i - j) ** 2) for i in rng_levels for j in rng_levels)
    idmn = sum(
        p[i - 1, j - 1] / (1 + ((i - j) / n_levels) ** 2) for i in rng_levels for j in rng_levels
    )
    inv_d = sum(p[i - 1, j - 1] / (1 + abs(i - j)) for i in rng_levels for j in rng_levels)
    idn = sum(
        p[i - 1, j - 1] / (1 + abs(i - j) / n_levels) for i in rng_levels for j in rng_levels
    )
    inverse_variance = sum(
        p[i - 1, j - 1] / (i - j) ** 2 for i in rng_levels for j in rng_levels if i != j
    )
    sum_avg = sum(k * v for k, v in p_sum.items())

    present = [i for i in rng_levels if px[i] > 0]
    if len(present) >= 2:
        q = np.zeros((len(present), len(present)))
        for a, i in enumerate(present):
            for b, j in enumerate(present):
                q[a, b] = sum(
                    p[i - 1, k - 1] * p[j - 1, k - 1] / (px[i] * py[k])
                    for k in present
                    if py[k] > 0
                )
        eigvals = sorted(np.linalg.eigvals(q).real)
        mcc = math.sqrt(max(0.0, eigvals[-2]))
    else:
        mcc = 1.0

    return np.array(
        [
            autocorrelation,
            ux,
            cluster(4),
            cluster(3),
            cluster(2),
            contrast,
            correlation,
            diff_avg,
            ent(p_diff.values()),
            diff_var,
            sum(v * v for v in p.ravel()),
            hxy,
            imc1,
            imc2,
            idm,
            idmn,
            inv_d,
            idn,
            inverse_variance,
            p.max(),
            sum_avg,
            ent(p_sum.values()),
            sum((i - ux) ** 2 * p[i - 1, j - 1] for i in rng_levels for j in rng_levels),
            mcc,
        ]
    )


def oracle_zones(levels, roi):
    """Flood-fill enumeration of 4-connected equal-level zones."""
    h, w = np.asarray(roi).shape
    remaining = {(y, x) for y, x in zip(*np.nonzero(roi))}
    zones = []
    while remaining:
        seed = min(remaining)
        value = int(levels[seed[0], seed[1]])
        frontier = [seed]
        remaining.discard(seed)
        size = 0
        while frontier:
            y, x = frontier.pop()
            size += 1
            for ny, nx in ((y - 1, x), (y + 1, x), (y, x - 1), (y, x + 1)):
                if (ny, nx) in remaining and int(levels[ny, nx]) == value:
                    remaining.discard((ny, nx))
                    frontier.append((ny, nx))
        zones.append((value, size))
    return zones


def oracle_glszm(levels, roi):
    zones = oracle_zones(levels, roi)
    n_pixels = sum(1 for _ in zip(*np.nonzero(roi)))
    nz = len(zones)
    mean_g = sum(g for g, _ in zones) / nz
    mean_s = sum(s for _, s in zones) / nz

    gray_counts = {}
    size_counts = {}
    cell_counts = {}
    for g, s in zones:
        gray_counts[g] = gray_counts.get(g, 0) + 1
        size_counts[s] = size_counts.get(s, 0) + 1
        cell_counts[(g, s)] = cell_counts.get((g, s), 0) + 1

    def zsum(f):
        return sum(f(g, s) for g, s in zones) / nz

    zone_entropy = -sum(
        (c / nz) * math.log2(c / nz) for c in cell_counts.values()
    )
    return np.array(
        [
            zsum(lambda g, s: 1 / s**2),
            zsum(lambda g, s: s**2),
            sum(c**2 for c in gray_counts.values()) / nz,
            sum(c**2 for c in gray_counts.values()) / nz**2,
            sum(c**2 for c in size_counts.values()) / nz,
            sum(c**2 for c in size_counts.values()) / nz**2,
            nz / n_pixels,
            zsum(lambda g, s: (g - mean_g) ** 2),
            zsum(lambda g, s: (s - mean_s) ** 2),
            zone_entropy,
            zsum(lambda g, s: 1 / g**2),
            zsum(lambda g, s: g**2),
            zsum(lambda g, s: 1 / (g**2 * s**2)),
            zsum(lambda g, s: g**2 / s**2),
            zsum(lambda g, s: s**2 / g**2),
            zsum(lambda g, s: g**2 * s**2),
        ]
    )


def finite_difference_gradients(loss_fn, tensors, h):
    """Central finite differences of a scalar loss over named tensors."""
    out = {}
    for name, t in tensors.items():
        fd = np.zeros_like(t.data)
        it = np.nditer(t.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            original = t.data[idx]
            t.data[idx] = original + h
            up = loss_fn().item()
            t.data[idx] = original - h
            down = loss_fn().item()
            t.data[idx] = original
            fd[idx] = (up - down) / (2.0 * h)
        out[name] = fd
    return out


def relative_error(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return float(np.linalg.norm(a - b) / denom)
