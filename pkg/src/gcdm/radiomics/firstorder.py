"""First-order intensity statistics over a region of interest.

18 values in a fixed order (see docs/radiomic_features.md). Entropy and
uniformity are computed on an equal-width histogram between the ROI min and
max (16 bins; a constant ROI is a single certain bin). Percentiles use
linear interpolation. Skewness and kurtosis are population moments; both
are 0 by convention when the variance vanishes, and kurtosis is not
excess-corrected.
"""

from __future__ import annotations

import numpy as np

FIRSTORDER_NAMES = (
    "energy",
    "entropy",
    "minimum",
    "percentile10",
    "percentile90",
    "maximum",
    "mean",
    "median",
    "interquartile_range",
    "range",
    "mean_absolute_deviation",
    "robust_mean_absolute_deviation",
    "root_mean_square",
    "skewness",
    "kurtosis",
    "variance",
    "uniformity",
    "total_energy",
)

HISTOGRAM_BINS = 16
PIXEL_AREA = 1.0


def _histogram_probabilities(values: np.ndarray, bins: int = HISTOGRAM_BINS) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi <= lo:
        return np.ones(1)
    idx = np.clip(np.floor((values - lo) / (hi - lo) * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return counts / counts.sum()


def firstorder_features(image: np.ndarray, roi_mask: np.ndarray) -> np.ndarray:
    roi = np.asarray(roi_mask) > 0
    if not roi.any():
        raise ValueError("first-order features need a non-empty ROI")
    x = np.asarray(image, dtype=np.float64)[roi]

    p = _histogram_probabilities(x)
    nonzero = p[p > 0]
    entropy = float(-(nonzero * np.log2(nonzero)).sum())
    uniformity = float((p * p).sum())

    mean = x.mean()
    centered = x - mean
    m2 = (centered**2).mean()
    if m2 > 0:
        skewness = (centered**3).mean() / m2**1.5
        kurtosis = (centered**4).mean() / m2**2
    else:
        skewness = 0.0
        kurtosis = 0.0

    p10, p25, p75, p90 = np.percentile(x, [10, 25, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]
    rmad = float(np.abs(robust - robust.mean()).mean()) if robust.size else 0.0

    energy = float((x**2).sum())
    return np.array(
        [
            energy,
            entropy,
            float(x.min()),
            float(p10),
            float(p90),
            float(x.max()),
            float(mean),
            float(np.median(x)),
            float(p75 - p25),
            float(x.max() - x.min()),
            float(np.abs(centered).mean()),
            rmad,
            float(np.sqrt((x**2).mean())),
            float(skewness),
            float(kurtosis),
            float(m2),
            uniformity,
            PIXEL_AREA * energy,
        ]
    )
