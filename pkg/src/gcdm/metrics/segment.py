"""Deterministic phantom segmenter for consistency evaluation.

Two Otsu thresholds over a 256-bin histogram split the image into
background / breast / mass; tiny mass specks are folded back into breast.
Binning spans the image's own intensity range, so a global brightness
rescale leaves the predicted mask unchanged.
"""

from __future__ import annotations

import numpy as np

from gcdm.labeling import component_sizes, label_components
from gcdm.maskproc import TriMask

HISTOGRAM_BINS = 256
MIN_MASS_PIXELS = 5


def otsu_two_thresholds(values: np.ndarray, bins: int = HISTOGRAM_BINS) -> tuple[int, int]:
    """Bin-index pair (t1, t2) maximizing three-class between-class variance.

    Exhaustive search over the threshold grid, vectorized; ties resolve to
    the smallest (t1, t2) pair so the result is deterministic.
    """
    counts = np.bincount(values, minlength=bins).astype(np.float64)
    total = counts.sum()
    weight = np.concatenate([[0.0], np.cumsum(counts)])
    moment = np.concatenate([[0.0], np.cumsum(counts * np.arange(bins))])
    grand_mean = moment[-1] / total

    t1 = np.arange(1, bins)[:, None]
    t2 = np.arange(1, bins)[None, :]
    w0 = weight[t1]
    w1 = weight[t2] - weight[t1]
    w2 = total - weight[t2]
    valid = (t2 > t1) & (w0 > 0) & (w1 > 0) & (w2 > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        m0 = moment[t1] / w0
        m1 = (moment[t2] - moment[t1]) / w1
        m2 = (moment[-1] - moment[t2]) / w2
        var_between = (
            w0 * (m0 - grand_mean) ** 2
            + w1 * (m1 - grand_mean) ** 2
            + w2 * (m2 - grand_mean) ** 2
        )
    var_between = np.where(valid, var_between, -np.inf)
    flat = int(var_between.argmax())
    return 1 + flat // (bins - 1), 1 + flat % (bins - 1)


def segment_generated(image: np.ndarray) -> TriMask:
    """Threshold a [0, 1] image into a TriMask; constant images are background."""
    image = np.asarray(image, dtype=np.float64)
    lo, hi = image.min(), image.max()
    h, w = image.shape
    if hi <= lo:
        channels = np.zeros((3, h, w), dtype=np.float32)
        channels[0] = 1.0
        return TriMask(channels)

    scaled = (image - lo) / (hi - lo) * HISTOGRAM_BINS
    bin_index = np.clip(np.floor(scaled).astype(int), 0, HISTOGRAM_BINS - 1)
    t1, t2 = otsu_two_thresholds(bin_index.ravel())
    classes = np.where(bin_index >= t2, 2, np.where(bin_index >= t1, 1, 0))

    # fold sub-threshold mass specks back into breast
    labels, count = label_components(classes == 2)
    if count:
        sizes = component_sizes(labels, count)
        for label in range(1, count + 1):
            if sizes[label] < MIN_MASS_PIXELS:
                classes[labels == label] = 1

    channels = np.stack([classes == 0, classes == 1, classes == 2]).astype(np.float32)
    return TriMask(channels)
