"""Gray-level quantization for texture matrices."""

from __future__ import annotations

import numpy as np

N_LEVELS = 16


def quantize(image: np.ndarray, roi_mask: np.ndarray, n_levels: int = N_LEVELS) -> np.ndarray:
    """Equal-width binning of ROI intensities into integer levels 1..n_levels.

    Bin edges span [min, max] of the ROI; the maximum maps into the top
    level. A constant ROI maps to level 1 everywhere. Pixels outside the
    ROI are 0 in the returned map.
    """
    roi = np.asarray(roi_mask) > 0
    if not roi.any():
        raise ValueError("quantize needs a non-empty ROI")
    if n_levels < 2:
        raise ValueError(f"n_levels must be at least 2, got {n_levels}")
    values = np.asarray(image, dtype=np.float64)
    lo = values[roi].min()
    hi = values[roi].max()
    levels = np.zeros(values.shape, dtype=np.int32)
    if hi <= lo:
        levels[roi] = 1
        return levels
    scaled = np.floor((values[roi] - lo) / (hi - lo) * n_levels).astype(np.int32) + 1
    levels[roi] = np.clip(scaled, 1, n_levels)
    return levels
