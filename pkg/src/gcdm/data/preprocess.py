"""Real-image preparation: crop to tissue, resize, truncation-normalize."""

from __future__ import annotations

import numpy as np
from PIL import Image

from gcdm.labeling import largest_component

FOREGROUND_THRESHOLD = 0.02
PERCENTILE_LOW = 1.0
PERCENTILE_HIGH = 99.0


def resize_bilinear(image: np.ndarray, size: int) -> np.ndarray:
    """Bilinear resample of a float image to size x size."""
    img = Image.fromarray(np.asarray(image, dtype=np.float32), mode="F")
    return np.asarray(img.resize((size, size), Image.BILINEAR), dtype=np.float64)


def truncation_normalize(image: np.ndarray, p_low: float, p_high: float) -> np.ndarray:
    """Clip to the [p_low, p_high] percentiles and rescale to [0, 1].

    A degenerate window (all intensities equal after clipping) maps to all
    zeros by convention.
    """
    lo = np.percentile(image, p_low)
    hi = np.percentile(image, p_high)
    if hi <= lo:
        return np.zeros_like(image, dtype=np.float64)
    return (np.clip(image, lo, hi) - lo) / (hi - lo)


def preprocess_real(
    image: np.ndarray,
    size: int = 64,
    threshold: float = FOREGROUND_THRESHOLD,
    p_low: float = PERCENTILE_LOW,
    p_high: float = PERCENTILE_HIGH,
) -> np.ndarray:
    """Crop to the largest foreground component, resize, normalize contrast.

    Foreground is intensity above `threshold`; the crop is the bounding box
    of its largest 4-connected component. Percentiles are taken over the
    resized crop.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError(f"expected a single-channel image, got shape {image.shape}")
    component = largest_component(image > threshold)
    ys, xs = np.nonzero(component)
    crop = image[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
    resized = resize_bilinear(crop, size)
    return truncation_normalize(resized, p_low, p_high).astype(np.float32)
