"""Tri-channel semantic masks and Gaussian soft labels.

A TriMask partitions the image into background / breast tissue / mass, one
binary channel each. The soft form blurs the mass channel (optionally all
channels) with a normalized Gaussian so lesion boundaries blend into the
surrounding tissue when used as a conditioning input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BACKGROUND, BREAST, MASS = 0, 1, 2

#: blur widths exercised by the soft-label sweep (0 means hard labels)
SWEEP_SIGMAS = (0.0, 1.0, 1.5, 2.0, 2.5, 3.0)


@dataclass(frozen=True)
class TriMask:
    """Binary (3, H, W) partition; channels sum to 1 at every pixel."""

    channels: np.ndarray

    def __post_init__(self):
        ch = np.asarray(self.channels)
        if ch.ndim != 3 or ch.shape[0] != 3:
            raise ValueError(f"TriMask needs shape (3, H, W), got {ch.shape}")
        if not np.isin(ch, (0, 1)).all():
            raise ValueError("TriMask channels must be binary")
        if not (ch.sum(axis=0) == 1).all():
            raise ValueError("TriMask channels must partition the image")
        object.__setattr__(self, "channels", ch.astype(np.float32))

    @property
    def background(self) -> np.ndarray:
        return self.channels[BACKGROUND]

    @property
    def breast(self) -> np.ndarray:
        return self.channels[BREAST]

    @property
    def mass(self) -> np.ndarray:
        return self.channels[MASS]

    @property
    def shape(self) -> tuple[int, int]:
        return self.channels.shape[1:]


@dataclass(frozen=True)
class SoftMask:
    """Real-valued [0, 1] channels after blurring; equals the TriMask at sigma 0."""

    channels: np.ndarray
    sigma: float


def build_mask(breast_region: np.ndarray, lesion_regions: list[np.ndarray]) -> TriMask:
    """Assemble a TriMask from a breast raster and per-lesion rasters.

    The mass channel is the union of the lesions; breast excludes it. Any
    lesion pixel outside the breast raster is rejected.
    """
    breast_region = np.asarray(breast_region) > 0
    mass = np.zeros_like(breast_region)
    for lesion in lesion_regions:
        lesion = np.asarray(lesion) > 0
        if lesion.shape != breast_region.shape:
            raise ValueError("lesion raster shape differs from breast raster")
        if (lesion & ~breast_region).any():
            raise ValueError("lesion extends outside the breast region")
        mass |= lesion
    breast = breast_region & ~mass
    background = ~(breast | mass)
    return TriMask(np.stack([background, breast, mass]).astype(np.float32))


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Discrete normalized Gaussian, radius ceil(3*sigma); sigma 0 gives [1]."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    if sigma == 0:
        return np.ones(1)
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    return kernel / kernel.sum()


def blur_channel(channel: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Separable convolution with mirror padding at the borders.

    Linear in the input, and mass-preserving for interior-supported input
    since the kernel is normalized.
    """
    radius = len(kernel) // 2
    if radius == 0:
        return channel.astype(np.float64)
    padded = np.pad(channel.astype(np.float64), radius, mode="symmetric")
    rows = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="valid"), 1, padded)
    return np.apply_along_axis(lambda col: np.convolve(col, kernel, mode="valid"), 0, rows)


def soften(mask: TriMask, sigma: float, scope: str = "lesion_only") -> SoftMask:
    """Blur the selected channel(s); untouched channels pass through."""
    if scope not in ("lesion_only", "all_channels"):
        raise ValueError(f"unknown soften scope {scope!r}")
    kernel = gaussian_kernel(sigma)
    out = mask.channels.astype(np.float64).copy()
    targets = (MASS,) if scope == "lesion_only" else (BACKGROUND, BREAST, MASS)
    for idx in targets:
        out[idx] = blur_channel(out[idx], kernel)
    return SoftMask(np.clip(out, 0.0, 1.0).astype(np.float32), sigma=float(sigma))
