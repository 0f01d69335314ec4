"""2-D shape descriptors of a binary region of interest.

9 values in a fixed order (see docs/radiomic_features.md). Perimeter counts
exposed pixel edges under 4-connectivity, so circularity 4*pi*A/P^2 is
bounded by pi/4 on this grid (squares are the grid-isoperimetric optimum).
Axis lengths come from the eigenvalues of the pixel-coordinate covariance
with the unit-pixel extent term (1/12 per axis) included, which keeps
elongation in (0, 1] even for single pixels and one-pixel-wide lines.
"""

from __future__ import annotations

import math

import numpy as np

SHAPE_NAMES = (
    "area",
    "perimeter",
    "perimeter_area_ratio",
    "circularity",
    "major_axis_length",
    "minor_axis_length",
    "elongation",
    "maximum_diameter",
    "eccentricity",
)

CIRCULARITY_GRID_BOUND = math.pi / 4.0


def _exposed_edges(roi: np.ndarray) -> np.ndarray:
    """Per-pixel count of 4-neighbor edges facing outside the ROI."""
    padded = np.pad(roi, 1)
    inside = padded[1:-1, 1:-1]
    exposure = (
        (~padded[:-2, 1:-1]).astype(int)
        + (~padded[2:, 1:-1]).astype(int)
        + (~padded[1:-1, :-2]).astype(int)
        + (~padded[1:-1, 2:]).astype(int)
    )
    return np.where(inside, exposure, 0)


def shape_features(roi_mask: np.ndarray) -> np.ndarray:
    roi = np.asarray(roi_mask) > 0
    if not roi.any():
        raise ValueError("shape features need a non-empty ROI")

    area = float(roi.sum())
    exposure = _exposed_edges(roi)
    perimeter = float(exposure.sum())

    ys, xs = np.nonzero(roi)
    coords = np.stack([ys, xs], axis=1).astype(np.float64)
    cov = np.cov(coords, rowvar=False, bias=True) if len(coords) > 1 else np.zeros((2, 2))
    cov = np.atleast_2d(cov) + np.eye(2) / 12.0
    lam_minor, lam_major = np.linalg.eigvalsh(cov)
    major = 4.0 * math.sqrt(lam_major)
    minor = 4.0 * math.sqrt(lam_minor)

    boundary = coords[exposure[ys, xs] > 0]
    if len(boundary) > 1:
        diffs = boundary[:, None, :] - boundary[None, :, :]
        max_diameter = float(np.sqrt((diffs**2).sum(axis=2)).max())
    else:
        max_diameter = 0.0

    return np.array(
        [
            area,
            perimeter,
            perimeter / area,
            4.0 * math.pi * area / perimeter**2,
            major,
            minor,
            minor / major,
            max_diameter,
            math.sqrt(max(0.0, 1.0 - lam_minor / lam_major)),
        ]
    )
