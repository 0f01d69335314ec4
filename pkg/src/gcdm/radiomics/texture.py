"""Gray-level co-occurrence and size-zone texture features.

Conventions (frozen; see docs/radiomic_features.md):

* GLCM: distance-1 offsets (0,1), (1,0), (1,1), (1,-1); each offset matrix
  is made symmetric and normalized over ROI-interior pairs; every feature
  is averaged over the offsets that produced at least one pair. No pair
  anywhere (e.g. ROI below 2 pixels) yields an all-zero feature vector.
  Entropies are base-2 sums over nonzero entries. Degenerate cases:
  correlation is 1 when either marginal deviation vanishes, IMC1 is 0 when
  max(HX, HY) is 0, IMC2 clamps its radicand at 0, and MCC is 1 when fewer
  than two gray levels are present. The Idn/Idmn normalizer is the
  quantizer depth, not the number of occupied levels.
* GLSZM: zones are 4-connected components of equal level inside the ROI;
  zone sizes therefore sum to the ROI pixel count.
"""

from __future__ import annotations

import numpy as np

from gcdm.labeling import label_components

GLCM_OFFSETS = ((0, 1), (1, 0), (1, 1), (1, -1))

GLCM_NAMES = (
    "autocorrelation",
    "joint_average",
    "cluster_prominence",
    "cluster_shade",
    "cluster_tendency",
    "contrast",
    "correlation",
    "difference_average",
    "difference_entropy",
    "difference_variance",
    "joint_energy",
    "joint_entropy",
    "imc1",
    "imc2",
    "inverse_difference_moment",
    "inverse_difference_moment_normalized",
    "inverse_difference",
    "inverse_difference_normalized",
    "inverse_variance",
    "maximum_probability",
    "sum_average",
    "sum_entropy",
    "sum_squares",
    "mcc",
)

GLSZM_NAMES = (
    "small_area_emphasis",
    "large_area_emphasis",
    "gray_level_nonuniformity",
    "gray_level_nonuniformity_normalized",
    "size_zone_nonuniformity",
    "size_zone_nonuniformity_normalized",
    "zone_percentage",
    "gray_level_variance",
    "zone_variance",
    "zone_entropy",
    "low_gray_level_zone_emphasis",
    "high_gray_level_zone_emphasis",
    "small_area_low_gray_level_emphasis",
    "small_area_high_gray_level_emphasis",
    "large_area_low_gray_level_emphasis",
    "large_area_high_gray_level_emphasis",
)


def _entropy2(p: np.ndarray) -> float:
    nonzero = p[p > 0]
    return float(-(nonzero * np.log2(nonzero)).sum())


def cooccurrence_matrix(levels, roi, offset, n_levels):
    """Symmetric normalized co-occurrence matrix for one offset, or None."""
    roi = np.asarray(roi) > 0
    dy, dx = offset
    h, w = roi.shape
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    ys2 = slice(max(0, dy), min(h, h + dy))
    xs2 = slice(max(0, dx), min(w, w + dx))
    both = roi[ys, xs] & roi[ys2, xs2]
    if not both.any():
        return None
    a = levels[ys, xs][both] - 1
    b = levels[ys2, xs2][both] - 1
    matrix = np.zeros((n_levels, n_levels), dtype=np.float64)
    np.add.at(matrix, (a, b), 1.0)
    matrix += matrix.T
    return matrix / matrix.sum()


def _glcm_single(p: np.ndarray, n_levels: int) -> np.ndarray:
    i = np.arange(1, n_levels + 1, dtype=np.float64)
    ii, jj = np.meshgrid(i, i, indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    ux = float((ii * p).sum())
    uy = float((jj * p).sum())
    sigx = float(np.sqrt(((i - ux) ** 2 * px).sum()))
    sigy = float(np.sqrt(((i - uy) ** 2 * py).sum()))

    k_sum = np.arange(2, 2 * n_levels + 1, dtype=np.float64)
    p_sum = np.array([p[ii + jj == k].sum() for k in k_sum])
    k_diff = np.arange(0, n_levels, dtype=np.float64)
    p_diff = np.array([p[np.abs(ii - jj) == k].sum() for k in k_diff])

    hx = _entropy2(px)
    hy = _entropy2(py)
    hxy = _entropy2(p)
    pxpy = np.outer(px, py)
    joint_nonzero = p > 0
    hxy1 = float(-(p[joint_nonzero] * np.log2(pxpy[joint_nonzero])).sum())
    hxy2 = _entropy2(pxpy)

    contrast = float(((ii - jj) ** 2 * p).sum())
    if sigx * sigy > 0:
        correlation = float((((ii - ux) * (jj - uy) * p).sum()) / (sigx * sigy))
    else:
        correlation = 1.0
    diff_avg = float((k_diff * p_diff).sum())
    imc1 = (hxy - hxy1) / max(hx, hy) if max(hx, hy) > 0 else 0.0
    imc2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy)))))

    off_diag = ~np.eye(n_levels, dtype=bool)
    inverse_variance = float((p[off_diag] / (ii - jj)[off_diag] ** 2).sum())

    present = px > 0
    if present.sum() >= 2:
        sub = p[np.ix_(present, present)]
        margin = px[present]
        q = (sub / margin[:, None]) @ (sub / margin[None, :]).T
        eigvals = np.sort(np.linalg.eigvals(q).real)
        mcc = float(np.sqrt(max(0.0, eigvals[-2])))
    else:
        mcc = 1.0

    return np.array(
        [
            float((ii * jj * p).sum()),
            ux,
            float(((ii + jj - ux - uy) ** 4 * p).sum()),
            float(((ii + jj - ux - uy) ** 3 * p).sum()),
            float(((ii + jj - ux - uy) ** 2 * p).sum()),
            contrast,
            correlation,
            diff_avg,
            _entropy2(p_diff),
            float((p_diff * (k_diff - diff_avg) ** 2).sum()),
            float((p * p).sum()),
            hxy,
            imc1,
            imc2,
            float((p / (1.0 + (ii - jj) ** 2)).sum()),
            float((p / (1.0 + ((ii - jj) / n_levels) ** 2)).sum()),
            float((p / (1.0 + np.abs(ii - jj))).sum()),
            float((p / (1.0 + np.abs(ii - jj) / n_levels)).sum()),
            inverse_variance,
            float(p.max()),
            float((k_sum * p_sum).sum()),
            _entropy2(p_sum),
            float(((ii - ux) ** 2 * p).sum()),
            mcc,
        ]
    )


def glcm_features(levels: np.ndarray, roi_mask: np.ndarray, n_levels: int,
                  offsets=GLCM_OFFSETS) -> np.ndarray:
    """24 co-occurrence features averaged over the distance-1 offsets."""
    per_offset = []
    for offset in offsets:
        p = cooccurrence_matrix(levels, roi_mask, offset, n_levels)
        if p is not None:
            per_offset.append(_glcm_single(p, n_levels))
    if not per_offset:
        return np.zeros(len(GLCM_NAMES))
    return np.mean(per_offset, axis=0)


def zone_matrix(levels: np.ndarray, roi_mask: np.ndarray) -> list[tuple[int, int]]:
    """(gray level, zone size) for every 4-connected equal-level zone."""
    roi = np.asarray(roi_mask) > 0
    zones = []
    for value in np.unique(levels[roi]):
        labeled, count = label_components((levels == value) & roi)
        if count:
            sizes = np.bincount(labeled.ravel())[1:]
            zones.extend((int(value), int(s)) for s in sizes)
    return zones


def glszm_features(levels: np.ndarray, roi_mask: np.ndarray) -> np.ndarray:
    """16 size-zone features over 4-connected equal-level zones."""
    roi = np.asarray(roi_mask) > 0
    n_pixels = int(roi.sum())
    if n_pixels == 0:
        raise ValueError("size-zone features need a non-empty ROI")
    zones = zone_matrix(levels, roi)
    g = np.array([z[0] for z in zones], dtype=np.float64)
    s = np.array([z[1] for z in zones], dtype=np.float64)
    nz = float(len(zones))

    # per-(level, size) counts collapse onto the zone list directly: every
    # zone contributes weight 1, so sums over the matrix are sums over zones
    p = np.ones_like(g) / nz
    gray_sums = {}
    size_sums = {}
    for gi, si in zones:
        gray_sums[gi] = gray_sums.get(gi, 0) + 1
        size_sums[si] = size_sums.get(si, 0) + 1
    gray_counts = np.array(list(gray_sums.values()), dtype=np.float64)
    size_counts = np.array(list(size_sums.values()), dtype=np.float64)

    joint = {}
    for gi, si in zones:
        joint[(gi, si)] = joint.get((gi, si), 0) + 1
    joint_probs = np.array(list(joint.values()), dtype=np.float64) / nz

    mean_g = float((p * g).sum())
    mean_s = float((p * s).sum())
    return np.array(
        [
            float((p / s**2).sum()),
            float((p * s**2).sum()),
            float((gray_counts**2).sum() / nz),
            float((gray_counts**2).sum() / nz**2),
            float((size_counts**2).sum() / nz),
            float((size_counts**2).sum() / nz**2),
            nz / n_pixels,
            float((p * (g - mean_g) ** 2).sum()),
            float((p * (s - mean_s) ** 2).sum()),
            _entropy2(joint_probs),
            float((p / g**2).sum()),
            float((p * g**2).sum()),
            float((p / (g**2 * s**2)).sum()),
            float((p * g**2 / s**2).sum()),
            float((p * s**2 / g**2).sum()),
            float((p * g**2 * s**2).sum()),
        ]
    )
