"""Frechet distance between feature-space Gaussians.

The feature extractor is a fixed random-weight convolutional encoder, fully
determined by its seed. It stands in for a pretrained embedding network:
the Frechet math downstream is exact, but absolute values are not
comparable with embeddings from other feature extractors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gcdm import rng as rng_mod
from gcdm.engine import conv2d_raw

EMBED_DIM = 64
EIGEN_CLAMP = 1e-8


@dataclass(frozen=True)
class FrechetStats:
    mean: np.ndarray
    cov: np.ndarray
    count: int

    @classmethod
    def from_features(cls, features: np.ndarray) -> "FrechetStats":
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < 2:
            raise ValueError("need at least 2 feature rows")
        return cls(
            mean=features.mean(axis=0),
            cov=np.cov(features, rowvar=False),
            count=features.shape[0],
        )


def feature_embed(images: np.ndarray, extractor_seed: int = 0, dim: int = EMBED_DIM) -> np.ndarray:
    """Deterministic (n, dim) embedding of a stack of (H, W) images."""
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 3 or images.shape[0] == 0:
        raise ValueError(f"expected a non-empty (n, H, W) stack, got {images.shape}")
    widths = (16, 32, dim)
    x = images[:, None]
    in_ch = 1
    for layer, out_ch in enumerate(widths):
        g = rng_mod.stream(extractor_seed, "embed-layer", layer)
        scale = np.sqrt(2.0 / (in_ch * 9))
        w = g.normal(0.0, scale, size=(out_ch, in_ch, 3, 3)).astype(np.float32)
        x = np.maximum(conv2d_raw(x, w, stride=2, pad=1), 0.0)
        in_ch = out_ch
    return x.mean(axis=(2, 3)).astype(np.float64)


def _sym_sqrt(matrix: np.ndarray) -> np.ndarray:
    eigvals, eigvecs = np.linalg.eigh((matrix + matrix.T) / 2.0)
    eigvals = np.clip(eigvals, 0.0, None)
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def frechet_distance(stats_r: FrechetStats, stats_g: FrechetStats) -> float:
    """||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2)), never negative.

    The cross term uses the symmetric form sqrt(S_r^(1/2) S_g S_r^(1/2)),
    whose eigenvalues match those of S_r S_g; negatives below the clamp
    tolerance are zeroed.
    """
    if stats_r.mean.shape != stats_g.mean.shape:
        raise ValueError("feature dimensions differ")
    root_r = _sym_sqrt(stats_r.cov)
    inner = root_r @ stats_g.cov @ root_r
    eigvals = np.linalg.eigvalsh((inner + inner.T) / 2.0)
    eigvals = np.where(eigvals < -EIGEN_CLAMP, 0.0, np.clip(eigvals, 0.0, None))
    mean_term = float(((stats_r.mean - stats_g.mean) ** 2).sum())
    trace_term = float(
        np.trace(stats_r.cov) + np.trace(stats_g.cov) - 2.0 * np.sqrt(eigvals).sum()
    )
    return max(mean_term + trace_term, 0.0)
