"""The 67-value lesion feature vector: extraction, normalization, sampling.

Segment layout: [0..9) shape, [9..27) first-order, [27..43) size-zone,
[43..67) co-occurrence. An empty mass channel extracts to the zero vector,
and the zero vector passes through normalization unchanged so the no-mass
convention survives the whole pipeline.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gcdm import rng
from gcdm.radiomics.firstorder import FIRSTORDER_NAMES, firstorder_features
from gcdm.radiomics.quantize import N_LEVELS, quantize
from gcdm.radiomics.shape2d import SHAPE_NAMES, shape_features
from gcdm.radiomics.texture import GLCM_NAMES, GLSZM_NAMES, glcm_features, glszm_features

FEATURE_NAMES: tuple[str, ...] = (
    tuple(f"shape/{n}" for n in SHAPE_NAMES)
    + tuple(f"firstorder/{n}" for n in FIRSTORDER_NAMES)
    + tuple(f"glszm/{n}" for n in GLSZM_NAMES)
    + tuple(f"glcm/{n}" for n in GLCM_NAMES)
)

N_FEATURES = len(FEATURE_NAMES)
SEGMENTS = {"shape": (0, 9), "firstorder": (9, 27), "glszm": (27, 43), "glcm": (43, 67)}


def extract(image: np.ndarray, mass_channel: np.ndarray, n_levels: int = N_LEVELS) -> np.ndarray:
    """Concatenated feature vector over the mass ROI; zeros if no mass."""
    image = np.asarray(image, dtype=np.float64)
    roi = np.asarray(mass_channel) > 0
    if image.shape != roi.shape:
        raise ValueError(f"image {image.shape} and mass channel {roi.shape} differ")
    if not roi.any():
        return np.zeros(N_FEATURES)
    levels = quantize(image, roi, n_levels)
    return np.concatenate(
        [
            shape_features(roi),
            firstorder_features(image, roi),
            glszm_features(levels, roi),
            glcm_features(levels, roi, n_levels),
        ]
    )


@dataclass
class FeatureNormalizer:
    """Per-dimension min-max fitted on training vectors."""

    vmin: np.ndarray
    vmax: np.ndarray

    @classmethod
    def fit(cls, vectors) -> "FeatureNormalizer":
        stacked = _stack_mass_bearing(vectors)
        return cls(vmin=stacked.min(axis=0), vmax=stacked.max(axis=0))

    def apply(self, vector: np.ndarray) -> np.ndarray:
        vector = np.asarray(vector, dtype=np.float64)
        if not vector.any():
            return np.zeros_like(vector)
        span = self.vmax - self.vmin
        out = np.zeros_like(vector)
        live = span > 0
        out[live] = (vector[live] - self.vmin[live]) / span[live]
        return out


@dataclass
class FeatureTemplate:
    """Per-dimension mean and bounds over mass-bearing training vectors."""

    mean: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray

    @classmethod
    def fit(cls, vectors) -> "FeatureTemplate":
        stacked = _stack_mass_bearing(vectors)
        return cls(mean=stacked.mean(axis=0), vmin=stacked.min(axis=0), vmax=stacked.max(axis=0))


def _stack_mass_bearing(vectors) -> np.ndarray:
    rows = [np.asarray(v, dtype=np.float64) for v in vectors if np.asarray(v).any()]
    if not rows:
        raise ValueError("need at least one mass-bearing feature vector")
    stacked = np.stack(rows)
    if stacked.shape[1] != N_FEATURES:
        raise ValueError(f"expected {N_FEATURES}-d vectors, got {stacked.shape[1]}")
    return stacked


def sample_manual(template: FeatureTemplate, seed: int) -> np.ndarray:
    """Draw a plausible feature vector around the template.

    Each dimension gets an independent uniform perturbation spanning the
    training range, so the result is uniform on [min_i, max_i].
    """
    g = rng.stream(seed, "manual-feature")
    delta = g.uniform(template.vmin - template.mean, template.vmax - template.mean)
    return template.mean + delta


# -- versioned text files -------------------------------------------------------------


def save_normalizer(normalizer: FeatureNormalizer, path) -> None:
    _save_table(path, "gcdm-normalizer", {"min": normalizer.vmin, "max": normalizer.vmax})


def load_normalizer(path) -> FeatureNormalizer:
    cols = _load_table(path, "gcdm-normalizer", ("min", "max"))
    return FeatureNormalizer(vmin=cols["min"], vmax=cols["max"])


def save_template(template: FeatureTemplate, path) -> None:
    _save_table(
        path, "gcdm-template", {"mean": template.mean, "min": template.vmin, "max": template.vmax}
    )


def load_template(path) -> FeatureTemplate:
    cols = _load_table(path, "gcdm-template", ("mean", "min", "max"))
    return FeatureTemplate(mean=cols["mean"], vmin=cols["min"], vmax=cols["max"])


def _save_table(path, kind: str, columns: dict[str, np.ndarray]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [f"{kind} 1", "feature\t" + "\t".join(columns)]
    lines = header + [
        name + "\t" + "\t".join(repr(float(col[i])) for col in columns.values())
        for i, name in enumerate(FEATURE_NAMES)
    ]
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _load_table(path, kind: str, names: tuple[str, ...]) -> dict[str, np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split()
    if len(header) != 2 or header[0] != kind or header[1] != "1":
        raise ValueError(f"{path}: expected a '{kind} 1' file")
    columns = lines[1].split("\t")[1:]
    if tuple(columns) != names:
        raise ValueError(f"{path}: expected columns {names}, got {tuple(columns)}")
    out = {n: np.zeros(N_FEATURES) for n in names}
    for i, line in enumerate(lines[2:]):
        parts = line.split("\t")
        if parts[0] != FEATURE_NAMES[i]:
            raise ValueError(f"{path}: feature {i} is {parts[0]!r}, expected {FEATURE_NAMES[i]!r}")
        for name, value in zip(names, parts[1:]):
            out[name][i] = float(value)
    return out
