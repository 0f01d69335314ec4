"""Procedural breast-like phantoms with known masks and lesion geometry.

Each phantom is a half-elliptical bright region abutting the left or right
image edge (the chest-wall analogue) over a dark background, with 0..3
radially-perturbed bright elliptical lesions strictly inside the tissue.
Generation is fully determined by (spec, seed).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from gcdm import rng
from gcdm.labeling import label_components
from gcdm.maskproc import TriMask, build_mask, gaussian_kernel, blur_channel


class InfeasibleSpec(ValueError):
    """Raised when no lesion placement satisfies the spec constraints."""


@dataclass(frozen=True)
class PhantomSpec:
    image_size: int = 64
    lesion_count: tuple[int, int] = (0, 3)
    # semi-axis ranges as fractions of the image size
    breast_depth: tuple[float, float] = (0.55, 0.78)
    breast_height: tuple[float, float] = (0.36, 0.47)
    lesion_radius: tuple[float, float] = (3.5, 6.5)  # pixels
    texture_sigma: float = 2.0
    background_band: tuple[float, float] = (0.02, 0.08)
    breast_band: tuple[float, float] = (0.38, 0.55)
    lesion_band: tuple[float, float] = (0.80, 0.95)

    def __post_init__(self):
        for name in ("lesion_count", "breast_depth", "breast_height", "lesion_radius",
                     "background_band", "breast_band", "lesion_band"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} range is empty: {(lo, hi)}")
        if self.lesion_count[0] < 0:
            raise ValueError("lesion_count must be non-negative")
        min_axis = min(self.breast_depth[0], self.breast_height[0]) * self.image_size
        if self.lesion_radius[1] >= min_axis:
            raise ValueError("lesion radius must be smaller than the smallest breast axis")


@dataclass(frozen=True)
class PhantomSample:
    image: np.ndarray  # (H, W) float32 in [0, 1]
    mask: TriMask
    lesions: list[tuple[tuple[float, float], np.ndarray]] = field(default_factory=list)


_POLY_POINTS = 64


def _lesion_raster(size, center, radius, stretch, angle, harmonics, phases):
    """Rasterize a radially-perturbed ellipse and return (mask, boundary polygon)."""
    cy, cx = center
    cos_a, sin_a = math.cos(angle), math.sin(angle)
    yy, xx = np.mgrid[0:size, 0:size]
    dx, dy = xx - cx, yy - cy
    # rotate into the canonical frame and undo the elliptical stretch
    ux = (cos_a * dx + sin_a * dy) / stretch
    uy = (-sin_a * dx + cos_a * dy) * stretch
    rho = np.hypot(ux, uy)
    theta = np.arctan2(uy, ux)
    boundary = radius * _radial_profile(theta, harmonics, phases)
    mask = rho <= boundary

    theta_poly = np.linspace(0.0, 2.0 * math.pi, _POLY_POINTS, endpoint=False)
    r_poly = radius * _radial_profile(theta_poly, harmonics, phases)
    px = r_poly * np.cos(theta_poly) * stretch
    py = r_poly * np.sin(theta_poly) / stretch
    polygon = np.stack(
        [cy + (sin_a * px + cos_a * py), cx + (cos_a * px - sin_a * py)], axis=1
    )
    return mask, polygon


def _radial_profile(theta, harmonics, phases):
    r = np.ones_like(theta)
    for order, (amp, phase) in enumerate(zip(harmonics, phases), start=2):
        r = r + amp * np.cos(order * theta + phase)
    return r


def _breast_raster(size, side, cy, depth, height):
    yy, xx = np.mgrid[0:size, 0:size]
    x0 = 0.0 if side == "left" else float(size - 1)
    return ((xx - x0) / depth) ** 2 + ((yy - cy) / height) ** 2 <= 1.0


def generate_phantom(spec: PhantomSpec, seed: int) -> PhantomSample:
    g = rng.stream(seed, "phantom")
    size = spec.image_size

    side = "left" if g.random() < 0.5 else "right"
    cy = size * g.uniform(0.42, 0.58)
    depth = size * g.uniform(*spec.breast_depth)
    height = size * g.uniform(*spec.breast_height)
    breast = _breast_raster(size, side, cy, depth, height)
    x0 = 0.0 if side == "left" else float(size - 1)

    n_lesions = int(g.integers(spec.lesion_count[0], spec.lesion_count[1] + 1))
    lesions: list[tuple[tuple[float, float], np.ndarray]] = []
    rasters: list[np.ndarray] = []
    occupied = np.zeros((size, size), dtype=bool)

    for _ in range(n_lesions):
        placed = False
        for _attempt in range(400):
            radius = g.uniform(*spec.lesion_radius)
            stretch = g.uniform(0.75, 1.0)
            angle = g.uniform(0.0, math.pi)
            harmonics = g.uniform(0.0, 0.12, size=3)
            phases = g.uniform(0.0, 2.0 * math.pi, size=3)
            margin = radius * (1.0 + harmonics.sum()) / min(stretch, 1.0 / stretch) + 2.0
            if depth <= margin or height <= margin:
                continue
            # sample the center inside the margin-shrunk breast ellipse
            lcx = x0 + (1.0 if side == "left" else -1.0) * (depth - margin) * g.random()
            span = (height - margin) * math.sqrt(
                max(0.0, 1.0 - ((lcx - x0) / (depth - margin)) ** 2)
            )
            lcy = cy + g.uniform(-span, span)
            raster, polygon = _lesion_raster(
                size, (lcy, lcx), radius, stretch, angle, harmonics, phases
            )
            if not raster.any() or (raster & ~breast).any():
                continue
            # keep lesions separated so mass components equal the lesion count
            grown = raster.copy()
            grown[1:] |= raster[:-1]
            grown[:-1] |= raster[1:]
            grown[:, 1:] |= raster[:, :-1]
            grown[:, :-1] |= raster[:, 1:]
            if (grown & occupied).any():
                continue
            occupied |= raster
            rasters.append(raster)
            lesions.append(((lcy, lcx), polygon))
            placed = True
            break
        if not placed:
            raise InfeasibleSpec(
                f"could not place lesion {len(lesions) + 1} of {n_lesions} (seed {seed})"
            )

    mask = build_mask(breast, rasters)
    _, n_components = label_components(mask.mass)
    if n_components != n_lesions:
        raise InfeasibleSpec(f"mass components {n_components} != lesion count {n_lesions}")

    image = _render(spec, g, breast, rasters)
    return PhantomSample(image=image, mask=mask, lesions=lesions)


def _render(spec, g, breast, rasters):
    size = spec.image_size
    kernel = gaussian_kernel(spec.texture_sigma)
    texture = blur_channel(g.normal(size=(size, size)), kernel)
    texture /= max(texture.std(), 1e-9)

    image = np.full((size, size), g.uniform(*spec.background_band))
    image += 0.012 * texture
    breast_level = g.uniform(*spec.breast_band)
    image[breast] = breast_level + 0.045 * texture[breast]
    for raster in rasters:
        lesion_level = g.uniform(*spec.lesion_band)
        image[raster] = lesion_level + 0.025 * texture[raster]
    return np.clip(image, 0.0, 1.0).astype(np.float32)


# -- dataset emission ---------------------------------------------------------------


def split_of(sample_id: str, all_ids: list[str], fractions=(0.7, 0.1, 0.2)) -> str:
    """Deterministic hash-rank split: order ids by sha256, cut at the quotas."""
    ranked = sorted(all_ids, key=_split_key)
    n = len(ranked)
    n_train = round(fractions[0] * n)
    n_val = round(fractions[1] * n)
    position = ranked.index(sample_id)
    if position < n_train:
        return "train"
    if position < n_train + n_val:
        return "val"
    return "test"


def _split_key(sample_id: str) -> str:
    return hashlib.sha256(sample_id.encode("utf-8")).hexdigest()


def generate_dataset(spec: PhantomSpec, n: int, seed: int, out_dir, fractions=(0.7, 0.1, 0.2)):
    """Write n phantoms plus a manifest under out_dir; returns the Manifest.

    Phantoms are generated from per-id seeds, so GCDM_THREADS > 1 fans the
    work out without changing any pixel; the manifest write stays single.
    """
    import os
    from concurrent.futures import ThreadPoolExecutor
    from pathlib import Path

    from gcdm.data.imageio import save_image, save_mask
    from gcdm.data.manifest import Manifest, ManifestEntry, write_manifest

    if n <= 0:
        raise ValueError("n must be positive")
    out_dir = Path(out_dir)
    ids = [f"ph{i:06d}" for i in range(n)]
    ranked = {sid: split for sid, split in zip(ids, (split_of(s, ids, fractions) for s in ids))}

    def build(i: int) -> PhantomSample:
        return generate_phantom(spec, rng.spawn_seed(seed, "sample", i))

    workers = max(1, int(os.environ.get("GCDM_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(build, range(n)))
    else:
        samples = [build(i) for i in range(n)]

    entries = []
    for sample_id, sample in zip(ids, samples):
        image_rel = f"images/{sample_id}.png"
        mask_rel = f"masks/{sample_id}.png"
        save_image(out_dir / image_rel, sample.image)
        save_mask(out_dir / mask_rel, sample.mask)
        entries.append(ManifestEntry(sample_id, image_rel, mask_rel, ranked[sample_id]))

    manifest = Manifest(entries)
    write_manifest(manifest, out_dir / "manifest.txt")
    return manifest
