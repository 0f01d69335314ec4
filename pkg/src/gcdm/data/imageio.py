"""Lossless PNG storage: 16-bit grayscale images, 8-bit 3-channel masks.

All writes go through a temp file and an atomic rename.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image

from gcdm.maskproc import TriMask


def _atomic_save(img: Image.Image, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    img.save(tmp, format="PNG")
    os.replace(tmp, path)


def save_image(path, image: np.ndarray) -> None:
    """Store a [0, 1] intensity image as 16-bit grayscale PNG."""
    image = np.asarray(image, dtype=np.float64)
    if image.min() < 0 or image.max() > 1:
        raise ValueError("image intensities must lie in [0, 1]")
    quantized = np.round(image * 65535.0).astype("<u2")
    _atomic_save(Image.fromarray(quantized), path)


def load_image(path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img, dtype=np.float64)
    return (arr / 65535.0).astype(np.float32)


def save_mask(path, mask: TriMask) -> None:
    """Store a TriMask as an 8-bit RGB PNG (R=background, G=breast, B=mass)."""
    rgb = (mask.channels.transpose(1, 2, 0) * 255.0).astype(np.uint8)
    _atomic_save(Image.fromarray(rgb, mode="RGB"), path)


def load_mask(path) -> TriMask:
    with Image.open(path) as img:
        rgb = np.asarray(img.convert("RGB"))
    return TriMask((rgb.transpose(2, 0, 1) > 127).astype(np.float32))
