"""Phantom dataset generation, manifests, and real-image preprocessing."""

from gcdm.data.imageio import load_image, load_mask, save_image, save_mask
from gcdm.data.manifest import Manifest, ManifestEntry, read_manifest, write_manifest
from gcdm.data.phantom import (
    InfeasibleSpec,
    PhantomSample,
    PhantomSpec,
    generate_dataset,
    generate_phantom,
)
from gcdm.data.preprocess import preprocess_real, resize_bilinear, truncation_normalize

__all__ = [
    "InfeasibleSpec",
    "Manifest",
    "ManifestEntry",
    "PhantomSample",
    "PhantomSpec",
    "generate_dataset",
    "generate_phantom",
    "load_image",
    "load_mask",
    "preprocess_real",
    "read_manifest",
    "resize_bilinear",
    "save_image",
    "save_mask",
    "truncation_normalize",
    "write_manifest",
]
