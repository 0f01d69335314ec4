"""In-memory training/eval arrays assembled from a dataset manifest."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gcdm.config import TrainConfig
from gcdm.data.imageio import load_image, load_mask
from gcdm.data.manifest import Manifest
from gcdm.maskproc import TriMask, soften
from gcdm.radiomics import extract


@dataclass
class SplitData:
    ids: list[str]
    images: np.ndarray  # (N, 1, H, W) in [0, 1]
    signals: np.ndarray  # (N, 1, H, W) in [-1, 1]
    cond: np.ndarray  # (N, 3, H, W) softened mask channels
    mass: np.ndarray  # (N, 1, H, W)
    masks: list[TriMask]
    features_raw: np.ndarray  # (N, 67)

    def __len__(self) -> int:
        return len(self.ids)


def load_split(manifest: Manifest, split: str, config: TrainConfig) -> SplitData:
    entries = manifest.split(split)
    if not entries:
        raise ValueError(f"manifest has no entries in split {split!r}")
    ids, images, cond, mass, masks, feats = [], [], [], [], [], []
    for entry in entries:
        image_path, mask_path = manifest.resolve(entry)
        image = load_image(image_path)
        mask = load_mask(mask_path)
        if image.shape != (config.image_size, config.image_size):
            raise ValueError(
                f"{entry.sample_id}: image is {image.shape}, config wants {config.image_size}"
            )
        soft = soften(mask, config.soft_sigma, config.soft_scope)
        ids.append(entry.sample_id)
        images.append(image[None])
        cond.append(soft.channels)
        mass.append(mask.mass[None])
        masks.append(mask)
        feats.append(extract(image, mask.mass))
    images_arr = np.stack(images).astype(np.float32)
    return SplitData(
        ids=ids,
        images=images_arr,
        signals=(2.0 * images_arr - 1.0).astype(np.float32),
        cond=np.stack(cond).astype(np.float32),
        mass=np.stack(mass).astype(np.float32),
        masks=masks,
        features_raw=np.stack(feats),
    )
