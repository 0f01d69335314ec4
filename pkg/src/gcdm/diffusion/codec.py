"""Latent codecs: pluggable encode/decode around the denoiser.

The identity codec keeps diffusion in pixel space; avgpool2x runs it at
half resolution to exercise a non-trivial latent. Both operate per channel
on (N, C, H, W) arrays and carry no parameters.
"""

from __future__ import annotations

import numpy as np


class IdentityCodec:
    name = "identity"
    factor = 1

    def encode(self, x: np.ndarray) -> np.ndarray:
        return x

    def decode(self, z: np.ndarray) -> np.ndarray:
        return z


class AvgPool2xCodec:
    name = "avgpool2x"
    factor = 2

    def encode(self, x: np.ndarray) -> np.ndarray:
        n, c, h, w = x.shape
        if h % 2 or w % 2:
            raise ValueError(f"avgpool2x needs even spatial dims, got {x.shape}")
        return x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))

    def decode(self, z: np.ndarray) -> np.ndarray:
        return np.repeat(np.repeat(z, 2, axis=2), 2, axis=3)


_CODECS = {cls.name: cls for cls in (IdentityCodec, AvgPool2xCodec)}


def get_codec(name: str):
    if name not in _CODECS:
        raise ValueError(f"unknown codec {name!r}; choices: {sorted(_CODECS)}")
    return _CODECS[name]()
