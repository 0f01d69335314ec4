"""Trainable networks: conditional denoiser plus the lesion branch."""

from __future__ import annotations

import numpy as np

from gcdm import rng as rng_mod
from gcdm.config import TrainConfig
from gcdm.engine import Tensor
from gcdm.engine.nn import Module
from gcdm.model.denoiser import Denoiser, ResBlock
from gcdm.model.fusion import (
    RADIOMIC_DIM,
    GatedFusion,
    GeometryEncoder,
    LesionBranch,
    RadTokenizer,
    cross_concat,
)

__all__ = [
    "RADIOMIC_DIM",
    "ConditionalModel",
    "Denoiser",
    "GatedFusion",
    "GeometryEncoder",
    "LesionBranch",
    "RadTokenizer",
    "ResBlock",
    "build_model",
    "cross_concat",
]


class ConditionalModel(Module):
    """Denoiser plus (optionally) the lesion conditioning branch."""

    def __init__(self, config: TrainConfig, latent_channels: int, init_seed: int):
        super().__init__()
        g = rng_mod.stream(init_seed, "model-init")
        self.config = config
        self.latent_channels = latent_channels
        self.denoiser = Denoiser(
            in_channels=latent_channels + 3,
            out_channels=latent_channels,
            widths=tuple(config.widths),
            time_dim=config.time_dim,
            token_dim=config.d_cond,
            attn_width=config.d_cond,
            groups=config.groups,
            rng=g,
        )
        if config.lcb:
            self.branch = LesionBranch(
                image_size=config.image_size,
                geo_tokens=config.geo_tokens,
                rad_tokens=config.rad_tokens,
                top_k=config.top_k,
                d_geo=config.d_geo,
                d_cond=config.d_cond,
                gate_hidden=config.gate_hidden,
                use_radiomics=config.use_radiomics,
                gated=config.gated,
                rng=g,
            )
            self.token_count = self.branch.token_count
        else:
            self.branch = None
            self.token_count = config.top_k

    def null_tokens(self, batch: int) -> Tensor:
        return Tensor(np.zeros((batch, self.token_count, self.config.d_cond)))

    def conditioning_tokens(self, mass: Tensor, features: Tensor) -> Tensor:
        """Tokens from the lesion branch; all-zero when the branch is off."""
        if self.branch is None:
            return self.null_tokens(mass.shape[0])
        return self.branch(mass, features)

    def denoise(self, z_concat: Tensor, t: np.ndarray, tokens: Tensor) -> Tensor:
        t = np.atleast_1d(np.asarray(t, dtype=np.int64))
        if (t < 1).any() or (t > self.config.timesteps).any():
            raise ValueError(f"timestep out of range 1..{self.config.timesteps}")
        expected = self.latent_channels + 3
        if z_concat.shape[1] != expected:
            raise ValueError(
                f"denoiser expects {expected} input channels, got {z_concat.shape[1]}"
            )
        return self.denoiser(z_concat, t, tokens)


def build_model(config: TrainConfig, latent_channels: int) -> ConditionalModel:
    return ConditionalModel(config, latent_channels, init_seed=config.seed)
