"""Guided DDIM sampling from a trained bundle."""

from __future__ import annotations

import numpy as np

from gcdm import rng as rng_mod
from gcdm.diffusion.bundle import ModelBundle
from gcdm.diffusion.schedule import cfg_combine, ddim_step, ddim_timesteps
from gcdm.engine import Tensor
from gcdm.maskproc import TriMask, soften
from gcdm.radiomics import N_FEATURES


def _predict(bundle, z, cond, tokens, t_value):
    batch = np.concatenate([z, cond], axis=1).astype(np.float32)
    t = np.full(z.shape[0], t_value, dtype=np.int64)
    return bundle.model.denoise(Tensor(batch), t, tokens).data.astype(np.float64)


def sample_batch(
    bundle: ModelBundle,
    masks: list[TriMask],
    features_raw: np.ndarray | None,
    seeds: list[int],
    steps: int | None = None,
    guidance_scale: float | None = None,
    conditioned: bool = True,
    clip_denoised: bool = True,
) -> np.ndarray:
    """Generate one image per (mask, features, seed) triple; returns (N, H, W).

    Each step predicts noise twice (null and real conditions) and blends
    with the guidance scale. Scale 0 short-circuits to the single
    null-condition pass, which is exactly the unconditional sampling path.
    """
    config = bundle.config
    steps = config.sample_steps if steps is None else steps
    scale = config.guidance_scale if guidance_scale is None else guidance_scale
    n = len(masks)
    if len(seeds) != n:
        raise ValueError("need one seed per mask")

    latent_size = config.image_size // bundle.codec.factor
    cond = np.stack(
        [soften(m, config.soft_sigma, config.soft_scope).channels for m in masks]
    ).astype(np.float32)
    cond = bundle.codec.encode(cond)
    null_cond = np.zeros_like(cond)

    null_tokens = bundle.model.null_tokens(n)
    if conditioned and config.lcb:
        if features_raw is None:
            features_raw = np.zeros((n, N_FEATURES))
        feats = np.stack([bundle.normalizer.apply(v) for v in np.asarray(features_raw)])
        mass = np.stack([m.mass[None] for m in masks]).astype(np.float32)
        real_tokens = Tensor(
            bundle.model.conditioning_tokens(Tensor(mass), Tensor(feats)).data
        )
    else:
        real_tokens = null_tokens

    z = np.stack(
        [
            rng_mod.stream(seed, "sample-noise").standard_normal(
                (bundle.latent_channels, latent_size, latent_size)
            )
            for seed in seeds
        ]
    )

    unconditional = (not conditioned) or scale == 0.0
    for t, t_prev in ddim_timesteps(config.timesteps, steps):
        if unconditional:
            eps = _predict(bundle, z, null_cond, null_tokens, t)
        else:
            eps_cond = _predict(bundle, z, cond, real_tokens, t)
            eps_uncond = _predict(bundle, z, null_cond, null_tokens, t)
            eps = cfg_combine(eps_uncond, eps_cond, scale)
        if clip_denoised:
            eps = _clip_noise_to_signal_range(bundle, z, t, eps)
        z = ddim_step(z, t, t_prev, eps, bundle.schedule)

    images = (bundle.codec.decode(z) + 1.0) / 2.0
    return np.clip(images[:, 0], 0.0, 1.0).astype(np.float32)


def _clip_noise_to_signal_range(bundle, z, t, eps):
    """Re-derive eps from the [-1, 1]-clamped clean prediction (guidance guard)."""
    abar = bundle.schedule.abar(t)
    root_ab = np.sqrt(abar)
    root_om = np.sqrt(1.0 - abar)
    z0_hat = np.clip((z - root_om * eps) / root_ab, -1.0, 1.0)
    return (z - root_ab * z0_hat) / root_om


def sample(
    bundle: ModelBundle,
    mask: TriMask,
    features_raw: np.ndarray | None,
    seed: int,
    steps: int | None = None,
    guidance_scale: float | None = None,
    conditioned: bool = True,
    clip_denoised: bool = True,
) -> np.ndarray:
    features = None if features_raw is None else np.asarray(features_raw)[None]
    return sample_batch(
        bundle,
        [mask],
        features,
        [seed],
        steps=steps,
        guidance_scale=guidance_scale,
        conditioned=conditioned,
        clip_denoised=clip_denoised,
    )[0]
