"""Diffusion core: schedule, codecs, objective, training, sampling."""

from gcdm.diffusion.bundle import ModelBundle, load_bundle, new_bundle, save_bundle
from gcdm.diffusion.codec import AvgPool2xCodec, IdentityCodec, get_codec
from gcdm.diffusion.dataset import SplitData, load_split
from gcdm.diffusion.sampler import sample, sample_batch
from gcdm.diffusion.schedule import (
    NoiseSchedule,
    cfg_combine,
    ddim_step,
    ddim_timesteps,
    ddpm_step,
    forward_noise,
    make_schedule,
)
from gcdm.diffusion.train import fit_feature_stats, smoothed, train, training_loss

__all__ = [
    "AvgPool2xCodec",
    "IdentityCodec",
    "ModelBundle",
    "NoiseSchedule",
    "SplitData",
    "cfg_combine",
    "ddim_step",
    "ddim_timesteps",
    "ddpm_step",
    "fit_feature_stats",
    "forward_noise",
    "get_codec",
    "load_bundle",
    "load_split",
    "make_schedule",
    "new_bundle",
    "sample",
    "sample_batch",
    "save_bundle",
    "smoothed",
    "train",
    "training_loss",
]
