"""Checkpoint save/load for a ready-to-sample model bundle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gcdm.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from gcdm.config import TrainConfig, config_from_text, config_to_text
from gcdm.diffusion.codec import get_codec
from gcdm.diffusion.schedule import NoiseSchedule, make_schedule
from gcdm.model import ConditionalModel, build_model
from gcdm.radiomics import FeatureNormalizer, FeatureTemplate

_FIT_PREFIX = "fit/"


@dataclass
class ModelBundle:
    config: TrainConfig
    model: ConditionalModel
    schedule: NoiseSchedule
    codec: object
    normalizer: FeatureNormalizer | None = None
    template: FeatureTemplate | None = None

    @property
    def latent_channels(self) -> int:
        return self.model.latent_channels


def new_bundle(config: TrainConfig) -> ModelBundle:
    codec = get_codec(config.codec)
    model = build_model(config, latent_channels=1)
    schedule = make_schedule(config.timesteps, config.beta_start, config.beta_end)
    return ModelBundle(config=config, model=model, schedule=schedule, codec=codec)


def save_bundle(bundle: ModelBundle, path) -> None:
    tensors = {name: p.data for name, p in bundle.model.parameters().items()}
    if bundle.normalizer is not None:
        tensors[_FIT_PREFIX + "normalizer_min"] = bundle.normalizer.vmin
        tensors[_FIT_PREFIX + "normalizer_max"] = bundle.normalizer.vmax
    if bundle.template is not None:
        tensors[_FIT_PREFIX + "template_mean"] = bundle.template.mean
        tensors[_FIT_PREFIX + "template_min"] = bundle.template.vmin
        tensors[_FIT_PREFIX + "template_max"] = bundle.template.vmax
    save_checkpoint(path, config_to_text(bundle.config), tensors)


def load_bundle(path) -> ModelBundle:
    config_text, tensors = load_checkpoint(path)
    config = config_from_text(config_text)
    bundle = new_bundle(config)
    params = {k: v for k, v in tensors.items() if not k.startswith(_FIT_PREFIX)}
    try:
        bundle.model.load_parameters(params)
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"{path}: checkpoint incompatible with its config: {exc}") from exc
    if _FIT_PREFIX + "normalizer_min" in tensors:
        bundle.normalizer = FeatureNormalizer(
            vmin=tensors[_FIT_PREFIX + "normalizer_min"],
            vmax=tensors[_FIT_PREFIX + "normalizer_max"],
        )
    if _FIT_PREFIX + "template_mean" in tensors:
        bundle.template = FeatureTemplate(
            mean=tensors[_FIT_PREFIX + "template_mean"],
            vmin=tensors[_FIT_PREFIX + "template_min"],
            vmax=tensors[_FIT_PREFIX + "template_max"],
        )
    return bundle


def normalize_features(bundle: ModelBundle, raw: np.ndarray) -> np.ndarray:
    if bundle.normalizer is None:
        raise CheckpointError("checkpoint carries no fitted feature normalizer")
    return bundle.normalizer.apply(raw)
