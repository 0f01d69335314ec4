"""Denoising objective and the training loop."""

from __future__ import annotations

import os
import time
from pathlib import Path

import numpy as np

from gcdm import rng as rng_mod
from gcdm.config import TrainConfig, save_config
from gcdm.data.manifest import read_manifest
from gcdm.diffusion.bundle import ModelBundle, new_bundle, save_bundle
from gcdm.diffusion.dataset import SplitData, load_split
from gcdm.diffusion.schedule import forward_noise
from gcdm.engine import Tensor, gradients
from gcdm.engine.optim import AdamW
from gcdm.radiomics import FeatureNormalizer, FeatureTemplate


def training_loss(
    batch: dict[str, np.ndarray],
    bundle: ModelBundle,
    config: TrainConfig,
    step_rng: np.random.Generator,
) -> Tensor:
    """Noise-prediction MSE with tied classifier-free condition dropout.

    Per sample: a uniform timestep and a fresh Gaussian corrupt the encoded
    image; the soft mask rides along as extra channels and the lesion branch
    supplies cross-attention tokens. With probability drop_prob BOTH
    conditions are replaced by their nulls (zero channels, zero tokens).
    """
    signals = batch["signals"]
    n = signals.shape[0]
    z0 = bundle.codec.encode(signals)
    t = step_rng.integers(1, config.timesteps + 1, size=n)
    eps = step_rng.standard_normal(z0.shape).astype(z0.dtype)
    z_t = forward_noise(z0, t, eps, bundle.schedule)

    cond = bundle.codec.encode(batch["cond"])
    keep = (step_rng.random(n) >= config.drop_prob).astype(z0.dtype)
    cond = cond * keep[:, None, None, None]

    if config.lcb:
        tokens = bundle.model.conditioning_tokens(
            Tensor(batch["mass"]), Tensor(batch["features_norm"])
        )
        tokens = tokens * Tensor(keep[:, None, None])
    else:
        tokens = bundle.model.null_tokens(n)

    eps_pred = bundle.model.denoise(Tensor(np.concatenate([z_t, cond], axis=1)), t, tokens)
    residual = eps_pred - Tensor(eps)
    return (residual * residual).mean()


def fit_feature_stats(train_data: SplitData) -> tuple[FeatureNormalizer, FeatureTemplate | None]:
    """Min-max normalizer and manual-sampling template from the training split.

    Both are fitted on mass-bearing samples only; the all-zero no-mass
    vectors pass through normalization unchanged by convention.
    """
    bearing = [v for v in train_data.features_raw if v.any()]
    if not bearing:
        return FeatureNormalizer(vmin=np.zeros(67), vmax=np.zeros(67)), None
    return FeatureNormalizer.fit(bearing), FeatureTemplate.fit(bearing)


def smoothed(losses: list[float], fraction: float = 0.1) -> tuple[float, float]:
    """Mean loss over the first and last `fraction` of recorded steps."""
    window = max(1, int(len(losses) * fraction))
    return float(np.mean(losses[:window])), float(np.mean(losses[-window:]))


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float) -> float:
    """Scale all gradients down so their global L2 norm is at most max_norm."""
    total = float(np.sqrt(sum(float((g * g).sum()) for g in grads.values())))
    if total > max_norm:
        factor = max_norm / total
        for g in grads.values():
            g *= factor
    return total


def train(config: TrainConfig, log=print) -> Path:
    """Run the configured training job; returns the final checkpoint path."""
    config.validate()
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = read_manifest(Path(config.data_dir) / "manifest.txt")
    train_data = load_split(manifest, "train", config)
    normalizer, template = fit_feature_stats(train_data)
    features_norm = np.stack([normalizer.apply(v) for v in train_data.features_raw]).astype(
        np.float32
    )

    bundle = new_bundle(config)
    bundle.normalizer = normalizer
    bundle.template = template
    params = bundle.model.parameters()
    optimizer = AdamW(params, lr=config.lr, weight_decay=config.weight_decay)
    log(
        f"training on {len(train_data)} samples, "
        f"{bundle.model.num_parameters():,} parameters, {config.epochs} epochs"
    )

    losses: list[float] = []
    log_lines: list[str] = []
    step = 0
    started = time.time()
    for epoch in range(config.epochs):
        order = rng_mod.stream(config.seed, "epoch-order", epoch).permutation(len(train_data))
        for start in range(0, len(order), config.batch_size):
            chosen = order[start : start + config.batch_size]
            batch = {
                "signals": train_data.signals[chosen],
                "cond": train_data.cond[chosen],
                "mass": train_data.mass[chosen],
                "features_norm": features_norm[chosen],
            }
            step_rng = rng_mod.stream(config.seed, "train-step", epoch, int(start))
            loss = training_loss(batch, bundle, config, step_rng)
            value = loss.item()
            if not np.isfinite(value):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch} step {step}: {value}"
                )
            grads = gradients(loss, params)
            if config.grad_clip:
                clip_gradients(grads, config.grad_clip)
            optimizer.step(grads)
            losses.append(value)
            log_lines.append(f"{step}\t{value:.6f}")
            step += 1
        if config.checkpoint_every and (epoch + 1) % config.checkpoint_every == 0:
            save_bundle(bundle, out_dir / f"model_ep{epoch + 1:04d}.ckpt")
        if epoch % max(1, config.epochs // 10) == 0 or epoch == config.epochs - 1:
            first, last = smoothed(losses)
            log(
                f"epoch {epoch + 1}/{config.epochs} loss {losses[-1]:.4f} "
                f"(smoothed {first:.4f} -> {last:.4f}, {time.time() - started:.0f}s)"
            )

    final_path = out_dir / "model.ckpt"
    save_bundle(bundle, final_path)
    save_config(config, out_dir / "config.txt")
    _write_text(out_dir / "loss_log.txt", "step\tloss\n" + "\n".join(log_lines) + "\n")
    return final_path


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
