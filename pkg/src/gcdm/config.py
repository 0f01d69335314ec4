"""Run configuration: one flat dataclass, serialized as versioned key=value text.

Unknown keys and version mismatches are rejected on load so stale config
files fail loudly instead of silently drifting.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass
from pathlib import Path

CONFIG_VERSION = 1


@dataclass
class TrainConfig:
    config_version: int = CONFIG_VERSION

    # data / paths
    data_dir: str = "runs/phantom64"
    out_dir: str = "runs/train"
    image_size: int = 64
    codec: str = "identity"  # identity | avgpool2x

    # noise schedule
    timesteps: int = 1000
    beta_start: float = 8.5e-4
    beta_end: float = 0.012

    # conditioning
    soft_sigma: float = 1.5
    soft_scope: str = "lesion_only"  # lesion_only | all_channels
    drop_prob: float = 0.1
    guidance_scale: float = 7.5
    sample_steps: int = 50

    # lesion branch ablation switches
    lcb: bool = True
    use_radiomics: bool = True
    gated: bool = True

    # lesion branch dimensions
    geo_tokens: int = 5
    rad_tokens: int = 5
    top_k: int = 5
    d_geo: int = 64
    d_cond: int = 64
    gate_hidden: int = 128

    # denoiser
    widths: tuple[int, int, int] = (32, 64, 96)
    time_dim: int = 128
    groups: int = 8

    # optimization
    epochs: int = 36
    batch_size: int = 16
    lr: float = 1e-3
    weight_decay: float = 1e-4
    grad_clip: float = 1.0  # global grad-norm ceiling; 0 disables
    seed: int = 0
    checkpoint_every: int = 0  # extra periodic checkpoints; 0 = final only

    def validate(self) -> "TrainConfig":
        if not 0.0 <= self.drop_prob <= 1.0:
            raise ValueError(f"drop_prob must be in [0, 1], got {self.drop_prob}")
        if self.use_radiomics and not self.lcb:
            raise ValueError("use_radiomics requires lcb")
        if self.gated and not self.use_radiomics:
            raise ValueError("gated fusion requires use_radiomics")
        if self.codec not in ("identity", "avgpool2x"):
            raise ValueError(f"unknown codec {self.codec!r}")
        if self.soft_scope not in ("lesion_only", "all_channels"):
            raise ValueError(f"unknown soft_scope {self.soft_scope!r}")
        if self.image_size % 16:
            raise ValueError("image_size must be a multiple of 16")
        if self.soft_sigma < 0:
            raise ValueError("soft_sigma must be non-negative")
        if not 0 < self.beta_start <= self.beta_end < 1:
            raise ValueError("need 0 < beta_start <= beta_end < 1")
        return self


_FIELDS = {f.name: f for f in dataclasses.fields(TrainConfig)}


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_value(name: str, raw: str):
    base = str(_FIELDS[name].type)
    raw = raw.strip()
    if base == "bool":
        if raw not in ("true", "false"):
            raise ValueError(f"{name}: expected true/false, got {raw!r}")
        return raw == "true"
    if base == "int":
        return int(raw)
    if base == "float":
        return float(raw)
    if base.startswith("tuple"):
        return tuple(int(v) for v in raw.split(","))
    return raw


def config_to_text(config: TrainConfig) -> str:
    lines = [f"{f.name} = {_format_value(getattr(config, f.name))}" for f in dataclasses.fields(TrainConfig)]
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> TrainConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"line {lineno}: expected 'key = value', got {stripped!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _FIELDS:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _parse_value(key, raw)
    version = values.get("config_version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ValueError(
            f"config version {version} is not supported (expected {CONFIG_VERSION}); "
            "regenerate the file with the current tooling"
        )
    return TrainConfig(**values).validate()


def load_config(path) -> TrainConfig:
    return config_from_text(Path(path).read_text(encoding="utf-8"))


def save_config(config: TrainConfig, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(config_to_text(config), encoding="utf-8")
    os.replace(tmp, path)


def apply_overrides(config: TrainConfig, overrides: dict[str, str]) -> TrainConfig:
    """Apply CLI `key=value` overrides on top of a config; flags win."""
    updates = {}
    for key, raw in overrides.items():
        if key not in _FIELDS:
            raise ValueError(f"unknown config key {key!r}")
        updates[key] = _parse_value(key, raw)
    return dataclasses.replace(config, **updates).validate()
