"""Noise schedule tables and the elementary forward/reverse updates.

Tables are float64 throughout. Timesteps are 1-based (1..T); alpha_bar at
the virtual step 0 is 1, which makes the last DDIM hop return the clean
prediction directly and zeroes the DDPM posterior deviation at t=1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NoiseSchedule:
    timesteps: int
    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray
    sigma: np.ndarray  # posterior std: sigma_t^2 = beta_t (1 - abar_{t-1}) / (1 - abar_t)

    def abar(self, t) -> np.ndarray:
        """alpha_bar at 1-based steps; t == 0 returns 1 by convention."""
        t = np.asarray(t, dtype=np.int64)
        self._check_range(t, allow_zero=True)
        padded = np.concatenate([[1.0], self.alpha_bar])
        return padded[t]

    def _check_range(self, t, allow_zero=False) -> None:
        lo = 0 if allow_zero else 1
        t = np.asarray(t)
        if (t < lo).any() or (t > self.timesteps).any():
            raise ValueError(f"timestep out of range {lo}..{self.timesteps}")


def make_schedule(timesteps: int, beta_start: float, beta_end: float) -> NoiseSchedule:
    """Linear beta ramp inclusive of both endpoints, with derived tables."""
    if timesteps < 1:
        raise ValueError("timesteps must be at least 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError(f"need 0 < beta_start <= beta_end < 1, got {(beta_start, beta_end)}")
    beta = np.linspace(beta_start, beta_end, timesteps, dtype=np.float64)
    alpha = 1.0 - beta
    alpha_bar = np.cumprod(alpha)
    alpha_bar_prev = np.concatenate([[1.0], alpha_bar[:-1]])
    sigma = np.sqrt(beta * (1.0 - alpha_bar_prev) / (1.0 - alpha_bar))
    return NoiseSchedule(timesteps, beta, alpha, alpha_bar, sigma)


def _expand(values: np.ndarray, target_ndim: int) -> np.ndarray:
    return values.reshape(values.shape + (1,) * (target_ndim - values.ndim))


def forward_noise(z0: np.ndarray, t, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """sqrt(abar_t) z0 + sqrt(1 - abar_t) eps, with per-sample t allowed."""
    if eps.shape != z0.shape:
        raise ValueError(f"eps shape {eps.shape} differs from z0 shape {z0.shape}")
    schedule._check_range(np.asarray(t))
    abar = _expand(np.atleast_1d(schedule.abar(t)), z0.ndim)
    return np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps


def cfg_combine(eps_uncond: np.ndarray, eps_cond: np.ndarray, scale: float) -> np.ndarray:
    """Classifier-free guidance blend; scales 0 and 1 are exact passthroughs."""
    if eps_uncond.shape != eps_cond.shape:
        raise ValueError("guidance operands must share a shape")
    if scale == 0.0:
        return eps_uncond.copy()
    if scale == 1.0:
        return eps_cond.copy()
    return eps_uncond + scale * (eps_cond - eps_uncond)


def ddpm_step(z_t, t: int, eps_pred, schedule: NoiseSchedule, noise) -> np.ndarray:
    """One stochastic reverse step; injected noise is suppressed at t = 1."""
    schedule._check_range(np.asarray(t))
    alpha_t = schedule.alpha[t - 1]
    abar_t = schedule.alpha_bar[t - 1]
    mean = (z_t - (1.0 - alpha_t) / np.sqrt(1.0 - abar_t) * eps_pred) / np.sqrt(alpha_t)
    if t == 1:
        return mean
    return mean + schedule.sigma[t - 1] * noise


def ddim_step(z_t, t: int, t_prev: int, eps_pred, schedule: NoiseSchedule) -> np.ndarray:
    """Deterministic (eta = 0) hop from t to t_prev < t; t_prev 0 returns z0-hat."""
    if not 0 <= t_prev < t:
        raise ValueError(f"need 0 <= t_prev < t, got t={t} t_prev={t_prev}")
    schedule._check_range(np.asarray(t))
    abar_t = schedule.abar(t)
    abar_prev = schedule.abar(t_prev)
    z0_hat = (z_t - np.sqrt(1.0 - abar_t) * eps_pred) / np.sqrt(abar_t)
    return np.sqrt(abar_prev) * z0_hat + np.sqrt(1.0 - abar_prev) * eps_pred


def ddim_timesteps(timesteps: int, steps: int) -> list[tuple[int, int]]:
    """Uniform-stride descending (t, t_prev) pairs from T down to 0."""
    if not 1 <= steps <= timesteps:
        raise ValueError(f"steps must be in 1..{timesteps}, got {steps}")
    grid = np.unique(np.round(np.linspace(0, timesteps, steps + 1)).astype(int))
    pairs = list(zip(grid[1:][::-1], grid[:-1][::-1]))
    return [(int(t), int(tp)) for t, tp in pairs]
