import dataclasses

import numpy as np
import pytest

from gcdm import rng
from gcdm.config import TrainConfig
from gcdm.diffusion import (
    cfg_combine,
    ddim_step,
    ddim_timesteps,
    ddpm_step,
    forward_noise,
    get_codec,
    make_schedule,
    new_bundle,
    training_loss,
)
from gcdm.data import PhantomSpec, generate_phantom
from gcdm.maskproc import soften


def default_schedule():
    return make_schedule(1000, 8.5e-4, 0.012)


# -- schedule ---------------------------------------------------------------------------


def test_schedule_endpoints():
    s = default_schedule()
    assert s.beta[0] == pytest.approx(8.5e-4)
    assert s.beta[-1] == pytest.approx(0.012)


def test_schedule_abar_first_step():
    s = default_schedule()
    assert s.alpha_bar[0] == pytest.approx(1 - 8.5e-4)  # 0.99915


def test_schedule_abar_final_small():
    s = default_schedule()
    expected = np.prod(1.0 - np.linspace(8.5e-4, 0.012, 1000))
    assert s.alpha_bar[-1] == pytest.approx(expected, rel=1e-12)
    assert s.alpha_bar[-1] < 0.01


def test_schedule_monotonicity_and_bounds():
    s = default_schedule()
    assert (np.diff(s.beta) > 0).all()
    assert (np.diff(s.alpha_bar) < 0).all()
    assert ((s.alpha_bar > 0) & (s.alpha_bar < 1)).all()
    assert np.isfinite(s.sigma).all()
    assert s.sigma[0] == 0.0  # 1 - abar_0 = 0


def test_schedule_sigma_identity():
    s = default_schedule()
    abar_prev = np.concatenate([[1.0], s.alpha_bar[:-1]])
    np.testing.assert_allclose(
        s.sigma**2, s.beta * (1 - abar_prev) / (1 - s.alpha_bar), atol=1e-15
    )


def test_schedule_invalid_ranges():
    with pytest.raises(ValueError):
        make_schedule(0, 1e-4, 1e-2)
    with pytest.raises(ValueError):
        make_schedule(10, 0.0, 1e-2)
    with pytest.raises(ValueError):
        make_schedule(10, 2e-2, 1e-2)


# -- forward noise -----------------------------------------------------------------------


def test_forward_noise_zero_eps():
    s = default_schedule()
    z0 = np.ones((1, 1, 4, 4))
    out = forward_noise(z0, 100, np.zeros_like(z0), s)
    np.testing.assert_allclose(out, np.sqrt(s.alpha_bar[99]) * z0)


def test_forward_noise_zero_signal():
    s = default_schedule()
    eps = np.random.default_rng(0).normal(size=(1, 1, 4, 4))
    out = forward_noise(np.zeros_like(eps), 500, eps, s)
    np.testing.assert_allclose(out, np.sqrt(1 - s.alpha_bar[499]) * eps)


def test_forward_noise_inversion():
    s = default_schedule()
    g = rng.stream(0, "inv")
    z0 = g.normal(size=(2, 1, 8, 8)).astype(np.float32)
    eps = g.normal(size=z0.shape).astype(np.float32)
    for t in (1, 250, 999, 1000):
        z_t = forward_noise(z0, t, eps, s)
        recovered = (z_t - np.sqrt(1 - s.abar(t)) * eps) / np.sqrt(s.abar(t))
        assert np.abs(recovered - z0).max() < 5e-5


def test_forward_noise_validates():
    s = default_schedule()
    with pytest.raises(ValueError):
        forward_noise(np.zeros((1, 1, 2, 2)), 0, np.zeros((1, 1, 2, 2)), s)
    with pytest.raises(ValueError):
        forward_noise(np.zeros((1, 1, 2, 2)), 1, np.zeros((1, 1, 3, 3)), s)


# -- reverse steps -----------------------------------------------------------------------


def test_cfg_identities():
    g = rng.stream(1, "cfg")
    eu = g.normal(size=(2, 3))
    ec = g.normal(size=(2, 3))
    np.testing.assert_array_equal(cfg_combine(eu, ec, 1.0), ec)
    np.testing.assert_array_equal(cfg_combine(eu, ec, 0.0), eu)
    np.testing.assert_allclose(cfg_combine(eu, eu, 7.5), eu)


def test_ddpm_zero_prediction_zero_noise():
    s = default_schedule()
    z = np.full((1, 1, 2, 2), 0.7)
    out = ddpm_step(z, 10, np.zeros_like(z), s, np.zeros_like(z))
    np.testing.assert_allclose(out, z / np.sqrt(s.alpha[9]))


def test_ddpm_alpha_one_limit():
    s = make_schedule(10, 1e-12, 1e-6)
    z = np.ones((1, 1, 2, 2))
    out = ddpm_step(z, 1, np.zeros_like(z), s, np.zeros_like(z))
    np.testing.assert_allclose(out, z, atol=1e-9)


def test_ddpm_posterior_mean_consistency():
    s = default_schedule()
    g = rng.stream(2, "ddpm")
    z0 = g.normal(size=(1, 1, 4, 4))
    eps = g.normal(size=z0.shape)
    t = 400
    z_t = forward_noise(z0, t, eps, s)
    stepped = ddpm_step(z_t, t, eps, s, np.zeros_like(z0))
    abar_t, abar_prev = s.alpha_bar[t - 1], s.alpha_bar[t - 2]
    posterior_mean = (
        np.sqrt(abar_prev) * s.beta[t - 1] / (1 - abar_t) * z0
        + np.sqrt(s.alpha[t - 1]) * (1 - abar_prev) / (1 - abar_t) * z_t
    )
    np.testing.assert_allclose(stepped, posterior_mean, atol=1e-5)


def test_ddim_perfect_oracle_inverts():
    s = default_schedule()
    g = rng.stream(3, "ddim")
    z0 = g.normal(size=(1, 1, 4, 4))
    eps = g.normal(size=z0.shape)
    z_t = forward_noise(z0, 700, eps, s)
    out = ddim_step(z_t, 700, 0, eps, s)
    assert np.abs(out - z0).max() < 1e-5


def test_ddim_invalid_pairs():
    s = default_schedule()
    z = np.zeros((1, 1, 2, 2))
    with pytest.raises(ValueError):
        ddim_step(z, 5, 5, z, s)
    with pytest.raises(ValueError):
        ddim_step(z, 5, 7, z, s)


def test_ddim_full_trajectory_with_oracle_recovers_z0():
    s = default_schedule()
    g = rng.stream(4, "ddim-full")
    z0 = g.normal(size=(1, 1, 6, 6)).astype(np.float32)
    eps = g.normal(size=z0.shape).astype(np.float32)
    z = forward_noise(z0, 1000, eps, s)
    for t, t_prev in ddim_timesteps(1000, 1000):
        oracle_eps = (z - np.sqrt(s.abar(t)) * z0) / np.sqrt(1 - s.abar(t))
        z = ddim_step(z, t, t_prev, oracle_eps, s)
    assert np.abs(z - z0).max() < 1e-4


def test_ddim_timestep_grid():
    pairs = ddim_timesteps(1000, 50)
    assert pairs[0][0] == 1000
    assert pairs[-1][1] == 0
    assert len(pairs) == 50
    for t, t_prev in pairs:
        assert t_prev < t
    with pytest.raises(ValueError):
        ddim_timesteps(1000, 0)
    with pytest.raises(ValueError):
        ddim_timesteps(10, 20)


# -- codecs -----------------------------------------------------------------------------


def test_identity_codec_exact():
    codec = get_codec("identity")
    x = np.random.rand(2, 3, 8, 8)
    np.testing.assert_array_equal(codec.decode(codec.encode(x)), x)


def test_avgpool_codec_shapes():
    codec = get_codec("avgpool2x")
    x = np.random.rand(2, 1, 8, 8)
    z = codec.encode(x)
    assert z.shape == (2, 1, 4, 4)
    assert codec.decode(z).shape == x.shape
    np.testing.assert_allclose(z[0, 0, 0, 0], x[0, 0, :2, :2].mean())


def test_unknown_codec():
    with pytest.raises(ValueError):
        get_codec("vae")


# -- training loss ------------------------------------------------------------------------


def _tiny_batch(n=4, lesions=(1, 2), sigma=1.5):
    samples = [generate_phantom(PhantomSpec(lesion_count=lesions), 50 + i) for i in range(n)]
    images = np.stack([s.image[None] for s in samples]).astype(np.float32)
    return {
        "signals": 2 * images - 1,
        "cond": np.stack([soften(s.mask, sigma).channels for s in samples]).astype(np.float32),
        "mass": np.stack([s.mask.mass[None] for s in samples]).astype(np.float32),
        "features_norm": np.zeros((n, 67), np.float32),
    }


def _tiny_config(**kw):
    base = dict(
        image_size=64, widths=(16, 16, 16), time_dim=32, d_geo=16, d_cond=16,
        gate_hidden=16, groups=4, timesteps=50, epochs=1, batch_size=4,
    )
    base.update(kw)
    return TrainConfig(**base).validate()


class _OracleModel:
    """Stand-in denoiser returning a fixed function of the stashed noise."""

    def __init__(self, bundle, mode):
        self.inner = bundle.model
        self.mode = mode
        self.eps = None

    def conditioning_tokens(self, mass, feats):
        return self.inner.conditioning_tokens(mass, feats)

    def null_tokens(self, n):
        return self.inner.null_tokens(n)

    def denoise(self, z_concat, t, tokens):
        from gcdm.engine import Tensor

        latent = z_concat.data[:, :1]
        if self.mode == "true-eps":
            return Tensor(self.eps)
        return Tensor(np.zeros_like(latent))


def test_training_loss_zero_when_model_predicts_true_noise():
    config = _tiny_config()
    bundle = new_bundle(config)
    oracle = _OracleModel(bundle, "true-eps")
    bundle = dataclasses.replace(bundle, model=oracle)
    batch = _tiny_batch()
    # replay the loss's own draw order (t first, then eps) to stash the true noise
    preview = rng.stream(123, "shared")
    preview.integers(1, config.timesteps + 1, size=4)
    oracle.eps = preview.standard_normal((4, 1, 64, 64)).astype(np.float32)
    loss = training_loss(batch, bundle, config, rng.stream(123, "shared"))
    assert loss.item() < 1e-10


def test_training_loss_zero_prediction_near_unit():
    config = _tiny_config(drop_prob=0.0)
    bundle = new_bundle(config)
    oracle = _OracleModel(bundle, "zero")
    bundle = dataclasses.replace(bundle, model=oracle)
    batch = _tiny_batch(n=8)
    values = [
        training_loss(batch, bundle, config, rng.stream(s, "unit")).item() for s in range(8)
    ]
    assert abs(np.mean(values) - 1.0) < 0.05


def test_training_loss_drop_prob_one_ignores_conditions():
    config = _tiny_config(drop_prob=1.0)
    bundle = new_bundle(config)
    batch = _tiny_batch()
    swapped = dict(batch)
    swapped["cond"] = np.roll(batch["cond"], 1, axis=0)
    swapped["mass"] = np.roll(batch["mass"], 1, axis=0)
    swapped["features_norm"] = batch["features_norm"] + 0.5
    a = training_loss(batch, bundle, config, rng.stream(7, "drop"))
    b = training_loss(swapped, bundle, config, rng.stream(7, "drop"))
    assert a.item() == b.item()


def test_training_loss_deterministic_given_seed():
    config = _tiny_config(drop_prob=0.0)
    bundle = new_bundle(config)
    batch = _tiny_batch()
    a = training_loss(batch, bundle, config, rng.stream(11, "det"))
    b = training_loss(batch, bundle, config, rng.stream(11, "det"))
    assert a.item() == b.item()
