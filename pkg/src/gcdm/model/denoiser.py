"""Conditional U-shaped denoiser.

Input is the noisy latent concatenated with the encoded soft mask along
channels; the timestep enters through a sinusoidal embedding added inside
each residual block; conditioning tokens enter through cross-attention at
the two lowest resolutions. Output matches the latent shape.

The stem halves the spatial resolution immediately and the final stage
upsamples back, so the residual trunk runs at half/quarter/eighth scale;
at 64 px inputs that puts cross-attention at 16 and 8.
"""

from __future__ import annotations

import numpy as np

from gcdm.engine import Tensor, concat, silu, upsample_nearest2x
from gcdm.engine import tensor as T
from gcdm.engine.nn import Conv2d, CrossAttention, GroupNorm, Linear, Module, timestep_embedding

TIME_FREQ_DIM = 64


class ResBlock(Module):
    def __init__(self, in_ch: int, out_ch: int, time_dim: int, groups: int, rng):
        super().__init__()
        self.norm1 = GroupNorm(in_ch, groups)
        self.conv1 = Conv2d(in_ch, out_ch, 3, rng, pad=1)
        self.time_proj = Linear(time_dim, out_ch, rng)
        self.norm2 = GroupNorm(out_ch, groups)
        self.conv2 = Conv2d(out_ch, out_ch, 3, rng, pad=1, zero_init=True)
        self.skip = Conv2d(in_ch, out_ch, 1, rng, bias=False) if in_ch != out_ch else None

    def __call__(self, x: Tensor, temb: Tensor) -> Tensor:
        h = self.conv1(silu(self.norm1(x)))
        n, c = h.shape[0], h.shape[1]
        h = T.add(h, self.time_proj(silu(temb)).reshape(n, c, 1, 1))
        h = self.conv2(silu(self.norm2(h)))
        base = x if self.skip is None else self.skip(x)
        return T.add(base, h)


class Denoiser(Module):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        widths: tuple[int, int, int],
        time_dim: int,
        token_dim: int,
        attn_width: int,
        groups: int,
        rng,
    ):
        super().__init__()
        w0, w1, w2 = widths
        self.time_in = Linear(TIME_FREQ_DIM, time_dim, rng)
        self.time_out = Linear(time_dim, time_dim, rng)

        self.stem = Conv2d(in_channels, w0, 3, rng, stride=2, pad=1)
        self.enc0 = ResBlock(w0, w0, time_dim, groups, rng)
        self.down1 = Conv2d(w0, w1, 3, rng, stride=2, pad=1)
        self.enc1 = ResBlock(w1, w1, time_dim, groups, rng)
        self.attn_enc1 = CrossAttention(w1, token_dim, attn_width, rng, groups)
        self.down2 = Conv2d(w1, w2, 3, rng, stride=2, pad=1)
        self.enc2 = ResBlock(w2, w2, time_dim, groups, rng)
        self.attn_enc2 = CrossAttention(w2, token_dim, attn_width, rng, groups)

        self.mid1 = ResBlock(w2, w2, time_dim, groups, rng)
        self.attn_mid = CrossAttention(w2, token_dim, attn_width, rng, groups)
        self.mid2 = ResBlock(w2, w2, time_dim, groups, rng)

        self.dec2 = ResBlock(w2 + w2, w2, time_dim, groups, rng)
        self.attn_dec2 = CrossAttention(w2, token_dim, attn_width, rng, groups)
        self.up1 = Conv2d(w2, w1, 3, rng, pad=1)
        self.dec1 = ResBlock(w1 + w1, w1, time_dim, groups, rng)
        self.attn_dec1 = CrossAttention(w1, token_dim, attn_width, rng, groups)
        self.up0 = Conv2d(w1, w0, 3, rng, pad=1)
        self.dec0 = ResBlock(w0 + w0, w0, time_dim, groups, rng)

        self.head_conv = Conv2d(w0, w0 // 2, 3, rng, pad=1)
        self.out_norm = GroupNorm(w0 // 2, min(groups, w0 // 2))
        self.out_conv = Conv2d(w0 // 2, out_channels, 3, rng, pad=1, zero_init=True)

    def __call__(self, z_concat: Tensor, t: np.ndarray, tokens: Tensor) -> Tensor:
        temb = self.time_out(silu(self.time_in(Tensor(timestep_embedding(t, TIME_FREQ_DIM)))))

        h0 = self.enc0(self.stem(z_concat), temb)
        h1 = self.enc1(self.down1(h0), temb)
        h1 = self.attn_enc1(h1, tokens)
        h2 = self.enc2(self.down2(h1), temb)
        h2 = self.attn_enc2(h2, tokens)

        mid = self.mid2(self.attn_mid(self.mid1(h2, temb), tokens), temb)

        d2 = self.attn_dec2(self.dec2(concat([mid, h2], axis=1), temb), tokens)
        d1 = self.dec1(concat([self.up1(upsample_nearest2x(d2)), h1], axis=1), temb)
        d1 = self.attn_dec1(d1, tokens)
        d0 = self.dec0(concat([self.up0(upsample_nearest2x(d1)), h0], axis=1), temb)

        head = self.head_conv(upsample_nearest2x(d0))
        return self.out_conv(silu(self.out_norm(head)))
