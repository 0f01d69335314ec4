"""Lesion conditioning branch: geometry tokens, radiomic tokens, gated fusion.

The branch turns a mass mask and its 67-value feature vector into a small
set of conditioning tokens for the denoiser's cross-attention. Candidates
are all geometry x radiomics pairings; a relevance gate scores each pair
and the top-k scaled candidates are projected to the conditioning width.
"""

from __future__ import annotations

import numpy as np

from gcdm.engine import Tensor, concat, gather_rows, repeat_axis, silu, tile_axis
from gcdm.engine import tensor as T
from gcdm.engine.nn import Conv2d, Linear, Module

RADIOMIC_DIM = 67


class GeometryEncoder(Module):
    """Strided conv stack collapsing the mass channel into m tokens of width d_geo."""

    def __init__(self, image_size: int, tokens: int, token_dim: int, rng):
        super().__init__()
        self.tokens = tokens
        self.token_dim = token_dim
        self.convs = _build_pyramid(image_size, rng)
        final_spatial = max(image_size // (2 ** len(self.convs.items)), 1)
        self.head = Linear(32 * final_spatial * final_spatial, tokens * token_dim, rng)

    def __call__(self, mass: Tensor) -> Tensor:
        h = mass
        for conv in self.convs:
            h = silu(conv(h))
        n = h.shape[0]
        flat = h.reshape(n, -1)
        return self.head(flat).reshape(n, self.tokens, self.token_dim)


def _build_pyramid(image_size: int, rng):
    from gcdm.engine.nn import ModuleList

    widths = [8, 16, 32, 32, 32, 32]
    layers = ModuleList()
    size = image_size
    in_ch = 1
    i = 0
    while size > 4:
        out_ch = widths[min(i, len(widths) - 1)] if size > 8 else 32
        layers.append(Conv2d(in_ch, out_ch, 3, rng, stride=2, pad=1))
        in_ch = out_ch
        size //= 2
        i += 1
    if not len(layers):
        layers.append(Conv2d(1, 32, 3, rng, stride=1, pad=1))
    return layers


class RadTokenizer(Module):
    """Bias-free expansion of one 67-vector into n tokens of the same width.

    No bias means the zero vector maps to zero tokens, carrying the no-mass
    convention through to the token level.
    """

    def __init__(self, tokens: int, rng):
        super().__init__()
        self.tokens = tokens
        scale = 1.0 / np.sqrt(RADIOMIC_DIM)
        self.weight = Tensor(
            rng.normal(0.0, scale, size=(tokens * RADIOMIC_DIM, RADIOMIC_DIM)),
            requires_grad=True,
        )

    def __call__(self, features: Tensor) -> Tensor:
        n = features.shape[0]
        out = T.matmul(features, T.transpose(self.weight))
        return out.reshape(n, self.tokens, RADIOMIC_DIM)


def cross_concat(f_geo: Tensor, f_rad: Tensor) -> Tensor:
    """All m x n pairings, candidate (i, j) at index i*n + j (lexicographic)."""
    n_rad = f_rad.shape[1]
    m_geo = f_geo.shape[1]
    geo_grid = repeat_axis(f_geo, n_rad, axis=1)
    rad_grid = tile_axis(f_rad, m_geo, axis=1)
    return concat([geo_grid, rad_grid], axis=2)


class GatedFusion(Module):
    """Relevance-gated top-k candidate selection with a shared output projection."""

    def __init__(self, candidate_dim: int, cond_dim: int, hidden: int, top_k: int, rng):
        super().__init__()
        self.top_k = top_k
        self.score_in = Linear(candidate_dim, hidden, rng)
        self.score_out = Linear(hidden, 1, rng)
        self.out_proj = Linear(candidate_dim, cond_dim, rng)

    def gate_scores(self, f_comb: Tensor) -> Tensor:
        """Average-pool gate times a per-candidate MLP, one scalar each."""
        pooled = f_comb.mean(axis=2)
        mlp = self.score_out(T.tanh(self.score_in(f_comb)))
        return T.mul(pooled, mlp.reshape(f_comb.shape[0], f_comb.shape[1]))

    def select(self, f_comb: Tensor, w_gate: Tensor, top_k: int | None = None) -> Tensor:
        """Scale candidates by their scores, keep the top-k, project.

        Selection indices are treated as constants; gradients flow through
        the kept values and their scores. Ties go to the smaller candidate
        index, and asking for more candidates than exist keeps them all.
        """
        k = self.top_k if top_k is None else top_k
        if k < 1:
            raise ValueError(f"top_k must be at least 1, got {k}")
        n, count, _ = f_comb.shape
        k = min(k, count)
        scaled = T.add(f_comb, T.mul(w_gate.reshape(n, count, 1), f_comb))
        order = np.argsort(-w_gate.data, axis=1, kind="stable")[:, :k]
        flat_index = (order + np.arange(n)[:, None] * count).ravel()
        picked = gather_rows(scaled.reshape(n * count, f_comb.shape[2]), flat_index)
        picked = picked.reshape(n, k, f_comb.shape[2])
        return self.out_proj(picked)

    def __call__(self, f_comb: Tensor) -> Tensor:
        return self.select(f_comb, self.gate_scores(f_comb))


class LesionBranch(Module):
    """Full conditioning path with the radiomics / gating ablation switches."""

    def __init__(
        self,
        image_size: int,
        geo_tokens: int,
        rad_tokens: int,
        top_k: int,
        d_geo: int,
        d_cond: int,
        gate_hidden: int,
        use_radiomics: bool,
        gated: bool,
        rng,
    ):
        super().__init__()
        self.use_radiomics = use_radiomics
        self.gated = gated
        self.d_cond = d_cond
        self.encoder = GeometryEncoder(image_size, geo_tokens, d_geo, rng)
        if use_radiomics:
            self.tokenizer = RadTokenizer(rad_tokens, rng)
            candidate_dim = d_geo + RADIOMIC_DIM
            if gated:
                self.fusion = GatedFusion(candidate_dim, d_cond, gate_hidden, top_k, rng)
                self.token_count = top_k
            else:
                if geo_tokens != rad_tokens:
                    raise ValueError("plain concatenation needs equal geo/rad token counts")
                self.plain_proj = Linear(candidate_dim, d_cond, rng)
                self.token_count = geo_tokens
        else:
            self.geo_proj = Linear(d_geo, d_cond, rng)
            self.token_count = geo_tokens

    def __call__(self, mass: Tensor, features: Tensor) -> Tensor:
        f_geo = self.encoder(mass)
        if not self.use_radiomics:
            return self.geo_proj(f_geo)
        f_rad = self.tokenizer(features)
        if not self.gated:
            return self.plain_proj(concat([f_geo, f_rad], axis=2))
        return self.fusion(cross_concat(f_geo, f_rad))
