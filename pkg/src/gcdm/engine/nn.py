"""Parameter containers and the layers used by the denoiser."""

from __future__ import annotations

import math

import numpy as np

from gcdm.engine import functional as F
from gcdm.engine import tensor as T
from gcdm.engine.tensor import Tensor


class Module:
    """Minimal parameter container with named, ordered parameter traversal."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})

    def __setattr__(self, name, value):
        if isinstance(value, Tensor) and value.requires_grad:
            self._params[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def parameters(self, prefix: str = "") -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, p in self._params.items():
            out[f"{prefix}{name}"] = p
        for name, m in self._modules.items():
            out.update(m.parameters(prefix=f"{prefix}{name}."))
        return out

    def load_parameters(self, values: dict[str, np.ndarray], prefix: str = "") -> None:
        """Copy raw arrays into the matching parameters; shapes must agree."""
        params = self.parameters(prefix)
        missing = set(params) - set(values)
        if missing:
            raise KeyError(f"missing parameters: {sorted(missing)[:5]}")
        for name, p in params.items():
            arr = np.asarray(values[name], dtype=p.data.dtype)
            if arr.shape != p.data.shape:
                raise ValueError(
                    f"parameter {name!r} shape mismatch: checkpoint {arr.shape}, model {p.data.shape}"
                )
            p.data = arr.copy()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters().values())


class ModuleList(Module):
    def __init__(self, modules=()):
        super().__init__()
        self.items = []
        for m in modules:
            self.append(m)

    def append(self, module: Module) -> None:
        self._modules[str(len(self.items))] = module
        self.items.append(module)

    def __iter__(self):
        return iter(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def __len__(self):
        return len(self.items)


def _param(rng: np.random.Generator, shape, scale: float) -> Tensor:
    data = rng.normal(0.0, scale, size=shape)
    return Tensor(data, requires_grad=True)


class Linear(Module):
    def __init__(self, in_dim: int, out_dim: int, rng, bias: bool = True, zero_init: bool = False):
        super().__init__()
        scale = 0.0 if zero_init else 1.0 / math.sqrt(in_dim)
        self.weight = _param(rng, (in_dim, out_dim), scale)
        self.bias = Tensor(np.zeros(out_dim), requires_grad=True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        flat = x if x.ndim == 2 else x.reshape(-1, x.shape[-1])
        y = T.matmul(flat, self.weight)
        if self.bias is not None:
            y = T.add(y, self.bias)
        if x.ndim != 2:
            y = y.reshape(*x.shape[:-1], self.weight.shape[1])
        return y


class Conv2d(Module):
    def __init__(
        self,
        in_ch: int,
        out_ch: int,
        kernel: int,
        rng,
        stride: int = 1,
        pad: int = 0,
        bias: bool = True,
        zero_init: bool = False,
    ):
        super().__init__()
        self.stride = stride
        self.pad = pad
        scale = 0.0 if zero_init else 1.0 / math.sqrt(in_ch * kernel * kernel)
        self.weight = _param(rng, (out_ch, in_ch, kernel, kernel), scale)
        self.bias = Tensor(np.zeros((1, out_ch, 1, 1)), requires_grad=True) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = F.conv2d(x, self.weight, stride=self.stride, pad=self.pad)
        if self.bias is not None:
            y = T.add(y, self.bias)
        return y


class GroupNorm(Module):
    """Group normalization over channel groups; batch-size independent."""

    def __init__(self, channels: int, groups: int = 8, eps: float = 1e-5):
        super().__init__()
        if channels % groups:
            raise ValueError(f"channels {channels} not divisible by groups {groups}")
        self.groups = groups
        self.eps = eps
        self.gamma = Tensor(np.ones((1, channels, 1, 1)), requires_grad=True)
        self.beta = Tensor(np.zeros((1, channels, 1, 1)), requires_grad=True)

    def __call__(self, x: Tensor) -> Tensor:
        return F.group_norm(x, self.gamma, self.beta, self.groups, self.eps)


class CrossAttention(Module):
    """Single-head cross-attention from a feature map onto condition tokens.

    All-zero tokens contribute exactly nothing: the value path and the
    bias-free output projection both vanish, so the residual passes through
    untouched. That realizes the null condition as a strict no-op here.
    """

    def __init__(self, channels: int, token_dim: int, width: int, rng, groups: int = 8):
        super().__init__()
        self.norm = GroupNorm(channels, groups)
        self.to_q = Linear(channels, width, rng, bias=False)
        self.to_k = Linear(token_dim, width, rng, bias=False)
        self.to_v = Linear(token_dim, width, rng, bias=False)
        self.to_out = Linear(width, channels, rng, bias=False, zero_init=True)

    def __call__(self, x: Tensor, tokens: Tensor) -> Tensor:
        n, c, h, w = x.shape
        q = self.to_q(self.norm(x).reshape(n, c, h * w).transpose(0, 2, 1))
        k = self.to_k(tokens)
        v = self.to_v(tokens)
        attended = F.attention(q, k, v)
        out = self.to_out(attended).transpose(0, 2, 1).reshape(n, c, h, w)
        return T.add(x, out)


def timestep_embedding(t: np.ndarray, dim: int, max_period: float = 10000.0) -> np.ndarray:
    """Sinusoidal embedding of integer timesteps, shape (len(t), dim)."""
    half = dim // 2
    freqs = np.exp(-math.log(max_period) * np.arange(half) / half)
    args = np.asarray(t, dtype=np.float64)[:, None] * freqs[None, :]
    return np.concatenate([np.cos(args), np.sin(args)], axis=1)
