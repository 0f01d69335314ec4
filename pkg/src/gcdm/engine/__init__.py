"""Minimal reverse-mode autodiff engine on numpy arrays.

Dense tensors with an implicit computation graph, the layer set needed by
the denoiser (conv2d, attention, group norm, SiLU), and an AdamW optimizer.
Float32 by default; switch the whole engine to float64 with
``using_dtype(np.float64)`` for tight gradient checks.
"""

from gcdm.engine.tensor import (
    Tensor,
    concat,
    default_dtype,
    gradients,
    set_check_finite,
    set_default_dtype,
    using_dtype,
)
from gcdm.engine.functional import (
    attention,
    avg_pool2x,
    conv2d,
    conv2d_raw,
    gather_rows,
    group_norm,
    pad2d,
    repeat_axis,
    silu,
    softmax,
    tile_axis,
    upsample_nearest2x,
)
from gcdm.engine import nn, optim

__all__ = [
    "Tensor",
    "attention",
    "avg_pool2x",
    "concat",
    "conv2d",
    "conv2d_raw",
    "default_dtype",
    "gather_rows",
    "gradients",
    "group_norm",
    "nn",
    "optim",
    "pad2d",
    "repeat_axis",
    "set_check_finite",
    "set_default_dtype",
    "silu",
    "softmax",
    "tile_axis",
    "upsample_nearest2x",
    "using_dtype",
]
