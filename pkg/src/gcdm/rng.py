"""Deterministic random streams.

All stochastic code in this package takes an explicit integer seed and a
stream name, and derives a counter-based Philox generator from them. There
is no global RNG state anywhere; two calls with the same (seed, tags) give
independent generators that produce identical sequences.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(seed: int, *tags) -> np.random.Generator:
    """Philox generator for the substream named by ``tags`` under ``seed``.

    Tags may be ints or strings; they are hashed together with the seed so
    distinct names give statistically independent streams.
    """
    material = repr((int(seed),) + tuple(tags)).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    key = int.from_bytes(digest[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))


def spawn_seed(seed: int, *tags) -> int:
    """A derived 63-bit seed, for handing off to a worker or sub-task."""
    material = repr((int(seed),) + tuple(tags)).encode("utf-8")
    digest = hashlib.sha256(material).digest()
    return int.from_bytes(digest[16:24], "little") >> 1
