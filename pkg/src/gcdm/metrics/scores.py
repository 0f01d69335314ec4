"""Overlap scores between predicted and reference masks."""

from __future__ import annotations

import numpy as np

from gcdm.maskproc import TriMask


def iou(predicted: TriMask, reference: TriMask, class_index: int) -> float:
    """Intersection over union for one class channel; empty/empty is 1."""
    p = predicted.channels[class_index] > 0
    g = reference.channels[class_index] > 0
    if p.shape != g.shape:
        raise ValueError(f"mask shapes differ: {p.shape} vs {g.shape}")
    union = (p | g).sum()
    if union == 0:
        return 1.0
    return float((p & g).sum() / union)


def pixel_accuracy(predicted: TriMask, reference: TriMask) -> float:
    """Fraction of pixels assigned to the same class."""
    p = predicted.channels.argmax(axis=0)
    g = reference.channels.argmax(axis=0)
    if p.shape != g.shape:
        raise ValueError(f"mask shapes differ: {p.shape} vs {g.shape}")
    return float((p == g).mean())
