"""Quantitative evaluation: Frechet distance, IoU, pixel accuracy."""

from gcdm.metrics.evaluate import (
    REPORT_KEYS,
    evaluate,
    read_report,
    read_sweep,
    sweep_sigma,
    write_report,
    write_sweep,
)
from gcdm.metrics.frechet import EMBED_DIM, FrechetStats, feature_embed, frechet_distance
from gcdm.metrics.scores import iou, pixel_accuracy
from gcdm.metrics.segment import otsu_two_thresholds, segment_generated

__all__ = [
    "EMBED_DIM",
    "FrechetStats",
    "REPORT_KEYS",
    "evaluate",
    "feature_embed",
    "frechet_distance",
    "iou",
    "otsu_two_thresholds",
    "pixel_accuracy",
    "read_report",
    "read_sweep",
    "segment_generated",
    "sweep_sigma",
    "write_report",
    "write_sweep",
]
