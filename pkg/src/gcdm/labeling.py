"""4-connected component labeling.

One connectivity rule is used everywhere in this package: foreground
components, size-zone regions, and segmentation cleanup all treat pixels as
neighbors only across shared edges.
"""

from __future__ import annotations

import numpy as np

NEIGHBORS_4 = ((-1, 0), (1, 0), (0, -1), (0, 1))


def label_components(mask: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 4-connected foreground components 1..n; background stays 0."""
    mask = np.asarray(mask) > 0
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    current = 0
    stack: list[tuple[int, int]] = []
    for sy, sx in zip(*np.nonzero(mask)):
        if labels[sy, sx]:
            continue
        current += 1
        labels[sy, sx] = current
        stack.append((sy, sx))
        while stack:
            y, x = stack.pop()
            for dy, dx in NEIGHBORS_4:
                ny, nx = y + dy, x + dx
                if 0 <= ny < h and 0 <= nx < w and mask[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = current
                    stack.append((ny, nx))
    return labels, current


def component_sizes(labels: np.ndarray, count: int) -> np.ndarray:
    """Pixel count per label, index 0 unused."""
    return np.bincount(labels.ravel(), minlength=count + 1)


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Binary mask of the largest 4-connected component; raises if empty."""
    labels, count = label_components(mask)
    if count == 0:
        raise ValueError("no foreground pixels")
    sizes = component_sizes(labels, count)
    return labels == int(sizes[1:].argmax() + 1)
