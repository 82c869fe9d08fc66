"""Lightweight onboard target detector.

A fixed intensity-signature blob finder sized for the vehicle computer:
threshold the grayscale image to the trained band, take 4-connected
components inside the area gates and score them by brightness.  No
learning happens at runtime; the band is the model.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .config import DetectorConfig

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


@dataclass
class Detection:
    centroid: tuple
    area_fraction: float
    score: float


def detect(intensity: np.ndarray, cfg: DetectorConfig) -> list:
    """Detections sorted by score, best first."""
    img = intensity
    mask = (img >= cfg.intensity_min) & (img <= cfg.intensity_max)
    if not mask.any():
        return []
    labels, n = ndimage.label(mask, structure=_CROSS)
    total = img.size
    out = []
    counts = np.bincount(labels.ravel())
    for lab in range(1, n + 1):
        frac = counts[lab] / total
        if frac < cfg.min_area_fraction or frac > cfg.max_area_fraction:
            continue
        comp = labels == lab
        ys, xs = np.nonzero(comp)
        mean_i = float(img[comp].mean())
        score = min(1.0, mean_i / 180.0)
        out.append(Detection(
            centroid=(float(xs.mean()), float(ys.mean())),
            area_fraction=float(frac),
            score=score,
        ))
    out.sort(key=lambda d: d.score, reverse=True)
    return out


def best_detection(detections: list, cfg: DetectorConfig):
    for det in detections:
        if det.score >= cfg.score_floor:
            return det
    return None
