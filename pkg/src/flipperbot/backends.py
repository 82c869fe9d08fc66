"""Segmentation backends for the human-in-the-loop tracker.

The oracle backend reads the simulator's per-pixel target identity channel:
it learns which target the operator clicked and segments it perfectly from
then on.  The fault wrappers distort an inner backend's output to reproduce
the failure modes real video segmenters exhibit around glass and seams, so
the supervision logic can be exercised deterministically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .world.state import SensorFrame


@dataclass
class MaskResult:
    mask: np.ndarray  # HxW bool
    confidence: float


@dataclass(frozen=True)
class Prompt:
    x: int
    y: int
    positive: bool


class SegmentationBackend(Protocol):
    def init_track(self, frame: SensorFrame, prompts: list) -> MaskResult: ...
    def propagate(self, frame: SensorFrame, prev_mask: np.ndarray) -> MaskResult: ...


class OracleBackend:
    """Perfect segmentation driven by the target identity channel."""

    def __init__(self):
        self.target_id: int = 0

    def init_track(self, frame: SensorFrame, prompts: list) -> MaskResult:
        ids = frame.target_ids
        hits = []
        for p in prompts:
            if not p.positive:
                continue
            tid = int(ids[p.y, p.x])
            if tid > 0:
                hits.append(tid)
        if not hits:
            return MaskResult(mask=np.zeros(ids.shape, dtype=bool), confidence=0.0)
        # majority vote over the positive clicks
        self.target_id = int(np.bincount(hits).argmax())
        return self.propagate(frame, None)

    def propagate(self, frame: SensorFrame, prev_mask) -> MaskResult:
        ids = frame.target_ids
        mask = ids == self.target_id if self.target_id > 0 else np.zeros(ids.shape, dtype=bool)
        conf = 1.0 if mask.any() else 0.0
        return MaskResult(mask=mask, confidence=conf)


class MirrorDuplicateBackend:
    """Reflects the mask about a vertical plane in the image, merging the
    reflection into the mask when the two come within a pixel gap.  Mimics
    a segmenter latching onto a glass-wall reflection."""

    def __init__(self, inner, plane_x: int, gap_px: int = 40):
        self.inner = inner
        self.plane_x = int(plane_x)
        self.gap_px = int(gap_px)

    def init_track(self, frame, prompts):
        return self._distort(self.inner.init_track(frame, prompts))

    def propagate(self, frame, prev_mask):
        return self._distort(self.inner.propagate(frame, prev_mask))

    def _distort(self, res: MaskResult) -> MaskResult:
        mask = res.mask
        if not mask.any():
            return res
        xs = np.nonzero(mask.any(axis=0))[0]
        # nearest approach between the object and its reflection
        gap = 2 * int(np.min(np.abs(xs - self.plane_x)))
        if gap > self.gap_px:
            return res
        w = mask.shape[1]
        reflected = np.zeros_like(mask)
        src = np.nonzero(mask)
        rx = 2 * self.plane_x - src[1]
        ok = (rx >= 0) & (rx < w)
        reflected[src[0][ok], rx[ok]] = True
        return MaskResult(mask=mask | reflected, confidence=res.confidence)


class ConfidenceCollapseBackend:
    """Confidence decays geometrically while the mask sits in a dark part
    of the image, the way matching scores die in unlit corners."""

    def __init__(self, inner, dark_intensity: int = 45, decay: float = 0.55):
        self.inner = inner
        self.dark_intensity = dark_intensity
        self.decay = decay
        self._dark_ticks = 0

    def init_track(self, frame, prompts):
        self._dark_ticks = 0
        return self._distort(frame, self.inner.init_track(frame, prompts))

    def propagate(self, frame, prev_mask):
        return self._distort(frame, self.inner.propagate(frame, prev_mask))

    def _distort(self, frame, res: MaskResult) -> MaskResult:
        if res.mask.any():
            mean_i = float(frame.intensity[res.mask].mean())
            if mean_i < self.dark_intensity:
                self._dark_ticks += 1
            else:
                self._dark_ticks = 0
        conf = res.confidence * (self.decay ** self._dark_ticks)
        return MaskResult(mask=res.mask, confidence=conf)


class SeamSplitBackend:
    """Erases a vertical band where tank viewport seams distort the image,
    fragmenting any mask that spans it."""

    def __init__(self, inner, seam_x: int, gap_px: int = 6):
        self.inner = inner
        self.seam_x = int(seam_x)
        self.gap_px = int(gap_px)

    def init_track(self, frame, prompts):
        return self._distort(self.inner.init_track(frame, prompts))

    def propagate(self, frame, prev_mask):
        return self._distort(self.inner.propagate(frame, prev_mask))

    def _distort(self, res: MaskResult) -> MaskResult:
        mask = res.mask
        if not mask.any():
            return res
        x0, x1 = self.seam_x, self.seam_x + self.gap_px
        cols = np.nonzero(mask.any(axis=0))[0]
        if cols[0] < x0 and cols[-1] >= x1:
            mask = mask.copy()
            mask[:, x0:x1] = False
            return MaskResult(mask=mask, confidence=res.confidence)
        return res
