"""Stereo obstacle pipeline: disparity to depth, hole filling, contour
extraction and temporal confirmation.

Depth here always means the forward (z) component of range, metres.  A
disparity of zero marks an invalid or out-of-range match and maps to +inf
depth until fill_invalid patches it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import ndimage

INVALID_DEPTH = math.inf


@dataclass
class ReprojectionQ:
    """4x4 disparity-to-depth matrix in the usual rectified-stereo layout.

    Only two entries matter for depth recovery: Q[2][3] (focal length term)
    and Q[3][2] (inverse baseline term), with z = Q23 / (Q32 * d).
    """
    q: np.ndarray

    @classmethod
    def from_camera(cls, focal_px: float, baseline_m: float,
                    cx: float, cy: float) -> "ReprojectionQ":
        m = np.zeros((4, 4))
        m[0, 0] = 1.0
        m[1, 1] = 1.0
        m[0, 3] = -cx
        m[1, 3] = -cy
        m[2, 3] = focal_px
        m[3, 2] = 1.0 / baseline_m
        return cls(q=m)

    @property
    def z_num(self) -> float:
        return float(self.q[2, 3])

    @property
    def z_den(self) -> float:
        return float(self.q[3, 2])


@dataclass
class DisparityMap:
    values: np.ndarray  # HxW float32, 0 = invalid
    focal_baseline: float  # f * B, px * m
    t: float = 0.0

    def __post_init__(self):
        if self.values.ndim != 2:
            raise ValueError("disparity map must be HxW")


@dataclass
class DepthMap:
    values: np.ndarray  # HxW float, +inf = invalid
    t: float = 0.0


@dataclass
class Contour:
    pixels: np.ndarray        # Nx2 (x, y) boundary path, traversal order
    area_fraction: float
    centroid: tuple
    min_depth: float


@dataclass
class ObstacleDetection:
    t: float
    frame_index: int
    contours: list = field(default_factory=list)
    min_distance: float = INVALID_DEPTH

    @property
    def centroids(self) -> list:
        return [c.centroid for c in self.contours]

    def main_contour(self) -> Optional[Contour]:
        if not self.contours:
            return None
        return max(self.contours, key=lambda c: c.area_fraction)


def disparity_to_depth(disp: DisparityMap, q: ReprojectionQ) -> DepthMap:
    """z = Q23 / (Q32 * d); zero disparity maps to +inf (invalid)."""
    d = disp.values
    out = np.full(d.shape, INVALID_DEPTH, dtype=float)
    ok = d > 0
    out[ok] = q.z_num / (q.z_den * d[ok])
    return DepthMap(values=out, t=disp.t)


def fill_invalid(depth: DepthMap, max_range_m: float = 10.0,
                 roi: Optional[tuple] = None) -> DepthMap:
    """Replace invalid pixels with the median of the finite depths in the
    ROI.  A fully invalid ROI falls back to max range, the conservative
    open-water answer.  roi is (x0, y0, x1, y1), half-open, None = full."""
    vals = depth.values.copy()
    if roi is None:
        region = vals
    else:
        x0, y0, x1, y1 = roi
        region = vals[y0:y1, x0:x1]
    finite = region[np.isfinite(region)]
    fill = float(np.median(finite)) if finite.size else float(max_range_m)
    region[~np.isfinite(region)] = fill
    if roi is not None:
        # pixels outside the ROI still need some finite value
        vals[~np.isfinite(vals)] = fill
    return DepthMap(values=vals, t=depth.t)


# 4-connectivity structuring element for component labelling
_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def detect_obstacles(depth: DepthMap, threshold_m: float = 3.0,
                     min_area_fraction: float = 0.03,
                     frame_index: int = 0) -> ObstacleDetection:
    """Threshold the depth map and report large connected components.

    Components are 4-connected regions with depth below the classification
    threshold; ones smaller than min_area_fraction of the image are noise
    and dropped.  min_distance is the closest depth inside any reported
    component, +inf when nothing qualifies.
    """
    vals = depth.values
    mask = vals < threshold_m
    total = vals.size
    det = ObstacleDetection(t=depth.t, frame_index=frame_index)
    if not mask.any():
        return det
    labels, n = ndimage.label(mask, structure=_CROSS)
    if n == 0:
        return det
    counts = np.bincount(labels.ravel())
    min_px = min_area_fraction * total
    for lab in range(1, n + 1):
        if counts[lab] < min_px:
            continue
        comp = labels == lab
        ys, xs = np.nonzero(comp)
        centroid = (float(xs.mean()), float(ys.mean()))
        min_depth = float(vals[comp].min())
        det.contours.append(Contour(
            pixels=trace_boundary(comp),
            area_fraction=counts[lab] / total,
            centroid=centroid,
            min_depth=min_depth,
        ))
        det.min_distance = min(det.min_distance, min_depth)
    return det


_MOORE = ((1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1))


def trace_boundary(mask: np.ndarray) -> np.ndarray:
    """Moore-neighbour trace of the outer boundary of a connected mask.

    Returns the boundary pixel path as Nx2 (x, y).  Single-pixel regions
    return that pixel alone.
    """
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return np.zeros((0, 2), dtype=int)
    start_i = np.lexsort((xs, ys))[0]
    start = (int(xs[start_i]), int(ys[start_i]))
    h, w = mask.shape

    def filled(px: tuple) -> bool:
        x, y = px
        return 0 <= x < w and 0 <= y < h and bool(mask[y, x])

    path = [start]
    prev_dir = 6  # came from below: scan starts pointing up-left of start
    cur = start
    for _ in range(4 * mask.size):
        found = False
        for k in range(8):
            d = (prev_dir + 6 + k) % 8  # backtrack then sweep clockwise
            nxt = (cur[0] + _MOORE[d][0], cur[1] + _MOORE[d][1])
            if filled(nxt):
                if nxt == start and len(path) > 1:
                    return np.array(path, dtype=int)
                path.append(nxt)
                prev_dir = d
                cur = nxt
                found = True
                break
        if not found:
            break  # isolated pixel
    return np.array(path, dtype=int)


class TemporalObstacleFilter:
    """Majority vote over a sliding window of detections.

    A detection chain is confirmed when at least `majority` of the last
    `window` frames contain a component whose centroid stays within the
    consistency radius of the previous frame in the chain.  The confirmed
    range is the median of the chained frames' min_distance values, +inf
    frames included, so a single glitchy near reading cannot trigger an
    avoidance maneuver and a single dropout cannot cancel one.
    """

    def __init__(self, window: int = 15, majority: int = 8,
                 consistency_radius_px: float = 30.0):
        if majority > window:
            raise ValueError("majority cannot exceed window")
        self.window = window
        self.majority = majority
        self.radius = consistency_radius_px
        self._history: list = []

    def reset(self) -> None:
        self._history.clear()

    def push(self, det: ObstacleDetection) -> "FilteredObstacles":
        self._history.append(det)
        if len(self._history) > self.window:
            self._history.pop(0)
        chained = self._chained_flags()
        count = sum(chained)
        confirmed = count >= self.majority
        if confirmed:
            # median over the full window: unchained or empty frames count
            # as +inf, and missing startup history pads with +inf too
            dists = [d.min_distance if c else INVALID_DEPTH
                     for d, c in zip(self._history, chained)]
            dists += [INVALID_DEPTH] * (self.window - len(dists))
            med = float(np.median(dists))
        else:
            med = INVALID_DEPTH
        latest = self._history[-1]
        return FilteredObstacles(
            t=latest.t,
            frame_index=latest.frame_index,
            confirmed=confirmed,
            min_distance=med,
            votes=count,
            latest=latest,
        )

    def _chained_flags(self) -> list:
        """Flag frames whose detection chains to the previous flagged one."""
        flags = []
        last_centroid = None
        for det in self._history:
            main = det.main_contour()
            if main is None:
                flags.append(False)
                continue
            if last_centroid is None:
                flags.append(True)
            else:
                dx = main.centroid[0] - last_centroid[0]
                dy = main.centroid[1] - last_centroid[1]
                flags.append(math.hypot(dx, dy) <= self.radius)
            if flags[-1]:
                last_centroid = main.centroid
        return flags


@dataclass
class FilteredObstacles:
    t: float
    frame_index: int
    confirmed: bool
    min_distance: float
    votes: int
    latest: ObstacleDetection
