"""Human-in-the-loop target tracker.

A four-state supervisor around a segmentation backend:

    Idle -> Init      operator requests initialization
    Init -> Track     three prompts (at least one positive) inside the window
    Init -> Idle      prompt window expires
    Track -> Correct  two right-clicks within the gesture window
    Correct -> Track  three prompts re-initialize, or the window expires

Propagation never pauses in Track or Correct, so a correction does not
interrupt the running track until its replacement is ready.  Losing the
mask is recoverable (the track is marked lost and the last centroid kept
for recovery); a non-empty mask whose confidence falls under the gate is
a hard termination back to Idle.

Incoming video goes through a single-element latest-frame buffer: ticks
always segment the freshest frame and a stale flag reports overrun.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .backends import MaskResult, Prompt
from .config import TrackerConfig
from .world.state import SensorFrame


class TrackerMode(enum.Enum):
    IDLE = "idle"
    INIT = "init"
    TRACK = "track"
    CORRECT = "correct"


@dataclass
class TargetTrack:
    frame_index: int
    mask: np.ndarray
    centroid: Optional[tuple]
    area_px: int
    confidence: float
    lost: bool
    health: dict = field(default_factory=dict)
    last_centroid: Optional[tuple] = None


@dataclass
class TrackerEvent:
    t: float
    name: str
    detail: dict = field(default_factory=dict)


class FrameBuffer:
    """Single-slot buffer: the newest frame wins, a stale flag marks reads
    with no fresh submission since the last one."""

    def __init__(self):
        self._frame: Optional[SensorFrame] = None
        self._fresh = False
        self._shape: Optional[tuple] = None

    def submit(self, frame: SensorFrame) -> None:
        shape = frame.target_ids.shape if frame.target_ids is not None else None
        if shape is None:
            raise ValueError("tracker frames need image channels")
        if self._shape is None:
            self._shape = shape
        elif shape != self._shape:
            raise ValueError(f"frame dimensions changed {self._shape} -> {shape}")
        self._frame = frame
        self._fresh = True

    def read(self) -> tuple:
        stale = not self._fresh
        self._fresh = False
        return self._frame, stale

    def peek(self) -> Optional[SensorFrame]:
        return self._frame


def mask_centroid(mask: np.ndarray) -> Optional[tuple]:
    ys, xs = np.nonzero(mask)
    if xs.size == 0:
        return None
    return (float(xs.mean()), float(ys.mean()))


def mask_components(mask: np.ndarray) -> int:
    from scipy import ndimage
    _, n = ndimage.label(mask)
    return int(n)


def health_signals(prev: Optional[TargetTrack], mask: np.ndarray,
                   confidence: float, width: int,
                   cfg: TrackerConfig) -> tuple[dict, list]:
    """Per-tick track health: relative area change, centroid displacement,
    confidence, fragmentation.  Returns (signals, alert reasons).  Alerts
    are advisory only; nothing here stops a track."""
    area = int(mask.sum())
    centroid = mask_centroid(mask)
    signals = {
        "area_px": area,
        "confidence": float(confidence),
        "components": mask_components(mask) if area else 0,
        "area_change": 0.0,
        "displacement_px": 0.0,
    }
    alerts = []
    if prev is not None and prev.centroid is not None and centroid is not None:
        prev_area = prev.area_px
        signals["area_change"] = abs(area - prev_area) / max(prev_area, 1)
        dx = centroid[0] - prev.centroid[0]
        dy = centroid[1] - prev.centroid[1]
        signals["displacement_px"] = math.hypot(dx, dy)
        if signals["area_change"] > cfg.area_change_alert:
            alerts.append("area_jump")
        if signals["displacement_px"] > cfg.displacement_alert_frac * width:
            alerts.append("centroid_jump")
    if confidence < cfg.confidence_alert:
        alerts.append("low_confidence")
    if signals["components"] > 1:
        alerts.append("fragmented")
    return signals, alerts


class Tracker:
    def __init__(self, backend, cfg: TrackerConfig):
        self.backend = backend
        self.cfg = cfg
        self.mode = TrackerMode.IDLE
        self.buffer = FrameBuffer()
        self.track: Optional[TargetTrack] = None
        self.events: list = []
        self._prompts: list = []
        self._window_deadline = -math.inf
        self._last_click_t = -math.inf
        self._pending_right_t = -math.inf
        self._last_centroid: Optional[tuple] = None
        self._frame_count = 0

    # -- operator inputs ---------------------------------------------------

    def submit_frame(self, frame: SensorFrame) -> None:
        self.buffer.submit(frame)

    def terminate(self, t: float, reason: str) -> None:
        """Hard stop from outside (behavior layer or operator): clear the
        track and return to Idle."""
        if self.mode is not TrackerMode.IDLE or self.track is not None:
            self._emit(t, "track_terminated", {"reason": reason})
        self.mode = TrackerMode.IDLE
        self.track = None
        self._prompts = []

    def request_init(self, t: float) -> None:
        self._expire_windows(t)
        if self.mode is TrackerMode.IDLE:
            self.mode = TrackerMode.INIT
            self._prompts = []
            self._window_deadline = t + self.cfg.prompt_window_s
            self._emit(t, "init_requested")
        else:
            self._emit(t, "init_request_ignored", {"mode": self.mode.value})

    def submit_click(self, x: int, y: int, button: str, t: float) -> None:
        """Route an operator click.  Left clicks are positive prompts,
        right clicks negative prompts or, in Track, the correction gesture."""
        frame = self.buffer.peek()
        if frame is not None:
            h, w = frame.target_ids.shape
            if not (0 <= x < w and 0 <= y < h):
                raise ValueError(f"click ({x}, {y}) outside {w}x{h} frame")
        if button not in ("left", "right"):
            raise ValueError(f"unknown button {button!r}")
        if t - self._last_click_t < self.cfg.debounce_s:
            self._emit(t, "click_debounced", {"button": button})
            return
        self._last_click_t = t
        self._expire_windows(t)

        if self.mode is TrackerMode.IDLE:
            self._emit(t, "click_ignored", {"mode": "idle", "button": button})
            return
        if self.mode is TrackerMode.TRACK:
            if button == "left":
                self._emit(t, "click_ignored", {"mode": "track", "button": button})
                return
            if t - self._pending_right_t <= self.cfg.gesture_window_s:
                self._pending_right_t = -math.inf
                self.mode = TrackerMode.CORRECT
                self._prompts = []
                self._window_deadline = t + self.cfg.prompt_window_s
                self._emit(t, "correction_requested")
            else:
                self._pending_right_t = t
            return
        # Init or Correct: accumulate prompts
        self._prompts.append(Prompt(x=x, y=y, positive=(button == "left")))
        self._emit(t, "prompt_added", {"positive": button == "left",
                                       "count": len(self._prompts)})
        if len(self._prompts) >= 3:
            self._try_init(t)

    # -- per-tick processing -----------------------------------------------

    def tick(self, t: float) -> tuple:
        """Advance the supervisor one video tick against the newest frame."""
        self._expire_windows(t)
        frame, stale = self.buffer.read()
        if frame is None or self.mode in (TrackerMode.IDLE, TrackerMode.INIT):
            return self.mode, self.track
        prev_mask = self.track.mask if self.track is not None else None
        try:
            res = self.backend.propagate(frame, prev_mask)
        except Exception as exc:  # backend fault: keep mode, flag lost
            if self.track is not None and not self.track.lost:
                self._emit(t, "backend_fault", {"error": str(exc)})
                self.track.lost = True
            return self.mode, self.track
        self._absorb(t, frame, res, stale)
        return self.mode, self.track

    def _absorb(self, t: float, frame: SensorFrame, res: MaskResult,
                stale: bool) -> None:
        self._frame_count += 1
        mask = res.mask
        was_lost = self.track.lost if self.track is not None else False
        if not mask.any():
            # recoverable loss: keep the last good centroid for recovery
            if not was_lost:
                self._emit(t, "track_lost", {})
            self.track = TargetTrack(
                frame_index=self._frame_count, mask=mask, centroid=None,
                area_px=0, confidence=res.confidence, lost=True,
                last_centroid=self._last_centroid)
            return
        signals, alerts = health_signals(
            None if was_lost else self.track, mask, res.confidence,
            frame.target_ids.shape[1], self.cfg)
        for reason in alerts:
            self._emit(t, "health_alert", {"reason": reason, "stale": stale})
        if res.confidence < self.cfg.confidence_gate:
            self._emit(t, "track_terminated", {"reason": "low_confidence",
                                               "confidence": res.confidence})
            self.track = None
            self.mode = TrackerMode.IDLE
            self._prompts = []
            return
        if was_lost:
            self._emit(t, "track_reacquired", {})
        centroid = mask_centroid(mask)
        self._last_centroid = centroid
        self.track = TargetTrack(
            frame_index=self._frame_count, mask=mask, centroid=centroid,
            area_px=int(mask.sum()), confidence=res.confidence, lost=False,
            health=signals, last_centroid=centroid)

    def _try_init(self, t: float) -> None:
        prompts = self._prompts
        self._prompts = []
        if not any(p.positive for p in prompts):
            self._emit(t, "prompts_discarded", {"reason": "no_positive"})
            return
        frame = self.buffer.peek()
        if frame is None:
            self._emit(t, "init_failed", {"reason": "no_frame"})
            return
        res = self.backend.init_track(frame, prompts)
        if not res.mask.any():
            self._emit(t, "init_failed", {"reason": "empty_mask"})
            return
        reinit = self.mode is TrackerMode.CORRECT
        self.mode = TrackerMode.TRACK
        self._frame_count += 1
        centroid = mask_centroid(res.mask)
        self._last_centroid = centroid
        self.track = TargetTrack(
            frame_index=self._frame_count, mask=res.mask, centroid=centroid,
            area_px=int(res.mask.sum()), confidence=res.confidence, lost=False,
            last_centroid=centroid)
        self._emit(t, "reinit_done" if reinit else "init_done",
                   {"area_px": self.track.area_px})

    def _expire_windows(self, t: float) -> None:
        if self.mode is TrackerMode.INIT and t > self._window_deadline:
            self.mode = TrackerMode.IDLE
            self._prompts = []
            self._emit(t, "init_timeout")
        elif self.mode is TrackerMode.CORRECT and t > self._window_deadline:
            # correction expires back into the running track
            self.mode = TrackerMode.TRACK
            self._prompts = []
            self._emit(t, "correction_timeout")

    def _emit(self, t: float, name: str, detail: Optional[dict] = None) -> None:
        self.events.append(TrackerEvent(t=t, name=name, detail=detail or {}))
