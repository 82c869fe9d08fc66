"""Reactive behavior layer: a fixed-priority arbiter over gait commands.

Priority, highest first: EndTrack, Avoid, Servo, Recover, then the default
arm (Explore, or Hold for scripted station-keeping runs).  Exactly one
behavior owns the control vector each tick; depth keeping is folded into
Avoid, Explore and Hold, while Servo steers pitch from the tracked
centroid alone and relies on the depth limit to end runaway descents.

Sign conventions match the gait layer: negative pitch dives, positive yaw
turns right.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import BehaviorConfig
from .gait import ControlVector
from .perception import FilteredObstacles
from .world import geom


class BehaviorMode(enum.Enum):
    EXPLORE = "explore"
    HOLD = "hold"
    SERVO = "servo"
    RECOVER = "recover"
    AVOID = "avoid"
    END_TRACK = "end_track"


@dataclass
class BehaviorContext:
    """Everything the arbiter reads for one decision, no hidden state."""
    t: float
    depth: float
    depth_rate: float
    yaw: float
    heading_setpoint: float
    image_size: tuple  # (w, h)
    tracking: bool = False
    track_lost: bool = False
    centroid: Optional[tuple] = None
    last_centroid: Optional[tuple] = None
    time_since_loss: float = math.inf
    obstacles: Optional[FilteredObstacles] = None
    avoidance_enabled: bool = True
    avoid_active: bool = False
    avoid_dir: int = 1
    operator_stop: bool = False
    hold_default: bool = False


@dataclass
class BehaviorOutput:
    mode: BehaviorMode
    u: ControlVector
    reason: str = ""
    avoid_active: bool = False
    avoid_dir: int = 1


def servo_command(centroid: tuple, image_size: tuple, cruise: float) -> ControlVector:
    """Proportional visual servo on the mask centroid.

    Pixel coordinates are bottom-up, so a target low in the image gives
    y < h/2 and a negative (dive) pitch command.
    """
    w, h = image_size
    x, y = centroid
    return ControlVector(
        freq=cruise,
        roll=0.0,
        pitch=2.0 * y / h - 1.0,
        yaw=2.0 * x / w - 1.0,
    )


def depth_hold_command(depth: float, setpoint: float, depth_rate: float,
                       kp: float, kd: float) -> float:
    """PD pitch contribution for depth keeping, clamped to [-1, 1].

    Error is depth minus setpoint: too shallow gives a negative (dive)
    contribution, too deep a positive (climb) one.
    """
    u = kp * (depth - setpoint) + kd * depth_rate
    return min(1.0, max(-1.0, u))


def avoidance_turn(filtered: FilteredObstacles, image_width: int) -> int:
    """Turn direction away from the dominant confirmed contour: +1 right,
    -1 left, ties break right."""
    main = filtered.latest.main_contour() if filtered.latest else None
    if main is None:
        return 1
    offset = 2.0 * main.centroid[0] / image_width - 1.0
    if offset < 0:
        return 1   # obstacle on the left, turn right
    if offset > 0:
        return -1
    return 1


class BehaviorEngine:
    """Owns the little state arbitration needs between ticks: the explore
    heading setpoint and the latched avoidance maneuver."""

    def __init__(self, cfg: BehaviorConfig, rng: np.random.Generator,
                 initial_yaw: float = 0.0, hold_default: bool = False,
                 depth_setpoint: Optional[float] = None):
        self.cfg = cfg
        self.hold_default = hold_default
        self.depth_setpoint = cfg.depth_setpoint_m if depth_setpoint is None else depth_setpoint
        # a touch of seeded heading jitter so repeated explore runs fan out
        self.heading_setpoint = geom.wrap_angle(initial_yaw + rng.uniform(-0.1, 0.1))
        self.avoid_active = False
        self.avoid_dir = 1
        self.maneuvers: list = []  # (t_trigger, t_exit or None)

    def step(self, ctx: BehaviorContext) -> BehaviorOutput:
        ctx.avoid_active = self.avoid_active
        ctx.avoid_dir = self.avoid_dir
        ctx.hold_default = self.hold_default
        ctx.heading_setpoint = self.heading_setpoint
        out = arbitrate(ctx, self.cfg, self.depth_setpoint)
        if out.avoid_active and not self.avoid_active:
            self.maneuvers.append([ctx.t, None])
        elif self.avoid_active and not out.avoid_active:
            if self.maneuvers and self.maneuvers[-1][1] is None:
                self.maneuvers[-1][1] = ctx.t
            # resume exploring along whatever heading the turn left us on
            self.heading_setpoint = ctx.yaw
        self.avoid_active = out.avoid_active
        self.avoid_dir = out.avoid_dir
        return out


def arbitrate(ctx: BehaviorContext, cfg: BehaviorConfig,
              depth_setpoint: Optional[float] = None) -> BehaviorOutput:
    """Pure fixed-priority arbitration; one winner per tick."""
    setpoint = cfg.depth_setpoint_m if depth_setpoint is None else depth_setpoint
    hold_pitch = depth_hold_command(ctx.depth, setpoint, ctx.depth_rate,
                                    cfg.depth_kp, cfg.depth_kd)

    # 1. hard stops while a track is active
    if ctx.tracking and (ctx.depth > cfg.max_track_depth_m or ctx.operator_stop):
        reason = "operator_stop" if ctx.operator_stop else "depth_limit"
        u = ControlVector(freq=cfg.cruise_freq, pitch=hold_pitch,
                          yaw=_heading_hold(ctx, cfg))
        return BehaviorOutput(mode=BehaviorMode.END_TRACK, u=u, reason=reason)

    # 2. obstacle avoidance, latched until the confirmed range clears
    if ctx.avoidance_enabled and ctx.obstacles is not None:
        dist = ctx.obstacles.min_distance
        stay = ctx.avoid_active and dist <= cfg.avoid_clear_m
        trigger = (not ctx.avoid_active and ctx.obstacles.confirmed
                   and dist < cfg.avoid_clear_m)
        if stay or trigger:
            direction = ctx.avoid_dir if ctx.avoid_active else \
                avoidance_turn(ctx.obstacles, ctx.image_size[0])
            u = ControlVector(freq=cfg.cruise_freq,
                              roll=cfg.avoid_roll_sign * direction,
                              pitch=hold_pitch,
                              yaw=float(direction))
            return BehaviorOutput(mode=BehaviorMode.AVOID, u=u,
                                  reason=f"min_distance={dist:.2f}",
                                  avoid_active=True, avoid_dir=direction)

    # 3. visual servo on a live track
    if ctx.tracking and not ctx.track_lost and ctx.centroid is not None:
        u = servo_command(ctx.centroid, ctx.image_size, cfg.cruise_freq)
        return BehaviorOutput(mode=BehaviorMode.SERVO, u=u)

    # 4. short memory-based recovery after a lost mask
    if (ctx.tracking and ctx.track_lost and ctx.last_centroid is not None
            and ctx.time_since_loss <= cfg.recovery_timeout_s):
        u = servo_command(ctx.last_centroid, ctx.image_size, cfg.cruise_freq)
        return BehaviorOutput(mode=BehaviorMode.RECOVER, u=u,
                              reason=f"loss_age={ctx.time_since_loss:.1f}")

    # 5. default arm
    u = ControlVector(freq=cfg.cruise_freq, pitch=hold_pitch,
                      yaw=_heading_hold(ctx, cfg))
    mode = BehaviorMode.HOLD if ctx.hold_default else BehaviorMode.EXPLORE
    return BehaviorOutput(mode=mode, u=u)


def _heading_hold(ctx: BehaviorContext, cfg: BehaviorConfig) -> float:
    # positive yaw error (setpoint CCW of nose) needs a left turn, which is
    # a negative yaw command
    err = geom.wrap_angle(ctx.heading_setpoint - ctx.yaw)
    return min(1.0, max(-1.0, -cfg.heading_kp * err))
