"""World state containers for the reduced-order vehicle simulation.

World frame: x east, y north, z up with the water surface at z = 0, so a
robot at depth 1.1 m sits at z = -1.1.  The tank is the axis-aligned box
[0, Lx] x [0, Ly] x [-depth, 0].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from ..config import N_JOINTS
from . import geom

# hard caps on scripted target speed, m/s, by kind
TARGET_SPEED_LIMITS = {
    "toy": 2.0,
    "turtle": 1.0,
    "stingray": 2.5,
    "barracuda": 3.0,
    "diver": 1.5,
}

# rendered grayscale for each surface class
KIND_INTENSITY = {
    "toy": 230,
    "turtle": 150,
    "stingray": 160,
    "barracuda": 170,
    "diver": 180,
    "coral": 120,
    "rock": 100,
    "pillar": 90,
}


@dataclass
class WallMaterial:
    intensity: int = 60
    # 1.0 means the wall behaves like glass: mirror-like at grazing angles
    reflectivity: float = 0.0


@dataclass
class Tank:
    size: np.ndarray  # Lx, Ly, depth
    wall_x0: WallMaterial = field(default_factory=WallMaterial)
    wall_x1: WallMaterial = field(default_factory=WallMaterial)
    wall_y0: WallMaterial = field(default_factory=WallMaterial)
    wall_y1: WallMaterial = field(default_factory=WallMaterial)
    floor: WallMaterial = field(default_factory=lambda: WallMaterial(intensity=140))
    surface: WallMaterial = field(default_factory=lambda: WallMaterial(intensity=200, reflectivity=1.0))

    @property
    def lo(self) -> np.ndarray:
        return np.array([0.0, 0.0, -float(self.size[2])])

    @property
    def hi(self) -> np.ndarray:
        return np.array([float(self.size[0]), float(self.size[1]), 0.0])

    def wall_material(self, axis: int, side: int) -> WallMaterial:
        if axis == 0:
            return self.wall_x1 if side > 0 else self.wall_x0
        if axis == 1:
            return self.wall_y1 if side > 0 else self.wall_y0
        return self.surface if side > 0 else self.floor


@dataclass
class Obstacle:
    kind: str
    shape: str  # sphere | box
    center: np.ndarray
    radius: float = 0.0
    half_extents: Optional[np.ndarray] = None

    def intensity(self) -> int:
        return KIND_INTENSITY.get(self.kind, 110)


@dataclass
class GlassPane:
    """Transparent interior divider: attenuates what is seen through it and
    returns nothing to the stereo matcher."""
    axis: int  # 0 = plane of constant x, 1 = constant y
    value: float
    transmission: float = 0.4


@dataclass
class TargetAgent:
    target_id: int
    kind: str
    radius: float
    script: dict
    pos: np.ndarray = field(default_factory=lambda: np.zeros(3))
    intensity: int = 0

    def __post_init__(self):
        if self.intensity == 0:
            self.intensity = KIND_INTENSITY.get(self.kind, 200)

    def position_at(self, t: float) -> np.ndarray:
        return target_position(self.script, t)


def _unit_heading(heading_deg: float) -> np.ndarray:
    h = math.radians(heading_deg)
    return np.array([math.cos(h), math.sin(h), 0.0])


def target_position(script: dict, t: float) -> np.ndarray:
    """Closed-form scripted position, deterministic in t."""
    kind = script["type"]
    if kind == "stationary":
        return np.asarray(script["pos"], dtype=float).copy()
    if kind == "waypoints":
        pts = [np.asarray(p, dtype=float) for p in script["points"]]
        speed = float(script["speed"])
        legs = [np.linalg.norm(pts[i + 1] - pts[i]) for i in range(len(pts) - 1)]
        total = sum(legs)
        if total == 0 or speed == 0:
            return pts[0].copy()
        s = speed * t
        if script.get("loop", True):
            s = s % total
        else:
            s = min(s, total)
        for i, leg in enumerate(legs):
            if s <= leg or i == len(legs) - 1:
                f = 0.0 if leg == 0 else min(1.0, s / leg)
                return pts[i] + f * (pts[i + 1] - pts[i])
            s -= leg
        return pts[-1].copy()
    if kind == "sine":
        start = np.asarray(script["start"], dtype=float)
        fwd = _unit_heading(script.get("heading_deg", 0.0))
        lat = np.array([-fwd[1], fwd[0], 0.0])
        drift = float(script.get("drift_speed", 0.0))
        amp = float(script.get("lateral_amplitude", 0.0))
        period = float(script.get("period_s", 10.0))
        vamp = float(script.get("vertical_amplitude", 0.0))
        vperiod = float(script.get("vertical_period_s", period))
        p = start + fwd * drift * t
        p = p + lat * amp * math.sin(2.0 * math.pi * t / period)
        p[2] += vamp * math.sin(2.0 * math.pi * t / vperiod)
        return p
    if kind == "burst_exit":
        start = np.asarray(script["start"], dtype=float)
        fwd = _unit_heading(script.get("heading_deg", 0.0))
        lat = np.array([-fwd[1], fwd[0], 0.0]) * float(script.get("burst_direction", 1))
        cruise = float(script.get("cruise_speed", 0.1))
        t_burst = float(script["burst_time"])
        v_burst = float(script["burst_speed"])
        dur = float(script["burst_duration"])
        tail = float(script.get("tail_speed", 0.15))
        p = start + fwd * cruise * min(t, t_burst)
        if t > t_burst:
            dt_b = min(t - t_burst, dur)
            p = p + lat * v_burst * dt_b
            if t > t_burst + dur:
                p = p + lat * tail * (t - t_burst - dur)
        return p
    raise ValueError(f"unknown target script type {kind!r}")


def script_max_speed(script: dict) -> float:
    kind = script["type"]
    if kind == "stationary":
        return 0.0
    if kind == "waypoints":
        return float(script["speed"])
    if kind == "sine":
        drift = abs(float(script.get("drift_speed", 0.0)))
        lat = 2.0 * math.pi * abs(float(script.get("lateral_amplitude", 0.0))) / float(script.get("period_s", 10.0))
        vert = 2.0 * math.pi * abs(float(script.get("vertical_amplitude", 0.0))) / float(script.get("vertical_period_s", script.get("period_s", 10.0)))
        return math.sqrt(drift * drift + lat * lat) + vert
    if kind == "burst_exit":
        return max(abs(float(script.get("cruise_speed", 0.1))), abs(float(script["burst_speed"])))
    raise ValueError(f"unknown target script type {kind!r}")


@dataclass
class Contact:
    t: float
    kind: str  # obstacle kind, or wall / glass_wall / floor / surface / target
    point: np.ndarray


@dataclass
class WorldState:
    time: float
    pos: np.ndarray
    quat: np.ndarray
    vel: np.ndarray      # body frame
    angvel: np.ndarray   # body frame
    q: np.ndarray        # joint positions
    qd: np.ndarray       # joint velocities
    tank: Tank
    obstacles: list
    targets: list
    glass_panes: list = field(default_factory=list)
    last_effort: np.ndarray = field(default_factory=lambda: np.zeros(N_JOINTS))
    contacts: list = field(default_factory=list)
    fault_latched: bool = False
    scenario_name: str = ""
    camera_x_m: float = 0.26

    @property
    def depth(self) -> float:
        return -float(self.pos[2])

    def yaw(self) -> float:
        return geom.yaw_of(self.quat)

    def pitch(self) -> float:
        return geom.pitch_of(self.quat)

    def roll(self) -> float:
        return geom.roll_of(self.quat)

    def snapshot(self) -> dict:
        """Plain-python dump used for hashing and determinism checks."""
        return {
            "time": self.time,
            "pos": self.pos.tolist(),
            "quat": self.quat.tolist(),
            "vel": self.vel.tolist(),
            "angvel": self.angvel.tolist(),
            "q": self.q.tolist(),
            "qd": self.qd.tolist(),
            "targets": [t.pos.tolist() for t in self.targets],
            "contacts": [[c.t, c.kind] for c in self.contacts],
        }


@dataclass
class Imu:
    quat: np.ndarray
    angvel: np.ndarray
    accel: np.ndarray


@dataclass
class SensorFrame:
    t: float
    frame_index: int
    depth_m: float
    imu: Imu
    disparity: Any = None    # perception.DisparityMap when a camera is rendered
    intensity: Any = None    # uint8 HxW, rows stored bottom-up
    target_ids: Any = None   # int16 HxW, 0 = no target
