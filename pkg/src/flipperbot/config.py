"""Configuration loading and validation.

A single YAML file configures every subsystem: gait table, controller gains,
plant constants, camera model, perception thresholds, tracker timing and
behavior setpoints.  Loading is strict: unknown keys and missing keys are
both errors, so a typo in a config never silently falls back to a default.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, fields
from importlib import resources
from typing import Any, Optional

import numpy as np
import yaml

N_JOINTS = 10
JOINT_NAMES = (
    "fl_stroke", "fl_sweep", "fl_distal",
    "fr_stroke", "fr_sweep", "fr_distal",
    "rl_pitch", "rl_yaw", "rr_pitch", "rr_yaw",
)
# index groups, used by the modulation laws and the plant
LEFT_FRONT = (0, 1, 2)
RIGHT_FRONT = (3, 4, 5)
STROKE_JOINTS = (0, 3)
DISTAL_JOINTS = (2, 5)
REAR_PITCH_JOINTS = (6, 8)
REAR_YAW_JOINTS = (7, 9)


class ConfigError(ValueError):
    """Raised for malformed or inconsistent configuration input."""


def _require_mapping(raw: Any, where: str) -> dict:
    if not isinstance(raw, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(raw).__name__}")
    return raw


def _build(cls, raw: Any, where: str):
    """Construct a config dataclass from a dict, rejecting unknown keys."""
    raw = _require_mapping(raw, where)
    names = {f.name for f in fields(cls)}
    unknown = set(raw) - names
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = names - set(raw)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    return cls(**raw)


def _as_vec(value, n: int, where: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.shape != (n,):
        raise ConfigError(f"{where}: expected {n} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{where}: non-finite value")
    return arr


@dataclass(frozen=True)
class RobotConfig:
    mass_kg: float
    body_length_m: float
    mass_eff_kg: list
    inertia_kgm2: list
    flipper_x_m: float
    flipper_y_m: float
    rear_x_m: float
    camera_x_m: float
    collision_radius_m: float

    def __post_init__(self):
        if self.mass_kg <= 0 or self.body_length_m <= 0:
            raise ConfigError("robot: mass and body length must be positive")
        if self.collision_radius_m <= 0:
            raise ConfigError("robot: collision radius must be positive")
        _as_vec(self.mass_eff_kg, 3, "robot.mass_eff_kg")
        _as_vec(self.inertia_kgm2, 3, "robot.inertia_kgm2")


@dataclass(frozen=True)
class GaitSpec:
    """Per-joint sinusoid table plus the shared base frequency.

    Each joint follows  q_i = offset_i + amplitude_i * sin(phase_acc + phase_i)
    where phase_acc is the accumulated gait phase shared by all joints.
    """
    f0_hz: float
    family: str
    names: tuple
    amplitudes: np.ndarray
    phases: np.ndarray
    offsets: np.ndarray
    limits_lo: np.ndarray
    limits_hi: np.ndarray

    def __post_init__(self):
        if self.f0_hz <= 0:
            raise ConfigError("gait: f0_hz must be positive")
        if self.family not in ("forward", "reverse"):
            raise ConfigError(f"gait: unknown family {self.family!r}")
        for name in ("amplitudes", "phases", "offsets", "limits_lo", "limits_hi"):
            _as_vec(getattr(self, name), len(self.names), f"gait.{name}")
        if np.any(self.amplitudes < 0):
            raise ConfigError("gait: amplitudes must be non-negative")
        if np.any(self.limits_lo >= self.limits_hi):
            raise ConfigError("gait: joint limit interval is empty")
        # a joint commanded at full swing must stay inside its mechanical range
        over = (self.offsets + self.amplitudes > self.limits_hi + 1e-12) | (
            self.offsets - self.amplitudes < self.limits_lo - 1e-12)
        if np.any(over):
            bad = [self.names[i] for i in np.flatnonzero(over)]
            raise ConfigError(f"gait: offset+amplitude exceeds limits for {bad}")

    def reverse(self, amplitude_scale: float = 0.5) -> "GaitSpec":
        """Derived reverse-swimming family: mirrored phases, scaled amplitudes,
        distal offsets flipped so the blade bites in the opposite direction."""
        offsets = self.offsets.copy()
        for j in DISTAL_JOINTS:
            offsets[j] = -offsets[j]
        return GaitSpec(
            f0_hz=self.f0_hz,
            family="reverse",
            names=self.names,
            amplitudes=self.amplitudes * amplitude_scale,
            phases=-self.phases,
            offsets=offsets,
            limits_lo=self.limits_lo.copy(),
            limits_hi=self.limits_hi.copy(),
        )


def gait_spec_from_dict(raw: dict, where: str = "gait") -> "GaitConfig":
    raw = _require_mapping(raw, where)
    expected = {"f0_hz", "reverse_amplitude_scale", "joints"}
    unknown = set(raw) - expected
    if unknown:
        raise ConfigError(f"{where}: unknown keys {sorted(unknown)}")
    missing = expected - set(raw)
    if missing:
        raise ConfigError(f"{where}: missing keys {sorted(missing)}")
    joints = raw["joints"]
    if not isinstance(joints, list) or len(joints) != N_JOINTS:
        raise ConfigError(f"{where}.joints: expected {N_JOINTS} entries")
    names, amps, phases, offsets, los, his = [], [], [], [], [], []
    for i, j in enumerate(joints):
        j = _require_mapping(j, f"{where}.joints[{i}]")
        extra = set(j) - {"name", "amplitude", "phase", "offset", "limit"}
        if extra:
            raise ConfigError(f"{where}.joints[{i}]: unknown keys {sorted(extra)}")
        names.append(str(j["name"]))
        amps.append(float(j["amplitude"]))
        phases.append(float(j["phase"]))
        offsets.append(float(j["offset"]))
        lo, hi = j["limit"]
        los.append(float(lo))
        his.append(float(hi))
    if tuple(names) != JOINT_NAMES:
        raise ConfigError(f"{where}: joint names/order must be {JOINT_NAMES}")
    spec = GaitSpec(
        f0_hz=float(raw["f0_hz"]), family="forward", names=tuple(names),
        amplitudes=np.array(amps), phases=np.array(phases),
        offsets=np.array(offsets), limits_lo=np.array(los), limits_hi=np.array(his),
    )
    return GaitConfig(spec=spec, reverse_amplitude_scale=float(raw["reverse_amplitude_scale"]))


@dataclass(frozen=True)
class GaitConfig:
    spec: GaitSpec
    reverse_amplitude_scale: float


@dataclass(frozen=True)
class ModulationLimits:
    theta_max_pitch_rad: float
    theta_max_roll_rad: float

    def __post_init__(self):
        if self.theta_max_pitch_rad < 0 or self.theta_max_roll_rad < 0:
            raise ConfigError("modulation: limits must be non-negative")


@dataclass(frozen=True)
class ControlConfig:
    rate_hz: float
    kp: list
    kd: list
    effort_limit_nm: list
    body_pitch_range_rad: list
    rear_joint_range_rad: list
    stabilization_amplitude_rad: float

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ConfigError("control: rate_hz must be positive")
        for name in ("kp", "kd", "effort_limit_nm"):
            v = _as_vec(getattr(self, name), N_JOINTS, f"control.{name}")
            if np.any(v < 0):
                raise ConfigError(f"control.{name}: negative gain or limit")
        _as_vec(self.body_pitch_range_rad, 2, "control.body_pitch_range_rad")
        _as_vec(self.rear_joint_range_rad, 2, "control.rear_joint_range_rad")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    def kp_vec(self) -> np.ndarray:
        return np.asarray(self.kp, dtype=float)

    def kd_vec(self) -> np.ndarray:
        return np.asarray(self.kd, dtype=float)

    def effort_vec(self) -> np.ndarray:
        return np.asarray(self.effort_limit_nm, dtype=float)


@dataclass(frozen=True)
class PlantConfig:
    joint_inertia_kgm2: float
    joint_damping_nms: float
    k_thrust: float
    k_heave: float
    k_rear: float
    k_restore: float
    drag_linear_nsm: list
    drag_angular_nms: list
    hotel_load_w: float

    def __post_init__(self):
        if self.joint_inertia_kgm2 <= 0:
            raise ConfigError("plant: joint inertia must be positive")
        _as_vec(self.drag_linear_nsm, 3, "plant.drag_linear_nsm")
        _as_vec(self.drag_angular_nms, 3, "plant.drag_angular_nms")


@dataclass(frozen=True)
class CameraConfig:
    width: int
    height: int
    fov_deg: float
    baseline_m: float
    focal_px: Optional[float]
    max_range_m: float
    disparity_noise_px: float
    dropout_fraction: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ConfigError("camera: image dimensions must be positive")
        if not (0 < self.fov_deg < 180):
            raise ConfigError("camera: fov_deg out of range")
        if self.baseline_m <= 0 or self.max_range_m <= 0:
            raise ConfigError("camera: baseline and max range must be positive")

    @property
    def focal(self) -> float:
        if self.focal_px is not None:
            return float(self.focal_px)
        return (self.width / 2.0) / math.tan(math.radians(self.fov_deg) / 2.0)


@dataclass(frozen=True)
class PerceptionConfig:
    rate_hz: float
    classify_threshold_m: float
    min_area_fraction: float
    temporal_window: int
    temporal_majority: int
    consistency_radius_frac: float

    def __post_init__(self):
        if self.temporal_majority > self.temporal_window:
            raise ConfigError("perception: majority cannot exceed window")
        if self.temporal_window < 1:
            raise ConfigError("perception: window must be at least 1")


@dataclass(frozen=True)
class TrackerConfig:
    prompt_window_s: float
    gesture_window_s: float
    debounce_s: float
    area_change_alert: float
    displacement_alert_frac: float
    confidence_alert: float
    confidence_gate: float


@dataclass(frozen=True)
class BehaviorConfig:
    cruise_freq: float
    avoid_clear_m: float
    depth_setpoint_m: float
    depth_kp: float
    depth_kd: float
    heading_kp: float
    max_track_depth_m: float
    recovery_timeout_s: float
    avoid_roll_sign: int

    def __post_init__(self):
        if self.avoid_roll_sign not in (-1, 1):
            raise ConfigError("behaviors: avoid_roll_sign must be +1 or -1")


@dataclass(frozen=True)
class DetectorConfig:
    intensity_min: int
    intensity_max: int
    min_area_fraction: float
    max_area_fraction: float
    score_floor: float


@dataclass(frozen=True)
class TelemetryConfig:
    control_decimation: int

    def __post_init__(self):
        if self.control_decimation < 1:
            raise ConfigError("telemetry: control_decimation must be >= 1")


@dataclass(frozen=True)
class Config:
    version: int
    robot: RobotConfig
    gait: GaitConfig
    modulation: ModulationLimits
    control: ControlConfig
    plant: PlantConfig
    camera: CameraConfig
    perception: PerceptionConfig
    tracker: TrackerConfig
    behaviors: BehaviorConfig
    detector: DetectorConfig
    telemetry: TelemetryConfig
    raw: dict = field(repr=False, compare=False, default_factory=dict)

    def hash(self) -> str:
        return sha256_of(self.raw)

    def with_camera(self, **changes) -> "Config":
        """Copy of this config with camera fields overridden (scenario use)."""
        raw = json.loads(json.dumps(self.raw))
        raw["camera"].update(changes)
        return config_from_dict(raw)


def sha256_of(obj: Any) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


_SECTIONS = {
    "robot": RobotConfig,
    "modulation": ModulationLimits,
    "control": ControlConfig,
    "plant": PlantConfig,
    "camera": CameraConfig,
    "perception": PerceptionConfig,
    "tracker": TrackerConfig,
    "behaviors": BehaviorConfig,
    "detector": DetectorConfig,
    "telemetry": TelemetryConfig,
}


def config_from_dict(raw: dict) -> Config:
    raw = _require_mapping(raw, "config")
    expected = set(_SECTIONS) | {"version", "gait"}
    unknown = set(raw) - expected
    if unknown:
        raise ConfigError(f"config: unknown sections {sorted(unknown)}")
    missing = expected - set(raw)
    if missing:
        raise ConfigError(f"config: missing sections {sorted(missing)}")
    parts = {name: _build(cls, raw[name], name) for name, cls in _SECTIONS.items()}
    return Config(
        version=int(raw["version"]),
        gait=gait_spec_from_dict(raw["gait"]),
        raw=raw,
        **parts,
    )


def load_config(path: Optional[str] = None) -> Config:
    """Load a config file, or the packaged default when path is None."""
    if path is None:
        text = resources.files("flipperbot.data").joinpath("default.yaml").read_text()
    else:
        with open(path, "r") as fh:
            text = fh.read()
    raw = yaml.safe_load(text)
    return config_from_dict(raw)
