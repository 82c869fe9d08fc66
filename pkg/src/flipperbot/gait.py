"""Parametric swimming gait with intuitive four-axis modulation.

The base gait is one sinusoid per joint around a shared accumulated phase.
A four-element control vector warps it:

    u_freq   scales stroke frequency; sign selects forward/reverse family
    u_roll   antisymmetric distal offsets, banks the body
    u_pitch  symmetric distal offsets, pitches the body up or down
    u_yaw    attenuates the turn-side flipper's oscillation to skid-turn

Composition order matters: yaw attenuation applies to the oscillatory part
of the base gait only, then the pitch and roll offsets are added on top so
a turn never washes out attitude authority.

Sign conventions: positive u_pitch pitches the nose up (dive is negative),
positive u_yaw turns right (attenuates the right flipper), positive u_roll
banks right (right side drops).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import (DISTAL_JOINTS, LEFT_FRONT, RIGHT_FRONT, GaitConfig,
                     GaitSpec, ModulationLimits)

TWO_PI = 2.0 * math.pi


def _clamp(x: float) -> float:
    return min(1.0, max(-1.0, float(x)))


@dataclass
class ControlVector:
    """Normalized gait command; every axis is clamped to [-1, 1] on entry."""
    freq: float = 0.0
    roll: float = 0.0
    pitch: float = 0.0
    yaw: float = 0.0

    def __post_init__(self):
        self.freq = _clamp(self.freq)
        self.roll = _clamp(self.roll)
        self.pitch = _clamp(self.pitch)
        self.yaw = _clamp(self.yaw)

    def as_array(self) -> np.ndarray:
        return np.array([self.freq, self.roll, self.pitch, self.yaw])

    @classmethod
    def from_array(cls, arr) -> "ControlVector":
        f, r, p, y = (float(v) for v in arr)
        return cls(freq=f, roll=r, pitch=p, yaw=y)


@dataclass
class JointTargets:
    """Desired joint positions and velocities at one control tick."""
    q: np.ndarray
    qd: np.ndarray
    t: float
    saturated: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))

    def __post_init__(self):
        if self.saturated.size == 0:
            self.saturated = np.zeros(self.q.shape, dtype=bool)


def advance_phase(spec: GaitSpec, phase: float, u_freq: float, dt: float) -> float:
    """Integrate the accumulated gait phase over one step.

    The rate is 2*pi*f0*|u_freq|, so frequency changes are phase-continuous:
    halving u_freq halves the advance without any jump in joint angles.
    """
    return phase + TWO_PI * spec.f0_hz * abs(_clamp(u_freq)) * dt


def active_family(cfg: GaitConfig, u_freq: float) -> GaitSpec:
    """Family selection: u_freq >= 0 swims the forward table, negative swims
    the derived reverse table."""
    if u_freq < 0:
        return cfg.spec.reverse(cfg.reverse_amplitude_scale)
    return cfg.spec


def eval_base_gait(spec: GaitSpec, t: float, u_freq: float,
                   phase: float | None = None) -> JointTargets:
    """Evaluate the unmodulated gait table at an accumulated phase.

    When phase is None a fixed-rate phase 2*pi*f0*|u_freq|*t is assumed,
    which is only exact while u_freq has been constant since t=0.  At
    u_freq == 0 the joints hold their offsets with zero velocity.
    """
    u = _clamp(u_freq)
    if phase is None:
        phase = TWO_PI * spec.f0_hz * abs(u) * t
    if u == 0.0:
        return JointTargets(q=spec.offsets.copy(), qd=np.zeros_like(spec.offsets), t=t)
    arg = phase + spec.phases
    rate = TWO_PI * spec.f0_hz * abs(u)
    q = spec.offsets + spec.amplitudes * np.sin(arg)
    qd = spec.amplitudes * np.cos(arg) * rate
    return JointTargets(q=q, qd=qd, t=t)


def _saturate(targets: JointTargets, lo: np.ndarray, hi: np.ndarray) -> JointTargets:
    clipped = np.clip(targets.q, lo, hi)
    flags = targets.saturated | (clipped != targets.q)
    targets.q = clipped
    targets.saturated = flags
    return targets


def apply_pitch_modulation(base: JointTargets, u_pitch: float,
                           limits: ModulationLimits,
                           spec: GaitSpec | None = None) -> JointTargets:
    """Add theta_max_pitch * u_pitch to both distal joints.

    Velocities are untouched; the offset is constant within a tick.  When a
    spec is supplied the result is saturated to its joint limits and the
    per-joint flag is raised instead of erroring.
    """
    u = _clamp(u_pitch)
    q = base.q.copy()
    for j in DISTAL_JOINTS:
        q[j] += limits.theta_max_pitch_rad * u
    out = JointTargets(q=q, qd=base.qd.copy(), t=base.t, saturated=base.saturated.copy())
    if spec is not None:
        out = _saturate(out, spec.limits_lo, spec.limits_hi)
    return out


def apply_roll_modulation(base: JointTargets, u_roll: float,
                          limits: ModulationLimits,
                          spec: GaitSpec | None = None) -> JointTargets:
    """Antisymmetric distal offsets: +theta_max_roll*u on the left blade,
    -theta_max_roll*u on the right, banking the body toward positive u."""
    u = _clamp(u_roll)
    q = base.q.copy()
    left, right = DISTAL_JOINTS
    q[left] += limits.theta_max_roll_rad * u
    q[right] -= limits.theta_max_roll_rad * u
    out = JointTargets(q=q, qd=base.qd.copy(), t=base.t, saturated=base.saturated.copy())
    if spec is not None:
        out = _saturate(out, spec.limits_lo, spec.limits_hi)
    return out


def apply_yaw_modulation(base: JointTargets, spec: GaitSpec,
                         u_yaw: float) -> JointTargets:
    """Scale the turn-side flipper's oscillatory component by (1 - |u_yaw|).

    The offsets survive untouched; only the sinusoidal part around them is
    attenuated, so at |u_yaw| = 1 the inside flipper freezes at its offset
    and the outside flipper keeps full thrust.  Positive u_yaw slows the
    right flipper, turning the robot to the right.
    """
    u = _clamp(u_yaw)
    if u == 0.0:
        return JointTargets(q=base.q.copy(), qd=base.qd.copy(), t=base.t,
                            saturated=base.saturated.copy())
    side = RIGHT_FRONT if u > 0 else LEFT_FRONT
    scale = 1.0 - abs(u)
    q = base.q.copy()
    qd = base.qd.copy()
    for j in side:
        q[j] = spec.offsets[j] + scale * (base.q[j] - spec.offsets[j])
        qd[j] = scale * base.qd[j]
    return JointTargets(q=q, qd=qd, t=base.t, saturated=base.saturated.copy())


def compose_gait(cfg: GaitConfig, u: ControlVector, t: float,
                 phase: float | None = None,
                 limits: ModulationLimits | None = None) -> JointTargets:
    """Full per-tick gait evaluation: base family, then yaw, pitch, roll.

    Deterministic for identical (cfg, u, t, phase).  With u all zero this
    returns the neutral posture (forward-family offsets, zero velocity).
    """
    if limits is None:
        limits = ModulationLimits(theta_max_pitch_rad=0.0, theta_max_roll_rad=0.0)
    spec = active_family(cfg, u.freq)
    base = eval_base_gait(spec, t, u.freq, phase=phase)
    out = apply_yaw_modulation(base, spec, u.yaw)
    out = apply_pitch_modulation(out, u.pitch, limits)
    out = apply_roll_modulation(out, u.roll, limits, spec=spec)
    return out
