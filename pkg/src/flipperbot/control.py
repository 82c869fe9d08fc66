"""Joint-space PD control and rear-flipper pitch handling.

The rear flippers do not follow the swim gait directly: their pitch joints
track an affine map of the desired body pitch plus a small counter-phase
oscillation that cancels the bobbing the front strokes induce.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import REAR_PITCH_JOINTS, ControlConfig
from .gait import TWO_PI, JointTargets


@dataclass
class JointState:
    q: np.ndarray
    qd: np.ndarray
    t: float


@dataclass
class ActuatorCommand:
    effort: np.ndarray
    saturated: np.ndarray
    t: float
    fault: bool = False


def pd_step(targets: JointTargets, state: JointState, kp: np.ndarray,
            kd: np.ndarray, effort_limit: np.ndarray) -> ActuatorCommand:
    """effort = kp*(q_des - q) + kd*(qd_des - qd), clipped per joint.

    Non-finite targets raise no torque: the command is zeroed and flagged as
    a fault so the plant can hold its last safe state.
    """
    if not (np.all(np.isfinite(targets.q)) and np.all(np.isfinite(targets.qd))):
        z = np.zeros_like(state.q)
        return ActuatorCommand(effort=z, saturated=np.zeros_like(z, dtype=bool),
                               t=state.t, fault=True)
    raw = kp * (targets.q - state.q) + kd * (targets.qd - state.qd)
    effort = np.clip(raw, -effort_limit, effort_limit)
    return ActuatorCommand(effort=effort, saturated=(effort != raw), t=state.t)


def rear_pitch_setpoint(desired_body_pitch: float,
                        body_range: tuple[float, float],
                        joint_range: tuple[float, float]) -> float:
    """Affine map from the commanded body pitch range onto the rear joint
    range.  Inputs outside the body range clamp to the nearest end."""
    b_lo, b_hi = body_range
    j_lo, j_hi = joint_range
    x = min(b_hi, max(b_lo, float(desired_body_pitch)))
    frac = (x - b_lo) / (b_hi - b_lo)
    return j_lo + frac * (j_hi - j_lo)


def stabilization_offset(gait_phase: float, amplitude: float) -> float:
    """Counter-oscillation for the rear pitch joints.

    Phase zero is mid-downstroke of the front flippers, where the nose kicks
    up hardest, so the rear blades deflect fully downward there and the
    correction peaks exactly out of phase with the disturbance.
    """
    return -amplitude * math.cos(gait_phase)


def rear_flipper_targets(targets: JointTargets, u_pitch: float, gait_phase: float,
                         phase_rate: float, cfg: ControlConfig) -> JointTargets:
    """Override the rear pitch joints with setpoint + stabilization.

    The desired body pitch is u_pitch scaled onto the configured body range.
    phase_rate is d(phase)/dt, needed for the feedforward velocity of the
    oscillatory part.
    """
    b_lo, b_hi = cfg.body_pitch_range_rad
    desired_body = b_lo + (u_pitch + 1.0) * 0.5 * (b_hi - b_lo)
    base = rear_pitch_setpoint(desired_body, tuple(cfg.body_pitch_range_rad),
                               tuple(cfg.rear_joint_range_rad))
    a = cfg.stabilization_amplitude_rad
    q_rear = base + stabilization_offset(gait_phase, a)
    qd_rear = a * math.sin(gait_phase) * phase_rate
    q = targets.q.copy()
    qd = targets.qd.copy()
    for j in REAR_PITCH_JOINTS:
        q[j] = q_rear
        qd[j] = qd_rear
    return JointTargets(q=q, qd=qd, t=targets.t, saturated=targets.saturated.copy())
