"""Quaternion and frame helpers (w, x, y, z order, body FLU)."""
from __future__ import annotations

import math

import numpy as np


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_from_yaw(yaw_rad: float) -> np.ndarray:
    h = 0.5 * yaw_rad
    return np.array([math.cos(h), 0.0, 0.0, math.sin(h)])


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = math.sqrt(float(np.dot(q, q)))
    if n == 0.0:
        return quat_identity()
    return q / n


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    """Body-to-world rotation matrix."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])


def quat_integrate(q: np.ndarray, omega_body: np.ndarray, dt: float) -> np.ndarray:
    """First-order quaternion update from a body angular rate, renormalized."""
    dq = quat_mul(q, np.array([0.0, *omega_body])) * 0.5
    return quat_normalize(q + dq * dt)


def yaw_of(q: np.ndarray) -> float:
    """Heading of the body x axis projected on the horizontal plane."""
    r = quat_to_matrix(q)
    fwd = r[:, 0]
    return math.atan2(fwd[1], fwd[0])


def pitch_of(q: np.ndarray) -> float:
    """Nose-up angle of the body x axis above the horizon, radians."""
    r = quat_to_matrix(q)
    return math.asin(max(-1.0, min(1.0, float(r[2, 0]))))


def roll_of(q: np.ndarray) -> float:
    """Bank angle: positive when the right side drops."""
    r = quat_to_matrix(q)
    left = r[:, 1]
    up = r[:, 2]
    return math.atan2(float(left[2]), float(up[2]))


def wrap_angle(a: float) -> float:
    return (a + math.pi) % (2.0 * math.pi) - math.pi
