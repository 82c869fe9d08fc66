"""Reduced-order vehicle dynamics.

Six rigid-body DOF driven by quasi-steady flipper forces, plus a damped
inertia plant per joint.  Everything is body-frame FLU and integrates with
semi-implicit Euler at the control rate.

Flipper force model (per front flipper, from the actual joint state):

    surge  F_x = k_thrust * w|w| * delta      (heave-pitch correlation)
    heave  F_z = k_heave  * w^2  * sin(delta)

with w the stroke joint rate and delta the distal joint angle.  The surge
term rectifies forward for the forward gait family and backward for the
reverse family because the families flip the stroke/distal phase relation.
The heave term responds to the constant distal offsets the pitch and roll
modulations add.  Rear pitch blades act as a speed-dependent elevator and
a metacentric couple rights the hull.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import (DISTAL_JOINTS, REAR_PITCH_JOINTS, STROKE_JOINTS, Config)
from ..control import ActuatorCommand
from . import geom
from .state import Contact, WorldState

_E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class PlantParams:
    mass_eff: np.ndarray
    inertia: np.ndarray
    flipper_r_left: np.ndarray
    flipper_r_right: np.ndarray
    rear_r: np.ndarray
    k_thrust: float
    k_heave: float
    k_rear: float
    k_restore: float
    drag_lin: np.ndarray
    drag_ang: np.ndarray
    joint_inertia: float
    joint_damping: float
    joint_lo: np.ndarray
    joint_hi: np.ndarray
    hotel_w: float
    collision_radius: float

    @classmethod
    def from_config(cls, cfg: Config) -> "PlantParams":
        r = cfg.robot
        p = cfg.plant
        return cls(
            mass_eff=np.asarray(r.mass_eff_kg, dtype=float),
            inertia=np.asarray(r.inertia_kgm2, dtype=float),
            flipper_r_left=np.array([r.flipper_x_m, r.flipper_y_m, 0.0]),
            flipper_r_right=np.array([r.flipper_x_m, -r.flipper_y_m, 0.0]),
            rear_r=np.array([r.rear_x_m, 0.0, 0.0]),
            k_thrust=p.k_thrust,
            k_heave=p.k_heave,
            k_rear=p.k_rear,
            k_restore=p.k_restore,
            drag_lin=np.asarray(p.drag_linear_nsm, dtype=float),
            drag_ang=np.asarray(p.drag_angular_nms, dtype=float),
            joint_inertia=p.joint_inertia_kgm2,
            joint_damping=p.joint_damping_nms,
            joint_lo=cfg.gait.spec.limits_lo,
            joint_hi=cfg.gait.spec.limits_hi,
            hotel_w=p.hotel_load_w,
            collision_radius=r.collision_radius_m,
        )


def flipper_wrench(q: np.ndarray, qd: np.ndarray, surge_speed: float,
                   params: PlantParams) -> tuple[np.ndarray, np.ndarray]:
    """Body-frame force and torque from all four flippers."""
    force = np.zeros(3)
    torque = np.zeros(3)
    for stroke_j, distal_j, r in (
            (STROKE_JOINTS[0], DISTAL_JOINTS[0], params.flipper_r_left),
            (STROKE_JOINTS[1], DISTAL_JOINTS[1], params.flipper_r_right)):
        w = qd[stroke_j]
        delta = q[distal_j]
        f = np.array([
            params.k_thrust * w * abs(w) * delta,
            0.0,
            params.k_heave * w * w * np.sin(delta),
        ])
        force += f
        torque += np.cross(r, f)
    # rear elevator: lift proportional to U|U| and blade angle, sign such
    # that blades pitched down push the tail up and the nose down
    theta_rear = 0.5 * (q[REAR_PITCH_JOINTS[0]] + q[REAR_PITCH_JOINTS[1]])
    f_rear = np.array([0.0, 0.0, -params.k_rear * surge_speed * abs(surge_speed) * theta_rear])
    force += f_rear
    torque += np.cross(params.rear_r, f_rear)
    return force, torque


def step(world: WorldState, cmd: ActuatorCommand, dt: float,
         params: PlantParams) -> WorldState:
    """Advance the world by one control period.  Mutates and returns world.

    A non-finite command is a fault: the world is left unchanged apart from
    a latched fault flag.
    """
    if cmd.fault or not np.all(np.isfinite(cmd.effort)):
        world.fault_latched = True
        return world

    # joint plant: inertia + viscous damping, hard stops at the limits.
    # Damping is integrated implicitly; b*dt/I > 1 would otherwise make the
    # explicit update overshoot into a chatter limit cycle at 100 Hz.
    qd_star = world.qd + dt * cmd.effort / params.joint_inertia
    world.qd = qd_star / (1.0 + dt * params.joint_damping / params.joint_inertia)
    world.q = world.q + dt * world.qd
    below = world.q < params.joint_lo
    above = world.q > params.joint_hi
    world.q = np.clip(world.q, params.joint_lo, params.joint_hi)
    world.qd[below | above] = 0.0
    world.last_effort = cmd.effort

    # rigid body forces
    force, torque = flipper_wrench(world.q, world.qd, float(world.vel[0]), params)
    force -= params.drag_lin * world.vel
    torque -= params.drag_ang * world.angvel
    r = geom.quat_to_matrix(world.quat)
    up_body = r.T @ _E3
    torque += params.k_restore * np.cross(_E3, up_body)

    # semi-implicit Euler with the usual body-frame coriolis terms
    v, w = world.vel, world.angvel
    vdot = force / params.mass_eff - np.cross(w, v)
    wdot = (torque - np.cross(w, params.inertia * w)) / params.inertia
    world.vel = v + dt * vdot
    world.angvel = w + dt * wdot
    world.pos = world.pos + dt * (r @ world.vel)
    world.quat = geom.quat_integrate(world.quat, world.angvel, dt)

    world.time += dt
    world.contacts = []
    _resolve_contacts(world, params, r)

    for target in world.targets:
        target.pos = target.position_at(world.time)
    return world


def _resolve_contacts(world: WorldState, params: PlantParams, r: np.ndarray) -> None:
    """Collide the hull sphere with tank walls and obstacles.

    Penetrations are projected out and the inward velocity component is
    zeroed; each contact is recorded with the kind of object hit so runs
    can attribute failures.
    """
    rad = params.collision_radius
    lo = world.tank.lo
    hi = world.tank.hi
    pos = world.pos
    wall_names = (("wall", "wall"), ("wall", "wall"), ("floor", "surface"))
    for axis in range(3):
        mat_lo = world.tank.wall_material(axis, -1)
        mat_hi = world.tank.wall_material(axis, +1)
        lo_kind = wall_names[axis][0] if mat_lo.reflectivity == 0.0 else "glass_wall"
        hi_kind = wall_names[axis][1] if mat_hi.reflectivity == 0.0 else "glass_wall"
        if axis == 2:
            lo_kind, hi_kind = "floor", "surface"
        if pos[axis] - rad < lo[axis]:
            pos[axis] = lo[axis] + rad
            _kill_velocity(world, r, axis, -1)
            world.contacts.append(Contact(world.time, lo_kind, pos.copy()))
        if pos[axis] + rad > hi[axis]:
            pos[axis] = hi[axis] - rad
            _kill_velocity(world, r, axis, +1)
            world.contacts.append(Contact(world.time, hi_kind, pos.copy()))
    for obs in world.obstacles:
        if obs.shape == "sphere":
            d = pos - obs.center
            dist = float(np.linalg.norm(d))
            min_d = rad + obs.radius
            if dist < min_d:
                n = d / dist if dist > 1e-9 else np.array([1.0, 0.0, 0.0])
                world.pos = obs.center + n * min_d
                _kill_velocity_along(world, r, -n)
                world.contacts.append(Contact(world.time, obs.kind, world.pos.copy()))
        else:
            he = obs.half_extents
            nearest = np.clip(pos, obs.center - he, obs.center + he)
            d = pos - nearest
            dist = float(np.linalg.norm(d))
            if dist < rad:
                n = d / dist if dist > 1e-9 else np.array([1.0, 0.0, 0.0])
                world.pos = nearest + n * rad
                _kill_velocity_along(world, r, -n)
                world.contacts.append(Contact(world.time, obs.kind, world.pos.copy()))


def _kill_velocity(world: WorldState, r: np.ndarray, axis: int, side: int) -> None:
    n = np.zeros(3)
    n[axis] = float(side)
    _kill_velocity_along(world, r, n)


def _kill_velocity_along(world: WorldState, r: np.ndarray, n_world: np.ndarray) -> None:
    """Remove the velocity component pointing along n_world (into the surface)."""
    v_world = r @ world.vel
    into = float(v_world @ n_world)
    if into > 0.0:
        v_world = v_world - into * n_world
        world.vel = r.T @ v_world


def read_power(world: WorldState, params: PlantParams) -> float:
    """Instantaneous electrical-equivalent draw: joint mechanical power
    (absolute, no regeneration) plus the constant hotel load."""
    mech = float(np.sum(np.abs(world.last_effort * world.qd)))
    return mech + params.hotel_w
