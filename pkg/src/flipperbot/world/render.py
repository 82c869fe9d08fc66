"""Synthetic stereo sensor rendering.

Ray-casts the tank interior from the head-mounted camera and produces a
disparity image, a grayscale intensity image and a per-pixel target
identity map.  Image rows are stored bottom-up: row 0 is the lowest
scanline, which keeps pixel y increasing with scene height.

Glass behaves like glass: at grazing incidence (and with a small random
chance elsewhere) a wall pixel returns the mirrored scene, roughly twice
as far away, instead of the pane itself.  That makes glass walls hard to
range until the approach is nearly head-on, which is exactly how they
fail in practice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..config import CameraConfig
from ..perception import DisparityMap
from . import geom
from .state import Imu, SensorFrame, WorldState

# glass model: a wall pixel mirrors when the ray hits at grazing incidence
# (|cos| below the cutoff) and otherwise mirrors with probability equal to
# the material reflectivity
GLASS_GRAZING_COS = 0.55
# mirrored pixels range the virtual image: twice the pane distance plus the
# depth of the reflected scene content behind the glass
GLASS_SCENE_DEPTH = 1.5
WATER_INTENSITY = 25


@dataclass
class _RayGrid:
    dirs: np.ndarray      # HxWx3 unit vectors, camera frame (x fwd, y left, z up)
    forward: np.ndarray   # HxW forward components


_GRID_CACHE: dict = {}


def _ray_grid(cam: CameraConfig) -> _RayGrid:
    key = (cam.width, cam.height, round(cam.focal, 6))
    grid = _GRID_CACHE.get(key)
    if grid is not None:
        return grid
    f = cam.focal
    xs = np.arange(cam.width, dtype=np.float64) + 0.5
    ys = np.arange(cam.height, dtype=np.float64) + 0.5
    # rows bottom-up: larger pixel y looks further up
    left = (cam.width / 2.0) - xs
    up = ys - (cam.height / 2.0)
    d = np.empty((cam.height, cam.width, 3))
    d[:, :, 0] = f
    d[:, :, 1] = left[None, :]
    d[:, :, 2] = up[:, None]
    norm = np.linalg.norm(d, axis=2)
    d /= norm[:, :, None]
    grid = _RayGrid(dirs=d, forward=d[:, :, 0].copy())
    _GRID_CACHE[key] = grid
    return grid


def render_sensors(world: WorldState, cam: CameraConfig,
                   rng: np.random.Generator, frame_index: int,
                   accel: np.ndarray | None = None) -> SensorFrame:
    """Render one stereo frame plus proprioceptive channels."""
    grid = _ray_grid(cam)
    h, w = cam.height, cam.width
    r = geom.quat_to_matrix(world.quat)
    origin = world.pos + r @ np.array([_camera_x(world), 0.0, 0.0])
    dirs = grid.dirs.reshape(-1, 3) @ r.T  # world-frame rays

    t_hit = np.full(dirs.shape[0], np.inf)
    intensity = np.full(dirs.shape[0], float(WATER_INTENSITY))
    ids = np.zeros(dirs.shape[0], dtype=np.int16)
    mirrored = np.zeros(dirs.shape[0], dtype=bool)

    _cast_walls(world, origin, dirs, rng, t_hit, intensity, mirrored)
    for obs in world.obstacles:
        if obs.shape == "sphere":
            _cast_sphere(origin, dirs, obs.center, obs.radius, obs.intensity(),
                         0, t_hit, intensity, ids, mirrored)
        else:
            _cast_box(origin, dirs, obs.center, obs.half_extents, obs.intensity(),
                      t_hit, intensity, ids, mirrored)
    for tgt in world.targets:
        _cast_sphere(origin, dirs, tgt.pos, tgt.radius, tgt.intensity,
                     tgt.target_id, t_hit, intensity, ids, mirrored)

    for pane in world.glass_panes:
        _attenuate_through_pane(origin, dirs, t_hit, pane, intensity)

    # forward depth, then disparity with matcher noise and dropout
    fwd = grid.forward.reshape(-1)
    range_eff = np.where(mirrored, 2.0 * t_hit + GLASS_SCENE_DEPTH, t_hit)
    z = range_eff * fwd
    valid = np.isfinite(range_eff) & (range_eff <= cam.max_range_m)

    disp = np.zeros(dirs.shape[0], dtype=np.float32)
    fb = cam.focal * cam.baseline_m
    nz = valid & (z > 1e-6)
    disp[nz] = (fb / z[nz]).astype(np.float32)
    if cam.disparity_noise_px > 0:
        disp[nz] += rng.normal(0.0, cam.disparity_noise_px, int(nz.sum())).astype(np.float32)
        np.maximum(disp, 0.0, out=disp)
    if cam.dropout_fraction > 0:
        drop = rng.random(disp.shape[0]) < cam.dropout_fraction
        disp[drop] = 0.0

    shade = intensity / (1.0 + 0.12 * np.where(np.isfinite(t_hit), t_hit, cam.max_range_m))
    img = np.clip(shade, 0, 255).astype(np.uint8)

    depth_m = world.depth
    imu = Imu(quat=world.quat.copy(), angvel=world.angvel.copy(),
              accel=np.zeros(3) if accel is None else accel)
    return SensorFrame(
        t=world.time,
        frame_index=frame_index,
        depth_m=depth_m,
        imu=imu,
        disparity=DisparityMap(values=disp.reshape(h, w), focal_baseline=fb, t=world.time),
        intensity=img.reshape(h, w),
        target_ids=ids.reshape(h, w),
    )


def _camera_x(world: WorldState) -> float:
    return getattr(world, "camera_x_m", 0.26)


def _cast_walls(world: WorldState, origin: np.ndarray, dirs: np.ndarray,
                rng: np.random.Generator, t_hit: np.ndarray,
                intensity: np.ndarray, mirrored: np.ndarray) -> None:
    lo = world.tank.lo
    hi = world.tank.hi
    t_exit = np.full(dirs.shape[0], np.inf)
    axis_hit = np.zeros(dirs.shape[0], dtype=np.int8)
    side_hit = np.zeros(dirs.shape[0], dtype=np.int8)
    for axis in range(3):
        d = dirs[:, axis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_pos = (hi[axis] - origin[axis]) / d
            t_neg = (lo[axis] - origin[axis]) / d
        t_axis = np.where(d > 0, t_pos, np.where(d < 0, t_neg, np.inf))
        closer = t_axis < t_exit
        t_exit[closer] = t_axis[closer]
        axis_hit[closer] = axis
        side_hit[closer] = np.where(d[closer] > 0, 1, -1)
    for axis in range(3):
        for side in (-1, 1):
            mat = world.tank.wall_material(axis, side)
            sel = (axis_hit == axis) & (side_hit == side) & np.isfinite(t_exit)
            if not np.any(sel):
                continue
            t_hit[sel] = t_exit[sel]
            intensity[sel] = mat.intensity
            if mat.reflectivity > 0.0:
                cos_inc = np.abs(dirs[sel, axis])
                mirror = (cos_inc < GLASS_GRAZING_COS) | (
                    rng.random(int(sel.sum())) < mat.reflectivity)
                idx = np.flatnonzero(sel)[mirror]
                mirrored[idx] = True
                intensity[idx] = WATER_INTENSITY


def _cast_sphere(origin: np.ndarray, dirs: np.ndarray, center: np.ndarray,
                 radius: float, shade: float, target_id: int,
                 t_hit: np.ndarray, intensity: np.ndarray, ids: np.ndarray,
                 mirrored: np.ndarray) -> None:
    oc = origin - center
    b = dirs @ oc
    c = float(oc @ oc) - radius * radius
    disc = b * b - c
    hit = disc > 0.0
    if not np.any(hit):
        return
    t = -b[hit] - np.sqrt(disc[hit])
    ok = t > 1e-6
    idx = np.flatnonzero(hit)[ok]
    t = t[ok]
    closer = t < t_hit[idx]
    idx = idx[closer]
    t_hit[idx] = t[closer]
    intensity[idx] = shade
    ids[idx] = target_id
    mirrored[idx] = False


def _cast_box(origin: np.ndarray, dirs: np.ndarray, center: np.ndarray,
              half: np.ndarray, shade: float, t_hit: np.ndarray,
              intensity: np.ndarray, ids: np.ndarray,
              mirrored: np.ndarray) -> None:
    lo = center - half
    hi = center + half
    t_near = np.full(dirs.shape[0], -np.inf)
    t_far = np.full(dirs.shape[0], np.inf)
    ok = np.ones(dirs.shape[0], dtype=bool)
    for axis in range(3):
        d = dirs[:, axis]
        o = origin[axis]
        parallel = np.abs(d) < 1e-12
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo[axis] - o) / d
            t2 = (hi[axis] - o) / d
        tmin = np.minimum(t1, t2)
        tmax = np.maximum(t1, t2)
        t_near = np.where(parallel, t_near, np.maximum(t_near, tmin))
        t_far = np.where(parallel, t_far, np.minimum(t_far, tmax))
        ok &= ~(parallel & ((o < lo[axis]) | (o > hi[axis])))
    hit = ok & (t_near <= t_far) & (t_near > 1e-6)
    closer = hit & (t_near < t_hit)
    t_hit[closer] = t_near[closer]
    intensity[closer] = shade
    ids[closer] = 0
    mirrored[closer] = False


def _attenuate_through_pane(origin: np.ndarray, dirs: np.ndarray,
                            t_hit: np.ndarray, pane, intensity: np.ndarray) -> None:
    d = dirs[:, pane.axis]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_pane = (pane.value - origin[pane.axis]) / d
    through = np.isfinite(t_pane) & (t_pane > 1e-6) & (t_pane < t_hit)
    intensity[through] *= pane.transmission
