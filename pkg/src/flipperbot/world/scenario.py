"""Scenario specs: tank, obstacle course, targets and scripted operator.

A scenario is a YAML document validated into a plain dict.  Spawning is
deterministic: the same (scenario, seed) pair always produces bit-identical
world state, including any randomized obstacle fields, which are drawn from
a generator seeded only by the run seed and the scenario salt.
"""
from __future__ import annotations

import math
import os
from importlib import resources
from typing import Optional

import numpy as np
import yaml

from ..config import Config, ConfigError, N_JOINTS
from . import geom
from .state import (TARGET_SPEED_LIMITS, GlassPane, Obstacle, Tank,
                    TargetAgent, WallMaterial, WorldState, script_max_speed)

BUILTIN_SCENARIOS = (
    "empty", "pool", "pool_obstacles", "aquarium_got", "seagrant_tank",
    "seagrant_left", "seagrant_center", "seagrant_right",
    "track_sine", "track_exit",
)

_TOP_KEYS = {
    "name", "description", "tank", "robot", "camera", "obstacles",
    "random_obstacles", "glass_panes", "targets", "operator", "avoidance",
    "duration_s", "seed_salt", "depth_setpoint_m",
}


class ScenarioError(ValueError):
    pass


def load_scenario(name_or_path: str) -> dict:
    """Load a built-in scenario by name or any scenario YAML by path."""
    if name_or_path in BUILTIN_SCENARIOS:
        text = resources.files("flipperbot.data.scenarios").joinpath(
            f"{name_or_path}.yaml").read_text()
    elif os.path.exists(name_or_path):
        with open(name_or_path, "r") as fh:
            text = fh.read()
    else:
        raise ScenarioError(
            f"unknown scenario {name_or_path!r}; built-ins: {BUILTIN_SCENARIOS}")
    spec = yaml.safe_load(text)
    validate_scenario(spec)
    return spec


def validate_scenario(spec: dict) -> None:
    if not isinstance(spec, dict):
        raise ScenarioError("scenario must be a mapping")
    unknown = set(spec) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"scenario: unknown keys {sorted(unknown)}")
    for key in ("name", "tank", "robot"):
        if key not in spec:
            raise ScenarioError(f"scenario: missing {key!r}")
    size = spec["tank"].get("size")
    if not (isinstance(size, list) and len(size) == 3 and min(size) > 0):
        raise ScenarioError("scenario.tank.size must be [Lx, Ly, depth] > 0")
    start = spec["robot"].get("start")
    if not (isinstance(start, list) and len(start) == 3):
        raise ScenarioError("scenario.robot.start must be [x, y, z]")
    if not (0 <= start[0] <= size[0] and 0 <= start[1] <= size[1]
            and -size[2] <= start[2] <= 0):
        raise ScenarioError("scenario.robot.start outside the tank")
    for i, t in enumerate(spec.get("targets", []) or []):
        kind = t.get("kind")
        if kind not in TARGET_SPEED_LIMITS:
            raise ScenarioError(f"targets[{i}]: unknown kind {kind!r}")
        vmax = script_max_speed(t["script"])
        cap = TARGET_SPEED_LIMITS[kind]
        if vmax > cap + 1e-9:
            raise ScenarioError(
                f"targets[{i}]: script speed {vmax:.2f} exceeds {kind} cap {cap}")
    for i, ev in enumerate(spec.get("operator", []) or []):
        if ev.get("action") not in ("init", "click", "click_target", "stop"):
            raise ScenarioError(f"operator[{i}]: unknown action {ev.get('action')!r}")
        if "t" not in ev:
            raise ScenarioError(f"operator[{i}]: missing time")


def _material(raw: Optional[dict], default: WallMaterial) -> WallMaterial:
    if raw is None:
        return default
    return WallMaterial(intensity=int(raw.get("intensity", default.intensity)),
                        reflectivity=float(raw.get("reflectivity", default.reflectivity)))


def spawn_scenario(spec: dict, seed: int, cfg: Config) -> WorldState:
    """Build the initial world.  Bit-identical for identical (spec, seed)."""
    validate_scenario(spec)
    size = np.asarray(spec["tank"]["size"], dtype=float)
    walls = spec["tank"].get("walls", {}) or {}
    side_default = _material(walls.get("default"), WallMaterial())
    tank = Tank(
        size=size,
        wall_x0=_material(walls.get("x0"), side_default),
        wall_x1=_material(walls.get("x1"), side_default),
        wall_y0=_material(walls.get("y0"), side_default),
        wall_y1=_material(walls.get("y1"), side_default),
        floor=_material(walls.get("floor"), WallMaterial(intensity=140)),
        surface=_material(walls.get("surface"),
                          WallMaterial(intensity=200, reflectivity=1.0)),
    )

    obstacles = []
    for raw in spec.get("obstacles", []) or []:
        shape = raw.get("shape", "sphere")
        obstacles.append(Obstacle(
            kind=raw.get("kind", "rock"),
            shape=shape,
            center=np.asarray(raw["center"], dtype=float),
            radius=float(raw.get("radius", 0.0)),
            half_extents=(np.asarray(raw["half_extents"], dtype=float)
                          if shape == "box" else None),
        ))

    rand = spec.get("random_obstacles")
    if rand:
        salt = int(spec.get("seed_salt", 0))
        rng = np.random.default_rng(np.random.SeedSequence([seed, salt, 77]))
        obstacles.extend(_random_field(rand, rng, size,
                                       np.asarray(spec["robot"]["start"], dtype=float)))

    panes = [GlassPane(axis=int(p["axis"]), value=float(p["value"]),
                       transmission=float(p.get("transmission", 0.4)))
             for p in spec.get("glass_panes", []) or []]

    targets = []
    for i, raw in enumerate(spec.get("targets", []) or []):
        agent = TargetAgent(
            target_id=i + 1,
            kind=raw["kind"],
            radius=float(raw.get("radius", 0.15)),
            script=raw["script"],
            intensity=int(raw.get("intensity", 0)),
        )
        agent.pos = agent.position_at(0.0)
        targets.append(agent)

    start = np.asarray(spec["robot"]["start"], dtype=float)
    yaw = math.radians(float(spec["robot"].get("yaw_deg", 0.0)))
    return WorldState(
        time=0.0,
        pos=start.copy(),
        quat=geom.quat_from_yaw(yaw),
        vel=np.zeros(3),
        angvel=np.zeros(3),
        q=cfg.gait.spec.offsets.copy(),
        qd=np.zeros(N_JOINTS),
        tank=tank,
        obstacles=obstacles,
        targets=targets,
        glass_panes=panes,
        scenario_name=str(spec["name"]),
        camera_x_m=cfg.robot.camera_x_m,
    )


def _random_field(rand: dict, rng: np.random.Generator, size: np.ndarray,
                  robot_start: np.ndarray) -> list:
    count = int(rand["count"])
    kinds = rand.get("kinds", ["coral", "rock", "pillar"])
    r_lo, r_hi = rand.get("radius_range", [0.3, 0.7])
    region = rand.get("region", [1.0, 1.0, float(size[0]) - 1.0, float(size[1]) - 1.0])
    spacing = float(rand.get("min_spacing", 1.2))
    clear = float(rand.get("start_clearance", 2.0))
    placed: list = []
    out = []
    attempts = 0
    while len(out) < count and attempts < count * 200:
        attempts += 1
        x = rng.uniform(region[0], region[2])
        y = rng.uniform(region[1], region[3])
        radius = rng.uniform(r_lo, r_hi)
        if math.hypot(x - robot_start[0], y - robot_start[1]) < clear:
            continue
        if any(math.hypot(x - px, y - py) < spacing for px, py in placed):
            continue
        kind = kinds[int(rng.integers(0, len(kinds)))]
        if kind == "pillar":
            obs = Obstacle(kind=kind, shape="box",
                           center=np.array([x, y, -size[2] / 2.0]),
                           half_extents=np.array([radius * 0.5, radius * 0.5,
                                                  size[2] / 2.0]))
        else:
            z = rng.uniform(-size[2] + radius, -radius)
            obs = Obstacle(kind=kind, shape="sphere",
                           center=np.array([x, y, z]), radius=radius)
        placed.append((x, y))
        out.append(obs)
    if len(out) < count:
        raise ScenarioError("random_obstacles: could not place requested count")
    return out


def config_for_scenario(spec: dict, cfg: Config) -> Config:
    cam = spec.get("camera")
    if not cam:
        return cfg
    return cfg.with_camera(**cam)
