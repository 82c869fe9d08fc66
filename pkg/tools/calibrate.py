"""Fit the reduced plant constants against the bench characterization numbers.

Runs the fixed-command characterization (straight cruise, full-rate turn,
full dive) for candidate plant constants and walks a coordinate search until
the steady-state numbers sit inside their acceptance bands:

    cruise speed   0.208 m/s   +-10%
    turn rate      30 deg/s    +-20%
    dive rate      0.117 m/s   +-20%
    mean power     24.0 W      +-15%

Cost of transport follows from speed and power, so it is reported but not
searched on.  The winning constants are printed as a YAML fragment to paste
into src/flipperbot/data/default.yaml.

Usage: python3 tools/calibrate.py [--fast]
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from flipperbot.config import load_config
from flipperbot.gait import ControlVector
from flipperbot.runner import run_fixed_command

TARGETS = {
    "speed_mps": (0.208, 0.10),
    "turn_dps": (30.0, 0.20),
    "dive_mps": (0.117, 0.20),
    "power_w": (24.0, 0.15),
}

# knob -> (config path under plant, search step as a fraction)
KNOBS = {
    "k_thrust": 0.06,
    "k_heave": 0.08,
    "drag_angular_z": 0.08,
    "joint_damping_nms": 0.05,
}

FIELD_OF = {
    "k_thrust": "k_thrust",
    "k_heave": "k_heave",
    "joint_damping_nms": "joint_damping_nms",
}


def with_plant(cfg, **overrides):
    plant = cfg.plant
    drag_ang = np.array(plant.drag_angular_nms, dtype=float)
    if "drag_angular_z" in overrides:
        drag_ang = drag_ang.copy()
        drag_ang[2] = overrides.pop("drag_angular_z")
    fields = {FIELD_OF[k]: v for k, v in overrides.items()}
    plant = dataclasses.replace(plant, drag_angular_nms=tuple(drag_ang), **fields)
    return dataclasses.replace(cfg, plant=plant)


def characterize(cfg, duration: float) -> dict:
    tail = int(0.4 * duration * cfg.control.rate_hz)
    out = run_fixed_command(cfg, ControlVector(freq=1.0), duration)
    speed = float(out["vx"][-tail:].mean())
    power = float(out["power"][-tail:].mean())
    out = run_fixed_command(cfg, ControlVector(freq=1.0, yaw=1.0), duration)
    turn = float(np.degrees(np.abs(out["wz"][-tail:]).mean()))
    out = run_fixed_command(cfg, ControlVector(freq=1.0, pitch=-1.0), duration)
    span = out["t"][-1] - out["t"][-tail]
    dive = float((out["depth"][-1] - out["depth"][-tail]) / span)
    cot = power / (cfg.robot.mass_kg * 9.81 * max(speed, 1e-9))
    return {"speed_mps": speed, "turn_dps": turn, "dive_mps": dive,
            "power_w": power, "cot": cot}


def cost(metrics: dict) -> float:
    # normalized squared miss; zero inside every band is not required,
    # the search just pushes toward band centers
    return sum(((metrics[k] - tgt) / (tol * tgt)) ** 2
               for k, (tgt, tol) in TARGETS.items())


def in_bands(metrics: dict) -> bool:
    return all(abs(metrics[k] - tgt) <= tol * tgt
               for k, (tgt, tol) in TARGETS.items())


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--fast", action="store_true",
                    help="short runs, coarse search")
    args = ap.parse_args()
    duration = 12.0 if args.fast else 24.0
    sweeps = 2 if args.fast else 4

    base = load_config()
    values = {
        "k_thrust": base.plant.k_thrust,
        "k_heave": base.plant.k_heave,
        "drag_angular_z": base.plant.drag_angular_nms[2],
        "joint_damping_nms": base.plant.joint_damping_nms,
    }
    best = characterize(with_plant(base, **values), duration)
    best_cost = cost(best)
    print(f"seed  cost={best_cost:8.3f}  {fmt(best)}")

    for sweep in range(sweeps):
        moved = False
        for knob, step in KNOBS.items():
            for sign in (+1.0, -1.0):
                trial = dict(values)
                trial[knob] = values[knob] * (1.0 + sign * step)
                metrics = characterize(with_plant(base, **trial), duration)
                c = cost(metrics)
                if c < best_cost - 1e-6:
                    values, best, best_cost, moved = trial, metrics, c, True
                    print(f"{knob:18s} -> {trial[knob]:7.4f}  "
                          f"cost={c:8.3f}  {fmt(metrics)}")
                    break
        if not moved:
            for knob in KNOBS:
                KNOBS[knob] *= 0.5
            print(f"sweep {sweep}: no move, halving steps")

    print()
    print("final metrics:", fmt(best))
    print("in bands" if in_bands(best) else "OUT OF BANDS", file=sys.stderr)
    print()
    print("plant fragment for default.yaml:")
    print(f"  k_thrust: {values['k_thrust']:.4f}")
    print(f"  k_heave: {values['k_heave']:.4f}")
    print(f"  joint_damping_nms: {values['joint_damping_nms']:.4f}")
    print(f"  drag_angular_nms[2]: {values['drag_angular_z']:.4f}")
    return 0 if in_bands(best) else 1


def fmt(m: dict) -> str:
    return (f"v={m['speed_mps']:.4f} turn={m['turn_dps']:.2f} "
            f"dive={m['dive_mps']:.4f} P={m['power_w']:.2f} CoT={m['cot']:.3f}")


if __name__ == "__main__":
    sys.exit(main())
