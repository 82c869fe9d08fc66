"""Post-run metrics from telemetry logs.

Everything here is derived purely from the log, so the same numbers come
out of a live run, a replayed run, or a log copied from another machine.
"""
from __future__ import annotations

import math
from typing import Optional, Union

import numpy as np

from .telemetry import LogReader

# a contact within this many seconds of a maneuver window still counts
# against that maneuver
MANEUVER_GRACE_S = 0.5
# contacts closer together than this are one collision event
COLLISION_DEBOUNCE_S = 1.0
# hull contact with these kinds is scenery, not an avoidance failure
_NON_OBSTACLE_KINDS = ("surface",)


def summarize(source: Union[str, LogReader]) -> dict:
    reader = LogReader(source) if isinstance(source, str) else source
    man = reader.manifest or {}
    scenario = man.get("scenario", {})
    cfg = man.get("config", {})

    sensor = list(reader.records("sensor"))
    sim = list(reader.records("sim"))
    behavior = list(reader.records("behavior"))
    tracker_ev = list(reader.records("tracker"))
    track = list(reader.records("track"))

    out: dict = {
        "scenario": man.get("scenario_name"),
        "mode": man.get("mode"),
        "seed": man.get("seed"),
        "duration_s": man.get("duration_s"),
        "records": man.get("record_count"),
    }
    out["depth"] = _depth_metrics(sensor, scenario)
    out["motion"] = _motion_metrics(sim, cfg)
    out["avoidance"] = _avoidance_metrics(behavior, sim)
    out["tracking"] = _tracking_metrics(tracker_ev, track, behavior)
    out["reach"] = _reach_metrics(sim)
    return out


def _depth_metrics(sensor: list, scenario: dict) -> dict:
    if not sensor:
        return {}
    setpoint = float(scenario.get("depth_setpoint_m", 1.1))
    depths = np.array([r["d"]["depth_m"] for r in sensor])
    err = depths - setpoint
    return {
        "setpoint_m": setpoint,
        "rmse_m": float(np.sqrt(np.mean(err ** 2))),
        "mae_m": float(np.mean(np.abs(err))),
        "mean_m": float(depths.mean()),
        "max_abs_err_m": float(np.max(np.abs(err))),
    }


def _motion_metrics(sim: list, cfg: dict) -> dict:
    if not sim:
        return {}
    power = np.array([r["d"]["power_w"] for r in sim])
    speed = np.array([r["d"]["speed"] for r in sim])
    pos = np.array([r["d"]["pos"] for r in sim])
    dist = float(np.sum(np.linalg.norm(np.diff(pos, axis=0), axis=1))) if len(pos) > 1 else 0.0
    mean_speed = float(speed.mean())
    mean_power = float(power.mean())
    mass = float(cfg.get("robot", {}).get("mass_kg", 0.0) or 0.0)
    cot = mean_power / (mass * 9.81 * mean_speed) if mass > 0 and mean_speed > 1e-6 else None
    return {
        "mean_speed_mps": mean_speed,
        "distance_m": dist,
        "mean_power_w": mean_power,
        "cost_of_transport": cot,
    }


def _collision_events(sim: list) -> list:
    """Deduplicated hull contacts as (t, kind), oldest first."""
    events = []
    last_t: dict = {}
    for rec in sim:
        for c in rec["d"].get("contacts", []):
            kind = c["kind"]
            if kind in _NON_OBSTACLE_KINDS:
                continue
            t = float(c["t"])
            if kind in last_t and t - last_t[kind] < COLLISION_DEBOUNCE_S:
                last_t[kind] = t
                continue
            last_t[kind] = t
            events.append((t, kind))
    return events


def _avoidance_metrics(behavior: list, sim: list) -> dict:
    segments = []
    seg_start = None
    last_t = None
    for rec in behavior:
        t = float(rec["t"])
        is_avoid = rec["d"]["mode"] == "avoid"
        if is_avoid and seg_start is None:
            seg_start = t
        elif not is_avoid and seg_start is not None:
            segments.append((seg_start, t))
            seg_start = None
        last_t = t
    if seg_start is not None and last_t is not None:
        segments.append((seg_start, last_t))

    collisions = _collision_events(sim)
    failures = []
    used = set()
    for t0, t1 in segments:
        hit = next((c for c in collisions
                    if t0 <= c[0] <= t1 + MANEUVER_GRACE_S and c not in used), None)
        if hit is not None:
            used.add(hit)
            failures.append({"t": hit[0], "kind": hit[1], "cued": True})
    # collisions with no maneuver around them: the pipeline never saw it
    for c in collisions:
        if c not in used:
            failures.append({"t": c[0], "kind": c[1], "cued": False})
    events = len(segments) + sum(1 for f in failures if not f["cued"])
    successes = events - len(failures)
    kinds: dict = {}
    for f in failures:
        kinds[f["kind"]] = kinds.get(f["kind"], 0) + 1
    return {
        "maneuvers": len(segments),
        "events": events,
        "failures": len(failures),
        "success_rate": successes / events if events else None,
        "failure_kinds": dict(sorted(kinds.items())),
        "collisions": len(collisions),
    }


def _tracking_metrics(tracker_ev: list, track: list, behavior: list) -> dict:
    if not track and not tracker_ev:
        return {}
    names = [r["d"]["event"] for r in tracker_ev]
    interventions = names.count("init_done") + names.count("reinit_done")
    losses = names.count("track_lost")
    reacq_times = []
    t_lost = None
    for r in tracker_ev:
        ev = r["d"]["event"]
        if ev == "track_lost":
            t_lost = float(r["t"])
        elif ev == "track_reacquired" and t_lost is not None:
            reacq_times.append(float(r["t"]) - t_lost)
            t_lost = None
    tracked = [r for r in track if r["d"]["mode"] in ("track", "correct")]
    track_time = len(tracked) * 0.1 if tracked else 0.0
    terminations = [r["d"].get("reason") for r in tracker_ev
                    if r["d"]["event"] == "track_terminated"]
    return {
        "interventions": interventions,
        "track_time_s": track_time,
        "s_per_intervention": track_time / interventions if interventions else None,
        "losses": losses,
        "reacquisitions": len(reacq_times),
        "reacquire_times_s": [round(x, 2) for x in reacq_times],
        "terminations": terminations,
        "alerts": names.count("health_alert"),
    }


def _reach_metrics(sim: list) -> dict:
    """Time until the hull first comes within 0.5 m of each target."""
    if not sim or not sim[0]["d"].get("targets"):
        return {}
    n = len(sim[0]["d"]["targets"])
    reach: list = [None] * n
    for rec in sim:
        pos = np.asarray(rec["d"]["pos"])
        for k, tp in enumerate(rec["d"]["targets"]):
            if reach[k] is None:
                if float(np.linalg.norm(pos - np.asarray(tp))) < 0.5:
                    reach[k] = float(rec["t"])
    return {"time_to_reach_s": reach}


def format_report(summary: dict) -> str:
    lines = [
        f"scenario {summary.get('scenario')}  mode {summary.get('mode')}  "
        f"seed {summary.get('seed')}  duration {summary.get('duration_s')} s",
    ]
    d = summary.get("depth") or {}
    if d:
        lines.append(
            f"depth: setpoint {d['setpoint_m']:.2f} m, rmse {d['rmse_m']:.3f} m, "
            f"mae {d['mae_m']:.3f} m, max err {d['max_abs_err_m']:.3f} m")
    m = summary.get("motion") or {}
    if m:
        cot = f", CoT {m['cost_of_transport']:.2f}" if m.get("cost_of_transport") else ""
        lines.append(
            f"motion: mean speed {m['mean_speed_mps']:.3f} m/s, distance "
            f"{m['distance_m']:.1f} m, mean power {m['mean_power_w']:.1f} W{cot}")
    a = summary.get("avoidance") or {}
    if a and a.get("events"):
        rate = f"{100.0 * a['success_rate']:.1f}%" if a["success_rate"] is not None else "n/a"
        lines.append(
            f"avoidance: {a['events']} events, {a['failures']} failures "
            f"({rate} success), failure kinds {a['failure_kinds']}")
    tr = summary.get("tracking") or {}
    if tr:
        spi = (f"{tr['s_per_intervention']:.1f}" if tr.get("s_per_intervention")
               else "n/a")
        lines.append(
            f"tracking: {tr['track_time_s']:.1f} s tracked, "
            f"{tr['interventions']} interventions ({spi} s each), "
            f"{tr['losses']} losses, {tr['reacquisitions']} reacquired, "
            f"terminations {tr['terminations']}")
    r = summary.get("reach") or {}
    if r:
        lines.append(f"reach: {r['time_to_reach_s']}")
    return "\n".join(lines)
