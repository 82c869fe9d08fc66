"""Headless orchestration of the full stack.

One Stack owns the world and steps it on a fixed cadence: a perception
tick (render, obstacle pipeline, tracker, behavior arbitration) every
tenth control tick (gait, PD, dynamics).  All randomness flows from the
run seed through named child streams, operator input is quantized to
perception ticks and logged, and nothing reads the wall clock, so a run
is a pure function of (scenario, config, mode, seed, operator events).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .backends import OracleBackend
from .behaviors import BehaviorContext, BehaviorEngine, BehaviorMode
from .config import Config, load_config
from .control import JointState, pd_step, rear_flipper_targets
from .detector import best_detection, detect
from .gait import TWO_PI, ControlVector, advance_phase, compose_gait
from .perception import (ReprojectionQ, TemporalObstacleFilter,
                         disparity_to_depth, detect_obstacles, fill_invalid)
from .telemetry import LogReader, LogWriter, RunManifest
from .tracking import Tracker, TrackerMode
from .world.dynamics import PlantParams, read_power, step
from .world.render import render_sensors
from .world.scenario import config_for_scenario, load_scenario, spawn_scenario
from .world.state import Imu, SensorFrame


@dataclass(frozen=True)
class ModeSettings:
    camera: bool
    avoidance: bool
    tracker: bool
    detector: bool
    hold_default: bool


MODES = {
    "explore": ModeSettings(camera=True, avoidance=True, tracker=False,
                            detector=False, hold_default=False),
    "depth_hold": ModeSettings(camera=False, avoidance=False, tracker=False,
                               detector=False, hold_default=True),
    "track_oracle": ModeSettings(camera=True, avoidance=False, tracker=True,
                                 detector=False, hold_default=False),
    "track_onboard": ModeSettings(camera=True, avoidance=False, tracker=False,
                                  detector=True, hold_default=False),
}


@dataclass
class RunResult:
    manifest: RunManifest
    lines: list
    summary: dict
    log_dir: Optional[str] = None


class Stack:
    def __init__(self, cfg: Config, scenario: dict, mode: str, seed: int,
                 writer: Optional[LogWriter] = None,
                 console: Optional[Callable] = None,
                 backend_factory: Optional[Callable] = None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; choose from {sorted(MODES)}")
        ms = MODES[mode]
        if scenario.get("avoidance") is not None:
            ms = ModeSettings(camera=ms.camera or bool(scenario["avoidance"]),
                              avoidance=bool(scenario["avoidance"]),
                              tracker=ms.tracker, detector=ms.detector,
                              hold_default=ms.hold_default)
        self.ms = ms
        self.mode_name = mode
        self.seed = seed
        self.cfg = config_for_scenario(scenario, cfg)
        self.spec = scenario
        self.writer = writer if writer is not None else LogWriter(None)
        self.console = console

        streams = np.random.SeedSequence(seed).spawn(2)
        self.render_rng = np.random.default_rng(streams[0])
        behavior_rng = np.random.default_rng(streams[1])

        self.world = spawn_scenario(scenario, seed, self.cfg)
        self.params = PlantParams.from_config(self.cfg)
        self.dt = self.cfg.control.dt
        per = self.cfg.perception
        self.per_steps = max(1, round(self.cfg.control.rate_hz / per.rate_hz))
        self.per_dt = self.per_steps * self.dt

        cam = self.cfg.camera
        self.q_matrix = ReprojectionQ.from_camera(cam.focal, cam.baseline_m,
                                                  cam.width / 2.0, cam.height / 2.0)
        self.obstacle_filter = TemporalObstacleFilter(
            window=per.temporal_window, majority=per.temporal_majority,
            consistency_radius_px=per.consistency_radius_frac * cam.width)
        self.engine = BehaviorEngine(
            self.cfg.behaviors, behavior_rng, initial_yaw=self.world.yaw(),
            hold_default=ms.hold_default,
            depth_setpoint=scenario.get("depth_setpoint_m"))
        backend = backend_factory() if backend_factory else OracleBackend()
        self.tracker = Tracker(backend, self.cfg.tracker) if ms.tracker else None

        ops = list(scenario.get("operator", []) or [])
        self._script_ops = sorted(ops, key=lambda e: float(e["t"]))
        self._script_idx = 0
        self._live_ops: list = []

        self.u = ControlVector()
        self.phase = 0.0
        self.step_index = 0
        self._prev_depth = self.world.depth
        self._depth_rate = 0.0
        self._pending_contacts: list = []
        self._loss_t: Optional[float] = None
        self._det_last_centroid: Optional[tuple] = None
        self._det_last_seen: float = -math.inf
        self._operator_stop = False
        self._energy_j = 0.0
        self._power_weight = 0
        self._gait_saturated_ticks = 0

    # -- operator input ------------------------------------------------------

    def inject_operator(self, event: dict) -> None:
        """Queue a live operator event for the next perception tick."""
        self._live_ops.append(dict(event))

    def _due_operator_events(self, t: float) -> list:
        due = []
        while (self._script_idx < len(self._script_ops)
               and float(self._script_ops[self._script_idx]["t"]) <= t + 1e-9):
            due.append(dict(self._script_ops[self._script_idx]))
            self._script_idx += 1
        for ev in self._live_ops:
            ev = dict(ev)
            ev["t"] = t
            due.append(ev)
        self._live_ops = []
        return due

    def _apply_operator(self, events: list, frame: SensorFrame, t: float) -> None:
        for ev in events:
            action = ev["action"]
            t_ev = float(ev["t"])
            if action == "init":
                if self.tracker:
                    self.tracker.request_init(t_ev)
                self._log_operator(t, {"action": "init", "t_event": t_ev})
            elif action == "stop":
                self._operator_stop = True
                self._log_operator(t, {"action": "stop", "t_event": t_ev})
            elif action in ("click", "click_target"):
                if action == "click_target":
                    x, y = self._resolve_target_pixel(frame, int(ev.get("target", 1)))
                else:
                    x, y = int(ev["x"]), int(ev["y"])
                button = ev.get("button", "left")
                if self.tracker:
                    self.tracker.submit_click(x, y, button, t_ev)
                self._log_operator(t, {"action": "click", "x": x, "y": y,
                                       "button": button, "t_event": t_ev})

    def _resolve_target_pixel(self, frame: SensorFrame, target_id: int) -> tuple:
        if frame.target_ids is not None:
            ys, xs = np.nonzero(frame.target_ids == target_id)
            if xs.size:
                return int(xs.mean()), int(ys.mean())
        cam = self.cfg.camera
        return cam.width // 2, cam.height // 2

    def _log_operator(self, t: float, data: dict) -> None:
        self.writer.write("operator", t, data)

    # -- main loop -----------------------------------------------------------

    def step_block(self) -> None:
        """One perception tick followed by its control steps."""
        self._perception_tick()
        for _ in range(self.per_steps):
            self._control_tick()

    def start(self, duration: float) -> int:
        """Write the run header record and return the perception block count.

        External drivers (the websocket bridge, tests) that step the stack
        themselves must call this first, or their logs will not replay: the
        header is record zero of every log."""
        self.writer.write("run", 0.0, {
            "scenario": self.spec.get("name", "custom"),
            "mode": self.mode_name,
            "seed": self.seed,
            "duration_s": duration,
        })
        return max(1, round(duration / self.per_dt))

    def run(self, duration_s: Optional[float] = None) -> RunResult:
        duration = float(duration_s if duration_s is not None
                         else self.spec.get("duration_s", 60.0))
        for _ in range(self.start(duration)):
            self.step_block()
        return self.finalize(duration)

    def finalize(self, duration: float) -> RunResult:
        manifest = RunManifest(
            scenario_name=str(self.spec.get("name", "custom")),
            scenario=self.spec,
            config=self.cfg.raw,
            seed=self.seed,
            mode=self.mode_name,
            duration_s=duration,
        )
        manifest = self.writer.finalize(manifest)
        summary = {
            "mean_power_w": (self._energy_j / (self._power_weight * self.dt)
                             if self._power_weight else 0.0),
            "maneuvers": [list(m) for m in self.engine.maneuvers],
            "final_depth_m": self.world.depth,
            "gait_saturated_ticks": self._gait_saturated_ticks,
        }
        return RunResult(manifest=manifest, lines=self.writer.lines,
                         summary=summary, log_dir=self.writer.log_dir)

    # -- ticks ---------------------------------------------------------------

    def _perception_tick(self) -> None:
        t = self.world.time
        frame_index = self.step_index // self.per_steps
        cam = self.cfg.camera

        if self.ms.camera:
            frame = render_sensors(self.world, cam, self.render_rng, frame_index)
        else:
            frame = SensorFrame(t=t, frame_index=frame_index,
                                depth_m=self.world.depth,
                                imu=Imu(quat=self.world.quat.copy(),
                                        angvel=self.world.angvel.copy(),
                                        accel=np.zeros(3)))

        depth = frame.depth_m
        self._depth_rate = (depth - self._prev_depth) / self.per_dt if frame_index else 0.0
        self._prev_depth = depth

        filtered = None
        if self.ms.avoidance:
            depth_map = fill_invalid(
                disparity_to_depth(frame.disparity, self.q_matrix),
                max_range_m=cam.max_range_m)
            det = detect_obstacles(
                depth_map, threshold_m=self.cfg.perception.classify_threshold_m,
                min_area_fraction=self.cfg.perception.min_area_fraction,
                frame_index=frame_index)
            filtered = self.obstacle_filter.push(det)
            self.writer.write("perception", t, {
                "frame": frame_index,
                "contours": len(det.contours),
                "centroids": [[round(c[0], 2), round(c[1], 2)] for c in det.centroids],
                "min_distance": _finite(det.min_distance),
                "confirmed": filtered.confirmed,
                "confirmed_distance": _finite(filtered.min_distance),
                "votes": filtered.votes,
            })

        tracking = False
        track_lost = False
        centroid = None
        last_centroid = None
        time_since_loss = math.inf
        alerts: list = []

        if self.tracker is not None:
            self.tracker.submit_frame(frame)
            self._apply_operator(self._due_operator_events(t), frame, t)
            mode, track = self.tracker.tick(t)
            tracking = mode in (TrackerMode.TRACK, TrackerMode.CORRECT)
            if track is not None and tracking:
                track_lost = track.lost
                centroid = track.centroid
                last_centroid = track.last_centroid
                if track.lost:
                    if self._loss_t is None:
                        self._loss_t = t
                    time_since_loss = t - self._loss_t
                else:
                    self._loss_t = None
                    time_since_loss = 0.0
            for ev in self.tracker.events:
                self.writer.write("tracker", ev.t, {"event": ev.name, **ev.detail})
                if ev.name == "health_alert":
                    alerts.append(ev.detail.get("reason"))
            self.tracker.events.clear()
            self.writer.write("track", t, {
                "mode": mode.value,
                "lost": track_lost,
                "centroid": _round_pt(centroid),
                "confidence": round(track.confidence, 4) if track else None,
                "area_px": track.area_px if track else 0,
            })
        elif self.ms.detector:
            self._apply_operator(self._due_operator_events(t), frame, t)
            dets = detect(frame.intensity, self.cfg.detector)
            best = best_detection(dets, self.cfg.detector)
            if best is not None:
                tracking = True
                centroid = best.centroid
                self._det_last_centroid = best.centroid
                self._det_last_seen = t
            elif self._det_last_centroid is not None:
                tracking = True
                track_lost = True
                last_centroid = self._det_last_centroid
                time_since_loss = t - self._det_last_seen
            self.writer.write("detector", t, {
                "detections": len(dets),
                "best": _round_pt(best.centroid) if best else None,
                "score": round(best.score, 3) if best else 0.0,
            })
        else:
            self._apply_operator(self._due_operator_events(t), frame, t)

        ctx = BehaviorContext(
            t=t, depth=depth, depth_rate=self._depth_rate,
            yaw=self.world.yaw(), heading_setpoint=self.engine.heading_setpoint,
            image_size=(cam.width, cam.height),
            tracking=tracking, track_lost=track_lost, centroid=centroid,
            last_centroid=last_centroid, time_since_loss=time_since_loss,
            obstacles=filtered, avoidance_enabled=self.ms.avoidance,
            operator_stop=self._operator_stop,
        )
        out = self.engine.step(ctx)
        if out.mode is BehaviorMode.END_TRACK:
            if self.tracker is not None:
                self.tracker.terminate(t, out.reason)
                for ev in self.tracker.events:
                    self.writer.write("tracker", ev.t, {"event": ev.name, **ev.detail})
                self.tracker.events.clear()
            self._operator_stop = False
        self.u = out.u

        self.writer.write("behavior", t, {
            "mode": out.mode.value,
            "reason": out.reason,
            "u": [out.u.freq, out.u.roll, out.u.pitch, out.u.yaw],
        })
        self.writer.write("sensor", t, {
            "depth_m": depth,
            "quat": self.world.quat.tolist(),
            "angvel": self.world.angvel.tolist(),
        })
        speed = float(np.linalg.norm(self.world.vel))
        self.writer.write("sim", t, {
            "pos": self.world.pos.tolist(),
            "vel": self.world.vel.tolist(),
            "speed": speed,
            "yaw": self.world.yaw(),
            "pitch": self.world.pitch(),
            "roll": self.world.roll(),
            "power_w": read_power(self.world, self.params),
            "contacts": [{"t": round(c.t, 3), "kind": c.kind} for c in self._pending_contacts],
            "targets": [tg.pos.tolist() for tg in self.world.targets],
        })
        self._pending_contacts = []

        if frame.intensity is not None:
            self.writer.write_frame(frame.intensity, t)
        if self.console is not None:
            self.console({
                "type": "tick", "t": t, "depth": depth,
                "behavior": out.mode.value,
                "tracker": (self.tracker.mode.value if self.tracker else None),
                "centroid": _round_pt(centroid),
                "alerts": alerts,
                "frame": frame.intensity,
                "confirmed_distance": _finite(filtered.min_distance) if filtered else None,
            })

    def _control_tick(self) -> None:
        t = self.world.time
        targets = compose_gait(self.cfg.gait, self.u, t, phase=self.phase,
                               limits=self.cfg.modulation)
        phase_rate = TWO_PI * self.cfg.gait.spec.f0_hz * abs(self.u.freq)
        targets = rear_flipper_targets(targets, self.u.pitch, self.phase,
                                       phase_rate, self.cfg.control)
        if targets.saturated.any():
            self._gait_saturated_ticks += 1
        state = JointState(q=self.world.q, qd=self.world.qd, t=t)
        cmd = pd_step(targets, state, self.cfg.control.kp_vec(),
                      self.cfg.control.kd_vec(), self.cfg.control.effort_vec())
        step(self.world, cmd, self.dt, self.params)
        self._pending_contacts.extend(self.world.contacts)
        self._energy_j += read_power(self.world, self.params) * self.dt
        self._power_weight += 1

        if self.step_index % self.cfg.telemetry.control_decimation == 0:
            self.writer.write("gait", t, {
                "q_des": [round(v, 6) for v in targets.q],
                "qd_des": [round(v, 6) for v in targets.qd],
                "saturated": int(targets.saturated.sum()),
            })
            self.writer.write("control", t, {
                "effort": [round(v, 6) for v in cmd.effort],
                "saturated": int(cmd.saturated.sum()),
                "fault": cmd.fault,
            })
        self.phase = advance_phase(self.cfg.gait.spec, self.phase,
                                   self.u.freq, self.dt)
        self.step_index += 1


def _finite(x: float) -> Optional[float]:
    return round(x, 4) if math.isfinite(x) else None


def _round_pt(pt: Optional[tuple]) -> Optional[list]:
    if pt is None:
        return None
    return [round(pt[0], 2), round(pt[1], 2)]


def run(scenario: str = "pool", mode: str = "explore", seed: int = 0,
        duration: Optional[float] = None, config_path: Optional[str] = None,
        log_dir: Optional[str] = None, console: Optional[Callable] = None,
        backend_factory: Optional[Callable] = None,
        save_frames: bool = False) -> RunResult:
    """Load, spawn and run a scenario end to end."""
    cfg = load_config(config_path)
    spec = load_scenario(scenario) if isinstance(scenario, str) else scenario
    writer = LogWriter(log_dir, save_frames=save_frames)
    stack = Stack(cfg, spec, mode, seed, writer=writer, console=console,
                  backend_factory=backend_factory)
    return stack.run(duration)


@dataclass
class ReplayReport:
    matches: bool
    total_original: int
    total_replay: int
    first_divergence: Optional[int] = None
    detail: str = ""

    def __str__(self) -> str:
        if self.matches:
            return f"replay exact: {self.total_original} records match"
        return (f"replay DIVERGED at record {self.first_divergence}: "
                f"{self.detail}")


def replay(log_dir: str) -> ReplayReport:
    """Re-execute a logged run from its manifest and compare record by
    record.  Operator events come from the log, not the scenario, so live
    console input replays exactly."""
    reader = LogReader(log_dir)
    if reader.manifest is None:
        raise FileNotFoundError(f"no manifest in {log_dir}")
    man = reader.manifest
    from .config import config_from_dict
    cfg = config_from_dict(man["config"])
    spec = dict(man["scenario"])
    # replace scripted operator input with the logged, resolved events
    logged_ops = []
    for rec in reader.records("operator"):
        d = rec["d"]
        ev = {"t": d["t_event"], "action": d["action"]}
        if d["action"] == "click":
            ev.update({"x": d["x"], "y": d["y"], "button": d["button"]})
        logged_ops.append(ev)
    spec["operator"] = logged_ops
    stack = Stack(cfg, spec, man["mode"], int(man["seed"]), writer=LogWriter(None))
    result = stack.run(man["duration_s"])
    orig = reader.lines
    new = result.lines
    for i, (a, b) in enumerate(zip(orig, new)):
        if a != b:
            return ReplayReport(matches=False, total_original=len(orig),
                                total_replay=len(new), first_divergence=i,
                                detail=f"original={a[:160]} replay={b[:160]}")
    if len(orig) != len(new):
        return ReplayReport(matches=False, total_original=len(orig),
                            total_replay=len(new),
                            first_divergence=min(len(orig), len(new)),
                            detail="record count mismatch")
    return ReplayReport(matches=True, total_original=len(orig),
                        total_replay=len(new))


def run_fixed_command(cfg: Config, u: ControlVector, duration_s: float,
                      seed: int = 0, scenario: str = "empty") -> dict:
    """Open-loop characterization: hold one control vector and record the
    body trajectory.  No camera, no behaviors."""
    spec = load_scenario(scenario)
    world = spawn_scenario(spec, seed, cfg)
    params = PlantParams.from_config(cfg)
    dt = cfg.control.dt
    n = round(duration_s / dt)
    phase = 0.0
    out = {k: np.zeros(n) for k in
           ("t", "x", "y", "z", "vx", "yaw", "pitch", "roll", "power",
            "wz", "depth")}
    for i in range(n):
        t = world.time
        targets = compose_gait(cfg.gait, u, t, phase=phase, limits=cfg.modulation)
        phase_rate = TWO_PI * cfg.gait.spec.f0_hz * abs(u.freq)
        targets = rear_flipper_targets(targets, u.pitch, phase, phase_rate,
                                       cfg.control)
        cmd = pd_step(targets, JointState(q=world.q, qd=world.qd, t=t),
                      cfg.control.kp_vec(), cfg.control.kd_vec(),
                      cfg.control.effort_vec())
        step(world, cmd, dt, params)
        phase = advance_phase(cfg.gait.spec, phase, u.freq, dt)
        out["t"][i] = world.time
        out["x"][i], out["y"][i], out["z"][i] = world.pos
        out["vx"][i] = world.vel[0]
        out["yaw"][i] = world.yaw()
        out["pitch"][i] = world.pitch()
        out["roll"][i] = world.roll()
        out["wz"][i] = world.angvel[2]
        out["power"][i] = read_power(world, params)
        out["depth"][i] = world.depth
    return out
