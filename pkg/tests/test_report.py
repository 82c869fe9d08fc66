"""Post-run report metrics against hand-built telemetry logs.

Every log here is synthesized record by record, so each metric has a
closed-form expected value computed independently of the report code.
"""
import math

import numpy as np
import pytest

from flipperbot.report import format_report, summarize
from flipperbot.telemetry import LogReader, encode_record


class LogBuilder:
    def __init__(self, scenario=None, config=None, mode="explore"):
        self.lines = []
        self.seq = 0
        self.manifest = {
            "scenario_name": "synthetic",
            "scenario": scenario or {"name": "synthetic"},
            "config": config or {},
            "seed": 0,
            "mode": mode,
            "duration_s": 0.0,
            "record_count": 0,
        }

    def add(self, channel, t, data):
        self.lines.append(encode_record(channel, self.seq, t, data))
        self.seq += 1
        return self

    def sim(self, t, pos=(0, 0, -1), speed=0.0, power=10.0, contacts=(),
            targets=None):
        return self.add("sim", t, {
            "pos": list(pos), "vel": [speed, 0, 0], "speed": speed,
            "yaw": 0.0, "pitch": 0.0, "roll": 0.0, "power_w": power,
            "contacts": [{"t": ct, "kind": kind} for ct, kind in contacts],
            "targets": [list(p) for p in targets] if targets else [],
        })

    def behavior(self, t, mode):
        return self.add("behavior", t, {"mode": mode, "reason": "", "u": [0, 0, 0, 0]})

    def reader(self):
        self.manifest["record_count"] = self.seq
        return LogReader.from_lines(self.lines, self.manifest)


def maneuver_log(n_maneuvers, fail_indices=(), uncued_ts=(), kind="rock"):
    """n avoidance maneuvers 10 s apart, 2 s long; chosen ones take a hit."""
    b = LogBuilder()
    for k in range(n_maneuvers):
        t0 = 10.0 * k
        b.behavior(t0, "explore")
        b.behavior(t0 + 1.0, "avoid")
        b.behavior(t0 + 2.0, "avoid")
        b.behavior(t0 + 3.0, "explore")
        if k in fail_indices:
            b.sim(t0 + 2.5, contacts=[(t0 + 2.5, kind)])
        else:
            b.sim(t0 + 2.5)
    for t in uncued_ts:
        b.sim(t, contacts=[(t, kind)])
    return b


class TestAvoidance:
    def test_forty_one_of_forty_five(self):
        # 45 maneuvers, 4 with a wall strike: 41/45 = 91.1% success
        summary = summarize(maneuver_log(45, fail_indices=(3, 11, 27, 40),
                                         kind="glass_wall").reader())
        a = summary["avoidance"]
        assert a["maneuvers"] == 45
        assert a["events"] == 45
        assert a["failures"] == 4
        assert a["success_rate"] == pytest.approx(41 / 45)
        assert round(100 * a["success_rate"], 1) == 91.1
        assert a["failure_kinds"] == {"glass_wall": 4}
        assert "91.1% success" in format_report(summary)

    def test_clean_run(self):
        a = summarize(maneuver_log(10).reader())["avoidance"]
        assert a == {"maneuvers": 10, "events": 10, "failures": 0,
                     "success_rate": 1.0, "failure_kinds": {}, "collisions": 0}

    def test_uncued_collision_is_an_extra_event(self):
        # 2 clean maneuvers plus a hit the pipeline never reacted to
        a = summarize(maneuver_log(2, uncued_ts=(55.0,)).reader())["avoidance"]
        assert a["maneuvers"] == 2
        assert a["events"] == 3
        assert a["failures"] == 1
        assert a["success_rate"] == pytest.approx(2 / 3)

    def test_grace_window_attribution(self):
        # maneuver spans 1..3 s; a contact 0.4 s after exit is still cued,
        # one 0.6 s after is not
        for dt, cued_events in ((0.4, 1), (0.6, 2)):
            b = LogBuilder()
            b.behavior(0.0, "explore")
            b.behavior(1.0, "avoid")
            b.behavior(3.0, "explore")
            b.sim(3.0 + dt, contacts=[(3.0 + dt, "rock")])
            a = summarize(b.reader())["avoidance"]
            assert a["failures"] == 1
            assert a["events"] == cued_events

    def test_contact_dedupe_within_a_second(self):
        b = maneuver_log(1)
        b.sim(20.0, contacts=[(20.0, "rock"), (20.4, "rock")])
        b.sim(20.9, contacts=[(20.9, "rock")])  # still chained to 20.4
        b.sim(25.0, contacts=[(25.0, "rock")])
        a = summarize(b.reader())["avoidance"]
        assert a["collisions"] == 2

    def test_distinct_kinds_not_deduped(self):
        b = maneuver_log(1)
        b.sim(20.0, contacts=[(20.0, "rock"), (20.1, "glass_wall")])
        a = summarize(b.reader())["avoidance"]
        assert a["collisions"] == 2

    def test_surface_contact_is_scenery(self):
        b = maneuver_log(1)
        b.sim(20.0, contacts=[(20.0, "surface")])
        a = summarize(b.reader())["avoidance"]
        assert a["collisions"] == 0
        assert a["success_rate"] == 1.0

    def test_open_maneuver_at_log_end_closes(self):
        b = LogBuilder()
        b.behavior(0.0, "explore")
        b.behavior(1.0, "avoid")
        b.behavior(2.0, "avoid")  # log ends mid-maneuver
        a = summarize(b.reader())["avoidance"]
        assert a["maneuvers"] == 1


class TestTracking:
    def tracker_ev(self, b, t, event, **detail):
        b.add("tracker", t, {"event": event, **detail})

    def test_seconds_per_intervention(self):
        # 454 s of tracking over 4 interventions: 113.5 s each
        b = LogBuilder(mode="track_oracle")
        self.tracker_ev(b, 2.0, "init_done")
        for i in range(3):
            self.tracker_ev(b, 10.0 + i, "reinit_done")
        for i in range(4540):
            b.add("track", 2.0 + 0.1 * i, {"mode": "track", "lost": False,
                                           "centroid": [80, 60],
                                           "confidence": 1.0, "area_px": 50})
        tr = summarize(b.reader())["tracking"]
        assert tr["interventions"] == 4
        assert tr["track_time_s"] == pytest.approx(454.0)
        assert tr["s_per_intervention"] == pytest.approx(113.5)
        assert "113.5 s each" in format_report(summarize(b.reader()))

    def test_reacquire_times(self):
        b = LogBuilder(mode="track_oracle")
        self.tracker_ev(b, 1.0, "init_done")
        self.tracker_ev(b, 5.0, "track_lost")
        self.tracker_ev(b, 7.5, "track_reacquired")
        self.tracker_ev(b, 9.0, "track_lost")
        self.tracker_ev(b, 9.4, "track_reacquired")
        tr = summarize(b.reader())["tracking"]
        assert tr["losses"] == 2
        assert tr["reacquisitions"] == 2
        assert tr["reacquire_times_s"] == [2.5, 0.4]

    def test_terminations_and_alerts_surface(self):
        b = LogBuilder(mode="track_oracle")
        self.tracker_ev(b, 1.0, "init_done")
        self.tracker_ev(b, 2.0, "health_alert", reason="area_jump")
        self.tracker_ev(b, 3.0, "track_terminated", reason="low_confidence")
        tr = summarize(b.reader())["tracking"]
        assert tr["terminations"] == ["low_confidence"]
        assert tr["alerts"] == 1

    def test_correct_mode_counts_as_tracked_time(self):
        b = LogBuilder(mode="track_oracle")
        self.tracker_ev(b, 0.0, "init_done")
        for i, mode in enumerate(("track", "correct", "correct", "idle")):
            b.add("track", 0.1 * i, {"mode": mode, "lost": False,
                                     "centroid": None, "confidence": None,
                                     "area_px": 0})
        tr = summarize(b.reader())["tracking"]
        assert tr["track_time_s"] == pytest.approx(0.3)


class TestDepthMotion:
    def test_depth_metrics_match_numpy_oracle(self):
        depths = [1.0, 1.2, 1.3, 0.9, 1.1]
        b = LogBuilder(scenario={"name": "s", "depth_setpoint_m": 1.1})
        for i, d in enumerate(depths):
            b.add("sensor", 0.1 * i, {"depth_m": d, "quat": [1, 0, 0, 0],
                                      "angvel": [0, 0, 0]})
        got = summarize(b.reader())["depth"]
        err = np.array(depths) - 1.1
        assert got["setpoint_m"] == 1.1
        assert got["rmse_m"] == pytest.approx(float(np.sqrt(np.mean(err ** 2))))
        assert got["mae_m"] == pytest.approx(float(np.mean(np.abs(err))))
        assert got["max_abs_err_m"] == pytest.approx(0.2)

    def test_motion_metrics_and_cost_of_transport(self):
        b = LogBuilder(config={"robot": {"mass_kg": 10.0}})
        xs = [0.0, 0.2, 0.4, 0.6]
        for i, x in enumerate(xs):
            b.sim(0.1 * i, pos=(x, 0, -1), speed=0.2, power=19.62)
        m = summarize(b.reader())["motion"]
        assert m["mean_speed_mps"] == pytest.approx(0.2)
        assert m["distance_m"] == pytest.approx(0.6)
        # CoT = P / (m g v) = 19.62 / (10 * 9.81 * 0.2) = 1.0
        assert m["cost_of_transport"] == pytest.approx(1.0)

    def test_cot_absent_without_mass(self):
        b = LogBuilder()
        b.sim(0.0, speed=0.2, power=10.0)
        assert summarize(b.reader())["motion"]["cost_of_transport"] is None


class TestReach:
    def test_first_approach_time(self):
        b = LogBuilder()
        target = (2.0, 0.0, -1.0)
        for i, x in enumerate((0.0, 1.0, 1.6, 1.9, 2.0)):
            b.sim(float(i), pos=(x, 0, -1), targets=[target])
        r = summarize(b.reader())["reach"]
        assert r["time_to_reach_s"] == [2.0]  # |1.6 - 2.0| < 0.5 first at t=2

    def test_unreached_target_is_none(self):
        b = LogBuilder()
        b.sim(0.0, pos=(0, 0, -1), targets=[(9.0, 9.0, -1.0)])
        assert summarize(b.reader())["reach"]["time_to_reach_s"] == [None]


def test_empty_log_sections_degrade_gracefully():
    summary = summarize(LogBuilder().reader())
    assert summary["depth"] == {}
    assert summary["tracking"] == {}
    assert summary["reach"] == {}
    format_report(summary)  # must not raise
