"""Human-in-the-loop tracker: frame buffer, prompts, gestures, health."""
import numpy as np
import pytest

from flipperbot.backends import MaskResult, OracleBackend
from flipperbot.tracking import (FrameBuffer, Tracker, TrackerMode,
                                 health_signals, mask_centroid)

from conftest import make_frame

H, W = 48, 64


def ids_block(tid=1, y0=20, y1=28, x0=10, x1=18, h=H, w=W):
    ids = np.zeros((h, w), dtype=np.int16)
    ids[y0:y1, x0:x1] = tid
    return ids


def block_mask(area_side, x0=10, y0=10):
    mask = np.zeros((H, W), dtype=bool)
    mask[y0:y0 + area_side, x0:x0 + area_side] = True
    return mask


class ScriptedBackend:
    """Plays back a fixed list of MaskResults; init and propagate share it."""

    def __init__(self, results):
        self.results = list(results)

    def init_track(self, frame, prompts):
        return self.results.pop(0)

    def propagate(self, frame, prev_mask):
        return self.results.pop(0)


class RaisingBackend:
    def init_track(self, frame, prompts):
        return MaskResult(mask=block_mask(10), confidence=1.0)

    def propagate(self, frame, prev_mask):
        raise RuntimeError("segmentation backend crashed")


def make_tracker(cfg, backend=None):
    return Tracker(backend if backend is not None else OracleBackend(), cfg.tracker)


def bring_to_track(tr, t0=0.0, ids=None, click=(12, 22)):
    """Idle -> Init -> Track with three spaced clicks on the target."""
    tr.submit_frame(make_frame(ids if ids is not None else ids_block(), t=t0))
    tr.request_init(t0)
    for i in range(3):
        tr.submit_click(click[0], click[1], "left", t0 + 0.1 * (i + 1))
    assert tr.mode is TrackerMode.TRACK
    return t0 + 0.3


def event_names(tr):
    return [e.name for e in tr.events]


class TestFrameBuffer:
    def test_latest_frame_wins(self):
        buf = FrameBuffer()
        buf.submit(make_frame(ids_block(), t=0.0, frame_index=0))
        buf.submit(make_frame(ids_block(), t=0.1, frame_index=1))
        frame, stale = buf.read()
        assert frame.frame_index == 1
        assert not stale

    def test_stale_flag_after_reread(self):
        buf = FrameBuffer()
        buf.submit(make_frame(ids_block(), t=0.0))
        assert buf.read()[1] is False
        frame, stale = buf.read()
        assert stale and frame is not None  # old frame still served

    def test_peek_keeps_freshness(self):
        buf = FrameBuffer()
        buf.submit(make_frame(ids_block(), t=0.0))
        assert buf.peek() is not None
        assert buf.read()[1] is False

    def test_missing_channels_rejected(self):
        from flipperbot.world.state import Imu, SensorFrame
        buf = FrameBuffer()
        bare = SensorFrame(t=0.0, frame_index=0, depth_m=1.0,
                           imu=Imu(quat=np.array([1.0, 0, 0, 0]),
                                   angvel=np.zeros(3), accel=np.zeros(3)))
        with pytest.raises(ValueError):
            buf.submit(bare)

    def test_dimension_change_rejected(self):
        buf = FrameBuffer()
        buf.submit(make_frame(ids_block()))
        with pytest.raises(ValueError):
            buf.submit(make_frame(np.zeros((32, 32), np.int16)))


class TestInit:
    def test_idle_clicks_ignored(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.submit_click(12, 22, "left", 0.0)
        assert tr.mode is TrackerMode.IDLE
        assert "click_ignored" in event_names(tr)

    def test_three_prompts_reach_track(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        assert tr.track is not None
        assert tr.track.area_px == 64
        assert "init_done" in event_names(tr)

    def test_mixed_prompts_need_one_positive(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        tr.submit_click(12, 22, "left", 0.1)
        tr.submit_click(40, 5, "right", 0.2)
        tr.submit_click(41, 6, "right", 0.3)
        assert tr.mode is TrackerMode.TRACK

    def test_all_negative_prompts_discarded(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        for i, xy in enumerate(((40, 5), (41, 6), (42, 7))):
            tr.submit_click(xy[0], xy[1], "right", 0.1 * (i + 1))
        assert tr.mode is TrackerMode.INIT  # window still open for a retry
        assert "prompts_discarded" in event_names(tr)

    def test_window_expires_back_to_idle(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        tr.submit_click(12, 22, "left", 0.1)
        tr.tick(3.5)  # 3 s prompt window passed
        assert tr.mode is TrackerMode.IDLE
        assert "init_timeout" in event_names(tr)

    def test_window_boundary_inclusive(self, cfg):
        # deadline is t0 + 3.0; a prompt exactly on it still counts
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        tr.submit_click(12, 22, "left", 2.8)
        tr.submit_click(12, 22, "left", 2.9)
        tr.submit_click(12, 22, "left", 3.0)
        assert tr.mode is TrackerMode.TRACK

    def test_init_request_outside_idle_ignored(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.request_init(end + 0.1)
        assert tr.mode is TrackerMode.TRACK
        assert "init_request_ignored" in event_names(tr)

    def test_empty_mask_init_fails(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        for i in range(3):
            tr.submit_click(60, 2, "left", 0.1 * (i + 1))  # background clicks
        assert tr.mode is TrackerMode.INIT
        assert "init_failed" in event_names(tr)


class TestClicks:
    def test_debounce_drops_fast_double_click(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        tr.submit_click(12, 22, "left", 0.100)
        tr.submit_click(12, 22, "left", 0.130)  # 30 ms later: debounced
        tr.submit_click(12, 22, "left", 0.200)
        assert event_names(tr).count("click_debounced") == 1
        assert tr.mode is TrackerMode.INIT  # only two prompts landed

    def test_debounce_boundary(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        tr.request_init(0.0)
        # t=0 keeps the 50 ms gap exactly representable
        tr.submit_click(12, 22, "left", 0.0)
        tr.submit_click(12, 22, "left", 0.05)
        assert "click_debounced" not in event_names(tr)

    def test_out_of_bounds_click_raises(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        with pytest.raises(ValueError):
            tr.submit_click(W, 0, "left", 0.0)

    def test_unknown_button_raises(self, cfg):
        tr = make_tracker(cfg)
        tr.submit_frame(make_frame(ids_block()))
        with pytest.raises(ValueError):
            tr.submit_click(1, 1, "middle", 0.0)


class TestGesture:
    def test_two_right_clicks_within_window(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "right", end + 1.0)
        tr.submit_click(12, 22, "right", end + 2.0)
        assert tr.mode is TrackerMode.CORRECT
        assert "correction_requested" in event_names(tr)

    def test_spread_right_clicks_do_not_trigger(self, cfg):
        # 2.5 s apart: outside the 2 s gesture window
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "right", end + 0.5)
        tr.submit_click(12, 22, "right", end + 3.0)
        assert tr.mode is TrackerMode.TRACK

    def test_gesture_boundary_inclusive(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "right", end + 0.5)
        tr.submit_click(12, 22, "right", end + 2.5)  # exactly 2.0 s later
        assert tr.mode is TrackerMode.CORRECT

    def test_third_click_restarts_pending(self, cfg):
        # clicks at +0, +2.5, +4.0: the second re-arms, the third lands
        # 1.5 s after it and completes the gesture
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "right", end + 0.5)
        tr.submit_click(12, 22, "right", end + 3.0)
        tr.submit_click(12, 22, "right", end + 4.5)
        assert tr.mode is TrackerMode.CORRECT

    def test_left_click_in_track_ignored(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "left", end + 0.5)
        assert tr.mode is TrackerMode.TRACK
        assert "click_ignored" in event_names(tr)


class TestCorrect:
    def to_correct(self, cfg, tr):
        end = bring_to_track(tr)
        tr.submit_click(12, 22, "right", end + 0.5)
        tr.submit_click(12, 22, "right", end + 1.0)
        assert tr.mode is TrackerMode.CORRECT
        return end + 1.0

    def test_propagation_continues_during_correction(self, cfg):
        tr = make_tracker(cfg)
        t0 = self.to_correct(cfg, tr)
        # target moves while the operator is mid-correction
        tr.submit_frame(make_frame(ids_block(x0=30, x1=38), t=t0 + 0.1))
        mode, track = tr.tick(t0 + 0.1)
        assert mode is TrackerMode.CORRECT
        assert track.centroid[0] == pytest.approx(33.5)

    def test_timeout_returns_to_track_keeping_target(self, cfg):
        tr = make_tracker(cfg)
        t0 = self.to_correct(cfg, tr)
        tr.submit_frame(make_frame(ids_block(), t=t0 + 3.5))
        mode, track = tr.tick(t0 + 3.5)
        assert mode is TrackerMode.TRACK
        assert "correction_timeout" in event_names(tr)
        assert track is not None and not track.lost

    def test_reinit_switches_target(self, cfg):
        tr = make_tracker(cfg)
        t0 = self.to_correct(cfg, tr)
        ids = ids_block()
        ids[5:11, 40:46] = 2
        tr.submit_frame(make_frame(ids, t=t0 + 0.1))
        for i in range(3):
            tr.submit_click(42, 7, "left", t0 + 0.2 + 0.1 * i)
        assert tr.mode is TrackerMode.TRACK
        assert "reinit_done" in event_names(tr)
        assert tr.track.centroid[0] == pytest.approx(42.5)


class TestTrackHealth:
    def test_empty_mask_is_recoverable_loss(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        old_centroid = tr.track.centroid
        tr.submit_frame(make_frame(np.zeros((H, W), np.int16), t=end + 0.1))
        mode, track = tr.tick(end + 0.1)
        assert mode is TrackerMode.TRACK  # loss does not change mode
        assert track.lost and track.centroid is None
        assert track.last_centroid == old_centroid
        assert event_names(tr).count("track_lost") == 1
        # second empty frame: no duplicate loss event
        tr.submit_frame(make_frame(np.zeros((H, W), np.int16), t=end + 0.2))
        tr.tick(end + 0.2)
        assert event_names(tr).count("track_lost") == 1

    def test_reacquire_after_loss(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(np.zeros((H, W), np.int16), t=end + 0.1))
        tr.tick(end + 0.1)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.2))
        mode, track = tr.tick(end + 0.2)
        assert not track.lost
        assert "track_reacquired" in event_names(tr)

    def test_low_confidence_nonempty_mask_terminates(self, cfg):
        backend = ScriptedBackend([
            MaskResult(mask=block_mask(10), confidence=1.0),   # init
            MaskResult(mask=block_mask(10), confidence=0.2),   # under the gate
        ])
        tr = make_tracker(cfg, backend)
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.1))
        mode, track = tr.tick(end + 0.1)
        assert mode is TrackerMode.IDLE
        assert track is None
        names = event_names(tr)
        assert "track_terminated" in names
        # the alert fires on the same tick, before the gate
        assert names.index("health_alert") < names.index("track_terminated")

    def test_area_jump_alert(self, cfg):
        # 1000 px -> 400 px: |400-1000|/1000 = 0.6 > 0.5
        m1 = np.zeros((H, W), bool); m1[5:45, 5:30] = True   # 1000 px
        m2 = np.zeros((H, W), bool); m2[5:25, 5:25] = True   # 400 px
        backend = ScriptedBackend([MaskResult(m1, 1.0), MaskResult(m2, 1.0)])
        tr = make_tracker(cfg, backend)
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.1))
        tr.tick(end + 0.1)
        reasons = [e.detail.get("reason") for e in tr.events
                   if e.name == "health_alert"]
        assert "area_jump" in reasons

    def test_centroid_jump_alert(self, cfg):
        # displacement 30 px on a 64 px wide frame: over 0.25 * width
        backend = ScriptedBackend([
            MaskResult(block_mask(8, x0=5), 1.0),
            MaskResult(block_mask(8, x0=35), 1.0),
        ])
        tr = make_tracker(cfg, backend)
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.1))
        tr.tick(end + 0.1)
        reasons = [e.detail.get("reason") for e in tr.events
                   if e.name == "health_alert"]
        assert "centroid_jump" in reasons

    def test_fragmented_alert(self, cfg):
        frag = block_mask(8, x0=5) | block_mask(8, x0=40)
        backend = ScriptedBackend([
            MaskResult(block_mask(8, x0=5), 1.0),
            MaskResult(frag, 1.0),
        ])
        tr = make_tracker(cfg, backend)
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.1))
        tr.tick(end + 0.1)
        reasons = [e.detail.get("reason") for e in tr.events
                   if e.name == "health_alert"]
        assert "fragmented" in reasons

    def test_backend_exception_marks_lost_keeps_mode(self, cfg):
        tr = make_tracker(cfg, RaisingBackend())
        end = bring_to_track(tr)
        tr.submit_frame(make_frame(ids_block(), t=end + 0.1))
        mode, track = tr.tick(end + 0.1)
        assert mode is TrackerMode.TRACK
        assert track.lost
        assert "backend_fault" in event_names(tr)

    def test_terminate_from_outside(self, cfg):
        tr = make_tracker(cfg)
        end = bring_to_track(tr)
        tr.terminate(end + 1.0, "operator_stop")
        assert tr.mode is TrackerMode.IDLE and tr.track is None
        last = tr.events[-1]
        assert last.name == "track_terminated"
        assert last.detail["reason"] == "operator_stop"

    def test_tick_without_frames(self, cfg):
        tr = make_tracker(cfg)
        mode, track = tr.tick(0.0)
        assert mode is TrackerMode.IDLE and track is None


class TestHealthSignals:
    def test_first_tick_has_no_relative_signals(self, cfg):
        signals, alerts = health_signals(None, block_mask(10), 1.0, W, cfg.tracker)
        assert signals["area_change"] == 0.0
        assert signals["displacement_px"] == 0.0
        assert alerts == []

    def test_mask_centroid_empty(self):
        assert mask_centroid(np.zeros((4, 4), bool)) is None
