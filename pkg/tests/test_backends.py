"""Segmentation backends: the identity-channel oracle and fault wrappers."""
import numpy as np
import pytest

from flipperbot.backends import (ConfidenceCollapseBackend,
                                 MirrorDuplicateBackend, OracleBackend,
                                 Prompt, SeamSplitBackend)

from conftest import make_frame


def ids_with_block(h=48, w=64, tid=1, y0=20, y1=28, x0=10, x1=18):
    ids = np.zeros((h, w), dtype=np.int16)
    ids[y0:y1, x0:x1] = tid
    return ids


class TestOracle:
    def test_click_selects_target(self):
        ids = ids_with_block(tid=3)
        frame = make_frame(ids)
        res = OracleBackend().init_track(frame, [Prompt(x=12, y=22, positive=True)])
        assert res.confidence == 1.0
        assert np.array_equal(res.mask, ids == 3)

    def test_majority_vote_over_positive_clicks(self):
        ids = ids_with_block(tid=1)
        ids[30:40, 30:40] = 2
        frame = make_frame(ids)
        b = OracleBackend()
        res = b.init_track(frame, [
            Prompt(x=12, y=22, positive=True),   # target 1
            Prompt(x=32, y=32, positive=True),   # target 2
            Prompt(x=35, y=35, positive=True),   # target 2
        ])
        assert b.target_id == 2
        assert np.array_equal(res.mask, ids == 2)

    def test_negative_clicks_do_not_vote(self):
        ids = ids_with_block(tid=1)
        ids[30:40, 30:40] = 2
        frame = make_frame(ids)
        b = OracleBackend()
        b.init_track(frame, [
            Prompt(x=12, y=22, positive=True),
            Prompt(x=32, y=32, positive=False),
            Prompt(x=35, y=35, positive=False),
        ])
        assert b.target_id == 1

    def test_background_click_gives_empty_mask(self):
        frame = make_frame(ids_with_block(tid=1))
        res = OracleBackend().init_track(frame, [Prompt(x=60, y=2, positive=True)])
        assert not res.mask.any()
        assert res.confidence == 0.0

    def test_propagate_tracks_and_reacquires(self):
        b = OracleBackend()
        b.init_track(make_frame(ids_with_block(tid=1)), [Prompt(x=12, y=22, positive=True)])
        gone = b.propagate(make_frame(np.zeros((48, 64), np.int16)), None)
        assert not gone.mask.any() and gone.confidence == 0.0
        back = b.propagate(make_frame(ids_with_block(tid=1, x0=40, x1=50)), None)
        assert back.confidence == 1.0
        assert back.mask.sum() == 80


class TestMirrorDuplicate:
    def inner(self, ids):
        b = OracleBackend()
        b.init_track(make_frame(ids), [Prompt(x=(np.nonzero(ids)[1][0]),
                                              y=(np.nonzero(ids)[0][0]),
                                              positive=True)])
        return b

    def test_merges_when_object_nears_plane(self):
        # object columns 10..17, plane at 25: nearest distance 8, gap 16 <= 40
        ids = ids_with_block()
        b = MirrorDuplicateBackend(self.inner(ids), plane_x=25, gap_px=40)
        res = b.propagate(make_frame(ids), None)
        orig = ids == 1
        refl = np.zeros_like(orig)
        ys, xs = np.nonzero(orig)
        refl[ys, 2 * 25 - xs] = True
        assert np.array_equal(res.mask, orig | refl)
        assert res.mask.sum() == 2 * orig.sum()  # disjoint halves

    def test_far_from_plane_untouched(self):
        # nearest column 17 against plane 60: gap 86 > 40
        ids = ids_with_block()
        b = MirrorDuplicateBackend(self.inner(ids), plane_x=60, gap_px=40)
        res = b.propagate(make_frame(ids), None)
        assert np.array_equal(res.mask, ids == 1)

    def test_gap_boundary_is_inclusive(self):
        # nearest column (the block's right edge, x0+7) exactly gap/2 from the
        # plane still merges; one pixel further does not
        for x0, merged in ((18, True), (17, False)):
            ids = ids_with_block(w=100, x0=x0, x1=x0 + 8)
            b = MirrorDuplicateBackend(self.inner(ids), plane_x=45, gap_px=40)
            res = b.propagate(make_frame(ids), None)
            assert bool(res.mask.sum() > (ids == 1).sum()) is merged

    def test_empty_mask_passthrough(self):
        ids = ids_with_block()
        inner = self.inner(ids)
        b = MirrorDuplicateBackend(inner, plane_x=25)
        res = b.propagate(make_frame(np.zeros_like(ids)), None)
        assert not res.mask.any()


class TestConfidenceCollapse:
    def setup_pair(self, decay=0.5):
        ids = ids_with_block()
        inner = OracleBackend()
        inner.init_track(make_frame(ids), [Prompt(x=12, y=22, positive=True)])
        return ids, ConfidenceCollapseBackend(inner, dark_intensity=45, decay=decay)

    def dark_frame(self, ids, level=20):
        return make_frame(ids, intensity=np.full(ids.shape, level, np.uint8))

    def test_geometric_decay_in_the_dark(self):
        ids, b = self.setup_pair(decay=0.5)
        confs = [b.propagate(self.dark_frame(ids), None).confidence for _ in range(4)]
        assert confs == pytest.approx([0.5, 0.25, 0.125, 0.0625])

    def test_bright_frame_resets(self):
        ids, b = self.setup_pair(decay=0.5)
        b.propagate(self.dark_frame(ids), None)
        b.propagate(self.dark_frame(ids), None)
        bright = b.propagate(make_frame(ids), None)  # default intensity 200
        assert bright.confidence == 1.0
        assert b.propagate(self.dark_frame(ids), None).confidence == 0.5

    def test_init_resets_counter(self):
        ids, b = self.setup_pair(decay=0.5)
        for _ in range(3):
            b.propagate(self.dark_frame(ids), None)
        res = b.init_track(make_frame(ids), [Prompt(x=12, y=22, positive=True)])
        assert res.confidence == 1.0


class TestSeamSplit:
    def inner_for(self, ids):
        b = OracleBackend()
        ys, xs = np.nonzero(ids)
        b.init_track(make_frame(ids), [Prompt(x=int(xs[0]), y=int(ys[0]), positive=True)])
        return b

    def test_mask_spanning_seam_fragments(self):
        ids = ids_with_block(x0=10, x1=40)  # spans seam at 20..26
        b = SeamSplitBackend(self.inner_for(ids), seam_x=20, gap_px=6)
        res = b.propagate(make_frame(ids), None)
        assert not res.mask[:, 20:26].any()
        assert res.mask[:, 10:20].any() and res.mask[:, 26:40].any()
        from scipy import ndimage
        _, n = ndimage.label(res.mask)
        assert n == 2

    def test_mask_beside_seam_untouched(self):
        ids = ids_with_block(x0=30, x1=40)  # entirely right of seam 20
        b = SeamSplitBackend(self.inner_for(ids), seam_x=20, gap_px=6)
        res = b.propagate(make_frame(ids), None)
        assert np.array_equal(res.mask, ids == 1)
