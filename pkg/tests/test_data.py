"""Synthetic sequences and triplet sampling."""

import numpy as np
import pytest

from amnet.data import SynthConfig, sample_triplet, stack_batch, synth_corpus, synth_sequence
from amnet.geometry import crop_resize
from amnet.head import gt_sigma


def cfg(**kw):
    base = dict(n_frames=12, motion_noise=0.0)
    base.update(kw)
    return SynthConfig(**base)


class TestSynth:
    def test_constant_velocity_is_arithmetic(self):
        seq = synth_sequence(cfg(velocity=[2.0, 0.0], start=[20.0, 30.0]), seed=1)
        np.testing.assert_array_equal(seq.boxes[:, 0], 20 + 2 * np.arange(12))
        np.testing.assert_array_equal(seq.boxes[:, 1], 30)
        np.testing.assert_array_equal(seq.boxes[:, 2:], 16)

    def test_target_bounces_off_the_border(self):
        seq = synth_sequence(cfg(n_frames=80, velocity=[3.0, 0.0], start=[130.0, 30.0]), seed=2)
        x = seq.boxes[:, 0]
        assert x.max() <= 160 - 16 and x.min() >= 0
        # 142 + 3 overshoots the limit 144 by one and reflects to 143, then heads back
        assert list(x[3:7]) == [139, 142, 143, 140]

    def test_frames_are_uint8_rgb(self):
        seq = synth_sequence(cfg(), seed=3)
        assert len(seq) == 12
        assert all(f.shape == (120, 160, 3) and f.dtype == np.uint8 for f in seq.frames)

    def test_target_pixels_sit_inside_the_box(self):
        seq = synth_sequence(cfg(velocity=[1.0, 1.0], start=[40.0, 40.0]), seed=4)
        bg = synth_sequence(cfg(velocity=[1.0, 1.0], start=[40.0, 40.0], occlusions=1, occlusion_length=11), seed=4)
        for t in range(1, 12):
            if bg.meta["occluded"][t]:
                diff = np.any(seq.frame(t) != bg.frame(t), axis=-1)
                ys, xs = np.nonzero(diff)
                x, y, w, h = seq.boxes[t]
                assert xs.min() >= x and xs.max() < x + w and ys.min() >= y and ys.max() < y + h

    def test_same_seed_same_sequence(self):
        a = synth_sequence(cfg(camera_jitter=2), seed=5)
        b = synth_sequence(cfg(camera_jitter=2), seed=5)
        np.testing.assert_array_equal(np.stack(a.frames), np.stack(b.frames))
        np.testing.assert_array_equal(a.boxes, b.boxes)

    def test_different_seeds_differ(self):
        a = synth_sequence(cfg(), seed=5)
        b = synth_sequence(cfg(), seed=6)
        assert not np.array_equal(a.frames[0], b.frames[0])

    def test_camera_jitter_is_logged_and_bounded(self):
        seq = synth_sequence(cfg(n_frames=40, camera_jitter=2, velocity=[0.0, 0.0], start=[60.0, 50.0]), seed=7)
        shifts = np.array(seq.meta["camera"])
        assert np.abs(shifts).max() <= 2 and np.abs(shifts).max() > 0
        # a static target moves in the frame exactly opposite to the camera offset
        np.testing.assert_array_equal(seq.boxes[:, 0], 60 - shifts[:, 0])
        np.testing.assert_array_equal(seq.boxes[:, 1], 50 - shifts[:, 1])
        # the background shifts with the logged offset as well
        f0, f1 = seq.frame(0).astype(int), seq.frame(1).astype(int)
        (dx0, dy0), (dx1, dy1) = shifts[0], shifts[1]
        a = f0[10 + dy1 - dy0 : 30 + dy1 - dy0, 10 + dx1 - dx0 : 30 + dx1 - dx0]
        np.testing.assert_array_equal(a, f1[10:30, 10:30])

    def test_occlusions_hide_the_target(self):
        seq = synth_sequence(cfg(n_frames=30, occlusions=1, occlusion_length=5), seed=8)
        assert sum(seq.meta["occluded"]) == 5
        assert not seq.meta["occluded"][0]

    def test_corpus_seeds(self):
        corpus = synth_corpus(cfg(n_sequences=3), seed=2)
        assert [s.meta["seed"] for s in corpus] == [2000, 2001, 2002]

    @pytest.mark.parametrize("bad", [dict(width=32), dict(target_size=4), dict(n_frames=0),
                                     dict(occlusions=1, occlusion_length=12)])
    def test_invalid_configs(self, bad):
        with pytest.raises(ValueError):
            synth_sequence(cfg(**bad), seed=0)


class TestTriplets:
    def static_seq(self, **kw):
        return synth_sequence(cfg(velocity=[0.0, 0.0], start=[60.0, 50.0], **kw), seed=9)

    def test_static_target_peaks_at_the_roi_center(self):
        seq = self.static_seq()
        tr = sample_triplet(seq, 3, np.random.default_rng(0), 64, 192, max_shift=0)
        assert tr.peak == (96.0, 96.0)
        assert tr.roi_t.shape == tr.roi_prev.shape == (3, 192, 192)
        assert tr.template.shape == (3, 64, 64)
        np.testing.assert_array_equal(tr.roi_t, tr.roi_prev)  # nothing moved

    def test_shifted_crop_moves_the_peak_the_other_way(self):
        seq = self.static_seq()
        tr = sample_triplet(seq, 3, np.random.default_rng(0), 64, 192, shift=(12.0, -8.0))
        assert tr.peak == pytest.approx((96.0 + 8.0, 96.0 - 12.0))

    def test_motion_moves_the_peak(self):
        seq = synth_sequence(cfg(velocity=[2.0, 0.0], start=[40.0, 50.0]), seed=10)
        tr = sample_triplet(seq, 5, np.random.default_rng(0), 16, 48, max_shift=0)
        # 2 px in a 48-px crop that spans 3 * 16 image pixels -> 2 ROI pixels
        assert tr.peak == pytest.approx((24.0, 26.0))
        assert tr.box_wh == (16.0, 16.0)

    def test_template_is_the_previous_box(self):
        seq = synth_sequence(cfg(velocity=[2.0, 0.0], start=[40.0, 50.0]), seed=10)
        tr = sample_triplet(seq, 5, np.random.default_rng(0), 16, 16, max_shift=0)
        expected = crop_resize(seq.frame(4), seq.bbox(4).center, 16, 16) / 255.0
        np.testing.assert_allclose(tr.template.transpose(1, 2, 0), expected, atol=1e-6)

    def test_index_zero_is_rejected(self):
        with pytest.raises(IndexError):
            sample_triplet(self.static_seq(), 0, np.random.default_rng(0))

    def test_stack_batch_gaussians(self):
        seq = self.static_seq()
        rng = np.random.default_rng(1)
        trs = [sample_triplet(seq, t, rng, 16, 48, max_shift=4) for t in (1, 2, 3)]
        roi_t, roi_prev, tmpl, gt = stack_batch(trs)
        assert roi_t.shape == (3, 3, 48, 48) and tmpl.shape == (3, 3, 16, 16) and gt.shape == (3, 1, 48, 48)
        for tr, g in zip(trs, gt):
            r, c = np.unravel_index(np.argmax(g[0]), (48, 48))
            assert abs(r - tr.peak[0]) <= 0.5 and abs(c - tr.peak[1]) <= 0.5
        assert gt_sigma(*trs[0].box_wh) == pytest.approx(1.6)
