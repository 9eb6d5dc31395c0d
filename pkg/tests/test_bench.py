"""OPE metrics, report files and the OTB directory loader."""

import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from amnet.bench import (
    PRECISION_THRESHOLDS,
    SUCCESS_THRESHOLDS,
    EvalReport,
    GtEchoTracker,
    center_error,
    evaluate_boxes,
    iou,
    ope_evaluate,
    precision_curve,
    read_curves,
    success_curve,
    write_report,
)
from amnet.geometry import BBox
from amnet.sequences import FormatError, SequenceRecord, load_otb_dataset, load_otb_sequence, write_png


def seq_of(boxes, name="s"):
    return SequenceRecord(name, [np.zeros((4, 4, 3), np.uint8)] * len(boxes), boxes)


class OffsetTracker:
    """Frame 0 from ground truth, then every box displaced 30 px to the right."""

    def __call__(self, seq):
        out = [BBox(*seq.boxes[0])]
        out += [BBox(x + 30, y, w, h) for x, y, w, h in seq.boxes[1:]]
        return out, float("nan")


class TestBoxMeasures:
    def test_identical(self):
        assert iou((3, 4, 5, 6), (3, 4, 5, 6)) == 1.0
        assert center_error((3, 4, 5, 6), (3, 4, 5, 6)) == 0.0

    def test_disjoint(self):
        assert iou((0, 0, 2, 2), (5, 5, 2, 2)) == 0.0

    def test_touching_edges_do_not_overlap(self):
        assert iou((0, 0, 2, 2), (2, 0, 2, 2)) == 0.0

    def test_half_shift(self):
        assert iou((0, 0, 2, 2), (1, 0, 2, 2)) == pytest.approx(1 / 3, abs=1e-15)
        assert center_error((0, 0, 2, 2), (1, 0, 2, 2)) == 1.0

    def test_accepts_bbox_objects(self):
        assert iou(BBox(0, 0, 2, 2), (1, 0, 2, 2)) == pytest.approx(1 / 3)

    @given(st.tuples(*[st.floats(-50, 50)] * 2, *[st.floats(0.5, 40)] * 2),
           st.tuples(*[st.floats(-50, 50)] * 2, *[st.floats(0.5, 40)] * 2))
    def test_iou_is_symmetric_and_bounded(self, a, b):
        v = iou(a, b)
        assert 0.0 <= v <= 1.0 + 1e-12
        assert v == pytest.approx(iou(b, a), abs=1e-12)


class TestCurves:
    def test_thresholds(self):
        assert len(PRECISION_THRESHOLDS) == len(SUCCESS_THRESHOLDS) == 51
        assert PRECISION_THRESHOLDS[20] == 20.0
        assert SUCCESS_THRESHOLDS[1] == pytest.approx(0.02)
        assert SUCCESS_THRESHOLDS[-1] == 1.0

    def test_gt_echo_on_any_sequence(self):
        rng = np.random.default_rng(0)
        boxes = np.column_stack([rng.uniform(0, 100, (9, 2)), rng.uniform(1, 30, (9, 2))])
        report = ope_evaluate(GtEchoTracker(), [seq_of(boxes)])
        np.testing.assert_array_equal(report.precision, 1.0)
        np.testing.assert_array_equal(report.success[:-1], 1.0)
        assert report.success[-1] == 0.0
        assert Fraction(report.success_auc).limit_denominator(1000) == Fraction(50, 51)

    def test_hand_built_three_frame_fixture(self):
        gt = np.array([[0, 0, 10, 10]] * 3, float)
        pred = [(0, 0, 10, 10), (5, 0, 10, 10), (0, 30, 10, 10)]
        report = evaluate_boxes("fixture", pred, gt)
        np.testing.assert_allclose(report.ious, [1, 1 / 3, 0], atol=1e-15)
        np.testing.assert_array_equal(report.center_errors, [0, 5, 30])
        expected_p = np.where(PRECISION_THRESHOLDS < 5, 1 / 3, np.where(PRECISION_THRESHOLDS < 30, 2 / 3, 1.0))
        np.testing.assert_array_equal(report.precision, expected_p)
        expected_s = np.array([2 / 3] * 17 + [1 / 3] * 33 + [0.0])
        np.testing.assert_array_equal(report.success, expected_s)
        assert report.precision_at_20 == 2 / 3
        assert report.success_auc == pytest.approx(67 / 153, abs=1e-15)

    def test_offset_tracker_scores_frame_zero_only(self):
        boxes = np.array([[10.0 + t, 20.0, 16.0, 16.0] for t in range(10)])
        report = ope_evaluate(OffsetTracker(), [seq_of(boxes)])
        assert report.precision_at_20 == pytest.approx(0.1)  # frame 0 alone
        np.testing.assert_array_equal(report.center_errors[1:], 30.0)
        assert report.success_auc == pytest.approx(0.1 * 50 / 51)

    def test_identical_sequences_pool_to_the_per_sequence_values(self):
        boxes = np.array([[10.0 + t, 20.0, 16.0, 16.0] for t in range(6)])
        one = ope_evaluate(OffsetTracker(), [seq_of(boxes, "a")])
        two = ope_evaluate(OffsetTracker(), [seq_of(boxes, "a"), seq_of(boxes, "b")])
        np.testing.assert_array_equal(one.precision, two.precision)
        np.testing.assert_array_equal(one.success, two.success)
        assert [r.name for r in two.per_sequence] == ["a", "b"]

    @given(st.lists(st.floats(0, 200), min_size=1, max_size=40), st.lists(st.floats(0, 1), min_size=1, max_size=40))
    def test_curves_are_monotone_and_bounded(self, errors, ious):
        p, s = precision_curve(errors), success_curve(ious)
        assert np.all(np.diff(p) >= 0) and np.all(np.diff(s) <= 0)
        assert p.min() >= 0 and p.max() <= 1 and s.min() >= 0 and s.max() <= 1
        assert p[50] >= p[20] >= p[0] and s[0] >= s[25] >= s[50]

    def test_auc_is_the_curve_mean(self):
        report = EvalReport("r", [1.0, 2.0], [0.3, 0.9])
        assert report.success_auc == float(report.success.mean())

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="2 predictions for 3 frames"):
            evaluate_boxes("x", [(0, 0, 1, 1)] * 2, np.ones((3, 4)))

    def test_no_sequences(self):
        with pytest.raises(ValueError):
            ope_evaluate(GtEchoTracker(), [])


def test_report_files_round_trip(tmp_path):
    report = EvalReport("r", [0.5, 3.0, 27.25], [0.9, 1 / 3, 0.0], fps=12.5)
    report.per_sequence = [report]
    write_report(report, tmp_path)
    curves = read_curves(tmp_path / "curves.csv")
    np.testing.assert_array_equal(curves["precision"][0], PRECISION_THRESHOLDS)
    np.testing.assert_array_equal(curves["precision"][1], report.precision)
    np.testing.assert_array_equal(curves["success"][0], SUCCESS_THRESHOLDS)
    np.testing.assert_array_equal(curves["success"][1], report.success)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary == {"precision_at_20": report.precision_at_20, "success_auc": report.success_auc, "fps": 12.5}
    assert (tmp_path / "sequences.csv").read_text().splitlines()[0].startswith("sequence,frames")


def test_nan_fps_is_written_as_null(tmp_path):
    write_report(EvalReport("r", [0.0], [1.0]), tmp_path)
    assert json.loads((tmp_path / "summary.json").read_text())["fps"] is None


# -------------------------------------------------------------------- OTB layout


BOXES = [(1.5, 2, 10, 12), (3, 4.25, 10, 12), (5, 6, 10, 12)]


def make_otb(root, sep=",", lines=None, n_frames=3):
    (root / "img").mkdir(parents=True)
    for i in range(n_frames):
        write_png(root / "img" / f"{i + 1:04d}.png", np.full((20, 30, 3), 10 * i, np.uint8))
    lines = lines if lines is not None else [sep.join(f"{v:g}" for v in b) for b in BOXES]
    (root / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    return root


class TestOTB:
    def test_fixture_parsed_exactly(self, tmp_path):
        seq = load_otb_sequence(make_otb(tmp_path / "Seq"))
        assert seq.name == "Seq" and len(seq) == 3
        np.testing.assert_array_equal(seq.boxes, BOXES)
        assert seq.frame(2).shape == (20, 30, 3) and seq.frame(2)[0, 0, 0] == 20

    def test_tab_separated_is_equivalent(self, tmp_path):
        a = load_otb_sequence(make_otb(tmp_path / "a", sep=","))
        b = load_otb_sequence(make_otb(tmp_path / "b", sep="\t"))
        np.testing.assert_array_equal(a.boxes, b.boxes)

    def test_malformed_line_is_cited(self, tmp_path):
        root = make_otb(tmp_path / "bad", lines=["1,2,3,4", "1,2,x,4", "1,2,3,4"])
        with pytest.raises(FormatError, match="line 2"):
            load_otb_sequence(root)

    def test_wrong_field_count(self, tmp_path):
        root = make_otb(tmp_path / "bad", lines=["1,2,3,4", "1,2,3,4", "1,2,3"])
        with pytest.raises(FormatError, match="line 3: expected 4 values"):
            load_otb_sequence(root)

    def test_count_mismatch(self, tmp_path):
        root = make_otb(tmp_path / "bad", n_frames=2)
        with pytest.raises(FormatError, match="2 frames but 3"):
            load_otb_sequence(root)

    def test_missing_annotation(self, tmp_path):
        (tmp_path / "img").mkdir()
        with pytest.raises(FormatError, match="groundtruth_rect.txt"):
            load_otb_sequence(tmp_path)

    def test_dataset_lists_sequence_directories(self, tmp_path):
        make_otb(tmp_path / "b")
        make_otb(tmp_path / "a")
        (tmp_path / "notes").mkdir()
        assert [s.name for s in load_otb_dataset(tmp_path)] == ["a", "b"]
        assert [s.name for s in load_otb_dataset(tmp_path, ["b"])] == ["b"]

    def test_empty_dataset(self, tmp_path):
        with pytest.raises(FormatError, match="no OTB sequences"):
            load_otb_dataset(tmp_path)
