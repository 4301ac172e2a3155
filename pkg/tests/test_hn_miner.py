import numpy as np
import pytest

from flickermine.hn_miner import (
    classify_detection,
    mine_video,
    predict_in_adjacent,
    select_hn_frames,
)
from flickermine.ingest import DetectionStream, FrameStore
from flickermine.model import (
    BoundingBox,
    DetectionRecord,
    EvidenceKind,
    LabeledDetection,
    MiningConfig,
    MiningLabel,
    Verdict,
)

from conftest import gray, write_frames

CFG = MiningConfig(temporal_window=1, enlargement_px=10, score_threshold=0.8)


def det(video="v", frame=0, box=(0, 0, 8, 8), score=0.9):
    return DetectionRecord(video, frame, BoundingBox(*box), score, "face")


class TestPredictInAdjacent:
    def test_static_scene_predicts_original_location(self, rng):
        frame = gray(rng.random((40, 50)))
        d = det(box=(20, 15, 8, 8))
        ev = predict_in_adjacent(d, frame, frame, CFG, target_frame_index=1)
        assert ev.kind is EvidenceKind.ISOLATED
        assert ev.ncc == pytest.approx(1.0, abs=1e-12)
        assert (ev.pred_box.x, ev.pred_box.y) == (20, 15)
        assert (ev.pred_box.w, ev.pred_box.h) == (8, 8)

    def test_translated_patch_recovered(self, rng):
        source = rng.random((40, 50))
        target = rng.random((40, 50))
        patch = source[15 : 15 + 8, 20 : 20 + 8]
        # plant the detection patch translated by (+8, -3) in the target
        target[12 : 12 + 8, 28 : 28 + 8] = patch
        d = det(box=(20, 15, 8, 8))
        ev = predict_in_adjacent(d, gray(target), gray(source), CFG, target_frame_index=1)
        assert ev.kind is EvidenceKind.ISOLATED
        assert ev.ncc >= 0.99
        assert (ev.pred_box.x - d.box.x, ev.pred_box.y - d.box.y) == (8, -3)

    def test_occluded_patch_rejected(self, rng):
        source = rng.random((40, 50))
        target = source.copy()
        # overwrite the whole search region with uncorrelated noise
        target[2:36, 8:40] = rng.random((34, 32))
        d = det(box=(20, 15, 8, 8))
        ev = predict_in_adjacent(d, gray(target), gray(source), CFG, target_frame_index=1)
        assert ev.kind is EvidenceKind.MATCH_REJECTED
        assert ev.pred_box is None
        assert ev.ncc < CFG.ncc_threshold

    def test_flat_template_rejected(self, rng):
        source = np.full((40, 50), 0.5)
        d = det(box=(20, 15, 8, 8))
        ev = predict_in_adjacent(d, gray(rng.random((40, 50))), gray(source), CFG, 1)
        assert ev.kind is EvidenceKind.MATCH_REJECTED
        assert ev.ncc is None


class _Scene:
    """Three static frames over one background; helpers to plant detections."""

    def __init__(self, tmp_path, rng, n_frames=3):
        self.bg = rng.random((60, 80))
        write_frames(tmp_path, "v", [self.bg] * n_frames)
        self.store = FrameStore(tmp_path)

    def stream(self, *records):
        return DetectionStream(tuple(records))


class TestClassifyDetection:
    def test_isolated_detection_is_hard_negative(self, tmp_path, rng):
        # flicker in the middle frame: its patch exists in adjacent frames
        # (static scene) but no detection sits there
        scene = _Scene(tmp_path, rng)
        flicker = det(frame=1, box=(30, 20, 10, 10))
        label = classify_detection(flicker, scene.stream(flicker), scene.store, CFG)
        assert label.verdict is Verdict.HARD_NEGATIVE
        kinds = [ev.kind for ev in label.evidence]
        assert kinds == [EvidenceKind.ISOLATED, EvidenceKind.ISOLATED]
        assert all(ev.max_iou == 0.0 for ev in label.evidence)

    def test_consistent_counterpart_is_pseudo_positive(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        current = det(frame=1, box=(30, 20, 10, 10))
        # neighbors at the tracklet-predicted location in both frames
        before = det(frame=0, box=(30, 20, 10, 10))
        after = det(frame=2, box=(31, 21, 10, 10))
        stream = scene.stream(before, current, after)
        label = classify_detection(current, stream, scene.store, CFG)
        assert label.verdict is Verdict.PSEUDO_POSITIVE
        assert any(ev.kind is EvidenceKind.CONSISTENT for ev in label.evidence)
        assert max(ev.max_iou for ev in label.evidence) > 0.8

    def test_first_frame_detection_is_unverified(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        first = det(frame=0, box=(30, 20, 10, 10))
        label = classify_detection(first, scene.stream(first), scene.store, CFG)
        assert label.verdict is Verdict.UNVERIFIED
        assert label.evidence[0].kind is EvidenceKind.OUT_OF_RANGE

    def test_occlusion_on_one_side_is_unverified(self, tmp_path, rng):
        bg = rng.random((60, 80))
        later = bg.copy()
        later[8:52, 18:62] = rng.random((44, 44))  # wipes the search region
        write_frames(tmp_path, "v", [bg, bg, later])
        store = FrameStore(tmp_path)
        current = det(frame=1, box=(30, 20, 10, 10))
        label = classify_detection(current, DetectionStream((current,)), store, CFG)
        assert label.verdict is Verdict.UNVERIFIED
        assert label.evidence[1].kind is EvidenceKind.MATCH_REJECTED

    def test_low_confidence_neighbors_do_not_confirm(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        current = det(frame=1, box=(30, 20, 10, 10))
        weak = det(frame=0, box=(30, 20, 10, 10), score=0.5)  # below threshold
        label = classify_detection(current, scene.stream(weak, current), scene.store, CFG)
        assert label.verdict is Verdict.HARD_NEGATIVE


class TestMineVideo:
    def test_empty_stream(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        assert mine_video("v", DetectionStream(()), scene.store, CFG) == {}

    def test_flicker_and_track_in_one_scene(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        track = [det(frame=f, box=(10, 40, 8, 8)) for f in range(3)]
        flicker = det(frame=1, box=(50, 10, 10, 10))
        labels = mine_video("v", scene.stream(*track, flicker), scene.store, CFG)
        by_det = {
            row.detection: row.label.verdict for rows in labels.values() for row in rows
        }
        assert by_det[flicker] is Verdict.HARD_NEGATIVE
        for d in track:
            assert by_det[d] is Verdict.PSEUDO_POSITIVE

    def test_output_sorted_by_frame_then_box(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        a = det(frame=1, box=(50, 10, 10, 10))
        b = det(frame=1, box=(10, 40, 8, 8))
        labels = mine_video("v", scene.stream(a, b), scene.store, CFG)
        xs = [row.detection.box.x for row in labels[1]]
        assert xs == sorted(xs)

    def test_exclusivity_of_verdicts(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        track = [det(frame=f, box=(10, 40, 8, 8)) for f in range(3)]
        flicker = det(frame=1, box=(50, 10, 10, 10))
        labels = mine_video("v", scene.stream(*track, flicker), scene.store, CFG)
        for rows in labels.values():
            for row in rows:
                assert row.label.verdict in (
                    Verdict.HARD_NEGATIVE,
                    Verdict.PSEUDO_POSITIVE,
                    Verdict.UNVERIFIED,
                )

    def test_raising_isolation_threshold_never_turns_hn_into_pp(self, tmp_path, rng):
        scene = _Scene(tmp_path, rng)
        track = [det(frame=f, box=(10, 40, 8, 8)) for f in range(3)]
        flicker = det(frame=1, box=(50, 10, 10, 10))
        stream = scene.stream(*track, flicker)
        low = mine_video("v", stream, scene.store, CFG)
        cfg_hi = MiningConfig(
            temporal_window=1, enlargement_px=10, iou_isolation_threshold=0.6
        )
        high = mine_video("v", stream, scene.store, cfg_hi)
        flat_low = {r.detection: r.label.verdict for rows in low.values() for r in rows}
        flat_high = {r.detection: r.label.verdict for rows in high.values() for r in rows}
        for d, v in flat_low.items():
            if v is Verdict.HARD_NEGATIVE:
                assert flat_high[d] is not Verdict.PSEUDO_POSITIVE


class TestSelectHnFrames:
    @staticmethod
    def _frame(*verdicts):
        return tuple(
            LabeledDetection(det(frame=0, box=(i * 10, 0, 5, 5)), MiningLabel(v))
            for i, v in enumerate(verdicts)
        )

    def test_hn_only_excluded(self):
        labels = {3: self._frame(Verdict.HARD_NEGATIVE)}
        assert select_hn_frames(labels) == set()

    def test_pp_and_hn_included(self):
        labels = {
            3: self._frame(Verdict.PSEUDO_POSITIVE, Verdict.PSEUDO_POSITIVE, Verdict.HARD_NEGATIVE)
        }
        assert select_hn_frames(labels) == {3}

    def test_unverified_counts_as_neither(self):
        labels = {3: self._frame(Verdict.PSEUDO_POSITIVE, Verdict.UNVERIFIED)}
        assert select_hn_frames(labels) == set()
