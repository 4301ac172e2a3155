import numpy as np
import pytest
from hypothesis import given, strategies as st

from flickermine.audit import (
    AuditError,
    AuditReport,
    AuditRow,
    compute_purity,
    read_audit_manifest,
    sample_for_audit,
)
from flickermine.ingest import FrameStore
from flickermine.model import (
    BoundingBox,
    DetectionRecord,
    LabeledDetection,
    MiningLabel,
    Verdict,
)

from conftest import write_frames


def hn_row(i, frame=0):
    det = DetectionRecord("v", frame, BoundingBox(4 + 3 * i, 6, 8, 8), 0.9, "face")
    return LabeledDetection(det, MiningLabel(Verdict.HARD_NEGATIVE))


def audit_rows(tn, tp, amb):
    rows = []
    for k, label in [(tn, "true_negative"), (tp, "true_positive"), (amb, "ambiguous")]:
        rows += [AuditRow(f"c{len(rows) + j}.png", "v", 0, (0, 0, 1, 1), label) for j in range(k)]
    return rows


@pytest.fixture
def store(tmp_path, rng):
    write_frames(tmp_path / "frames", "v", [rng.random((40, 60)) for _ in range(2)])
    return FrameStore(tmp_path / "frames")


class TestSampleForAudit:
    def _report(self, n):
        return [hn_row(i) for i in range(n)]

    def test_full_population_sampled_once(self, tmp_path, store):
        rows = self._report(5)
        manifest = sample_for_audit(rows, 5, seed=1, store=store, out_dir=tmp_path / "a")
        got = read_audit_manifest(manifest)
        assert len(got) == 5
        assert len({r.bbox for r in got}) == 5

    def test_same_seed_reproduces_manifest(self, tmp_path, store):
        rows = self._report(8)
        m1 = sample_for_audit(rows, 4, seed=7, store=store, out_dir=tmp_path / "a")
        m2 = sample_for_audit(rows, 4, seed=7, store=store, out_dir=tmp_path / "b")
        assert m1.read_text() == m2.read_text()

    def test_different_seeds_differ(self, tmp_path, store):
        rows = self._report(12)
        m1 = sample_for_audit(rows, 4, seed=1, store=store, out_dir=tmp_path / "a")
        m2 = sample_for_audit(rows, 4, seed=2, store=store, out_dir=tmp_path / "b")
        rows1 = {r.bbox for r in read_audit_manifest(m1)}
        rows2 = {r.bbox for r in read_audit_manifest(m2)}
        assert rows1 != rows2
        assert len(rows1) == len(rows2) == 4

    def test_oversampling_rejected(self, tmp_path, store):
        with pytest.raises(AuditError, match="only 3"):
            sample_for_audit(self._report(3), 4, seed=1, store=store, out_dir=tmp_path / "a")

    def test_crops_written_with_context_margin(self, tmp_path, store):
        rows = [hn_row(0)]
        out = tmp_path / "a"
        manifest = sample_for_audit(rows, 1, seed=1, store=store, out_dir=out)
        row = read_audit_manifest(manifest)[0]
        crop = out / row.crop_path
        assert crop.is_file()
        from PIL import Image

        with Image.open(crop) as im:
            w, h = im.size
        # box is 8x8 at (4,6): 20px margin clips at the frame edges
        assert w == 4 + 8 + 1 + 20 and h == 6 + 8 + 1 + 20

    def test_label_column_left_empty(self, tmp_path, store):
        manifest = sample_for_audit(self._report(2), 2, seed=3, store=store, out_dir=tmp_path / "a")
        assert all(r.label == "" for r in read_audit_manifest(manifest))

    def test_seed_recorded_in_header(self, tmp_path, store):
        manifest = sample_for_audit(self._report(2), 1, seed=99, store=store, out_dir=tmp_path / "a")
        header = manifest.read_text().splitlines()[1]
        assert "seed=99" in header and "generator=" in header


class TestComputePurity:
    def test_published_face_audit(self):
        report = compute_purity(audit_rows(453, 16, 42))
        assert report.n_sampled == 511
        assert report.precision_tn * 100 == pytest.approx(88.65, abs=0.01)
        assert report.precision_tn_plus_ambiguous * 100 == pytest.approx(96.87, abs=0.01)

    def test_annotated_movie_audit(self):
        report = compute_purity(audit_rows(187, 47, 0))
        assert report.n_sampled == 234
        assert report.precision_tn * 100 == pytest.approx(79.91, abs=0.01)

    def test_pedestrian_counts_recomputed_not_printed(self):
        # 244 tn + 21 ambiguous of 328: the ratios follow from the counts
        report = compute_purity(audit_rows(244, 63, 21))
        assert report.precision_tn * 100 == pytest.approx(74.39, abs=0.01)
        assert report.precision_tn_plus_ambiguous * 100 == pytest.approx(80.79, abs=0.01)

    def test_all_true_negative(self):
        report = compute_purity(audit_rows(10, 0, 0))
        assert report.precision_tn == 1.0
        assert report.precision_tn_plus_ambiguous == 1.0

    def test_unlabeled_row_rejected(self):
        rows = audit_rows(1, 0, 0) + [AuditRow("c.png", "v", 0, (0, 0, 1, 1), "")]
        with pytest.raises(AuditError, match="row 2"):
            compute_purity(rows)

    def test_unknown_label_rejected(self):
        with pytest.raises(AuditError, match="maybe"):
            compute_purity([AuditRow("c.png", "v", 0, (0, 0, 1, 1), "maybe")])

    @given(tn=st.integers(0, 400), tp=st.integers(0, 400), amb=st.integers(0, 400))
    def test_tn_precision_never_exceeds_tn_plus_ambiguous(self, tn, tp, amb):
        if tn + tp + amb == 0:
            return
        report = compute_purity(audit_rows(tn, tp, amb))
        assert report.precision_tn <= report.precision_tn_plus_ambiguous
        assert report.n_sampled == tn + tp + amb

    def test_counts_must_sum(self):
        with pytest.raises(AuditError):
            AuditReport(10, 5, 2, 2, 0.5, 0.7)
