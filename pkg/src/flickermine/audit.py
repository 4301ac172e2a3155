"""Purity auditing: random sampling for human inspection, precision report.

The sample manifest is a CSV a human can fill in with one of three labels
per row: ``true_negative``, ``true_positive`` or ``ambiguous`` (ambiguous
covers cases like extreme head pose or severe occlusion where ground truth
is genuinely unclear). Precision is always recomputed from raw counts.
"""

from __future__ import annotations

import csv
import io
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .ingest import FrameStore
from .ioutil import atomic_write_text
from .model import LabeledDetection, Verdict

AUDIT_LABELS = ("true_negative", "true_positive", "ambiguous")
_GENERATOR_NAME = "python-random-mersenne-twister"
CROP_MARGIN_PX = 20


class AuditError(ValueError):
    """Invalid audit request or manifest contents."""


@dataclass(frozen=True)
class AuditReport:
    """Counted labels of one audited sample plus the derived precisions."""

    n_sampled: int
    n_true_negative: int
    n_true_positive: int
    n_ambiguous: int
    precision_tn: float
    precision_tn_plus_ambiguous: float

    def __post_init__(self) -> None:
        if self.n_true_negative + self.n_true_positive + self.n_ambiguous != self.n_sampled:
            raise AuditError("label counts must sum to n_sampled")

    @classmethod
    def from_counts(cls, tn: int, tp: int, ambiguous: int) -> AuditReport:
        n = tn + tp + ambiguous
        if n == 0:
            raise AuditError("cannot report on an empty sample")
        return cls(n, tn, tp, ambiguous, tn / n, (tn + ambiguous) / n)


@dataclass(frozen=True)
class AuditRow:
    crop_path: str
    video_id: str
    frame_index: int
    bbox: tuple[float, float, float, float]
    label: str  # empty until a human fills it in


def _crop_with_margin(store: FrameStore, row: LabeledDetection) -> np.ndarray:
    det = row.detection
    frame = store.get(det.video_id, det.frame_index)
    x0 = max(0, int(det.box.x) - CROP_MARGIN_PX)
    y0 = max(0, int(det.box.y) - CROP_MARGIN_PX)
    x1 = min(frame.width, int(det.box.x2 + 1) + CROP_MARGIN_PX)
    y1 = min(frame.height, int(det.box.y2 + 1) + CROP_MARGIN_PX)
    patch = frame.pixels[y0:y1, x0:x1]
    return np.round(patch * 255.0).astype(np.uint8)


def _safe_name(video_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9_-]", "_", video_id)


def sample_for_audit(
    rows: Sequence[LabeledDetection],
    n: int,
    seed: int,
    store: FrameStore,
    out_dir: str | Path,
    verdict: Verdict = Verdict.HARD_NEGATIVE,
) -> Path:
    """Sample ``n`` mined examples (without replacement) and write crops.

    Returns the manifest path. Reproducible: the same seed over the same
    report yields byte-identical manifests and crops.
    """
    population = [r for r in rows if r.label.verdict is verdict]
    population.sort(key=lambda r: r.detection.sort_key())
    if n > len(population):
        raise AuditError(
            f"requested {n} samples but only {len(population)} {verdict.value} examples exist"
        )
    picked = random.Random(seed).sample(population, n)

    out_dir = Path(out_dir)
    crops_dir = out_dir / "crops"
    crops_dir.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("# flickermine audit sample\n")
    buf.write(
        f"# generator={_GENERATOR_NAME} seed={seed} n={n} "
        f"population={len(population)} verdict={verdict.value}\n"
    )
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["crop_path", "video", "frame", "bbox", "label"])
    for i, row in enumerate(picked):
        det = row.detection
        name = f"{i:04d}_{_safe_name(det.video_id)}_{det.frame_index:08d}.png"
        Image.fromarray(_crop_with_margin(store, row), mode="L").save(crops_dir / name)
        writer.writerow(
            [
                f"crops/{name}",
                det.video_id,
                det.frame_index,
                "[" + ", ".join(repr(v) for v in det.box.as_xywh()) + "]",
                "",
            ]
        )
    manifest_path = out_dir / "audit_manifest.csv"
    atomic_write_text(manifest_path, buf.getvalue())
    return manifest_path


def read_audit_manifest(path: str | Path) -> list[AuditRow]:
    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        data_lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(data_lines)
    for rec in reader:
        bbox = tuple(float(v) for v in rec["bbox"].strip("[]").split(","))
        rows.append(
            AuditRow(rec["crop_path"], rec["video"], int(rec["frame"]), bbox, rec["label"].strip())
        )
    return rows


def compute_purity(rows: Sequence[AuditRow]) -> AuditReport:
    """Exact precision ratios from a fully labeled manifest."""
    counts = {label: 0 for label in AUDIT_LABELS}
    for i, row in enumerate(rows, start=1):
        if row.label not in counts:
            raise AuditError(
                f"row {i}: label {row.label!r} is not one of {', '.join(AUDIT_LABELS)}"
            )
        counts[row.label] += 1
    return AuditReport.from_counts(
        counts["true_negative"], counts["true_positive"], counts["ambiguous"]
    )
