"""Line-delimited mining reports: the wire format between pipeline stages.

One JSON object per line. Mining-report rows carry the detection, its
verdict and the per-adjacent-frame evidence; hard-positive rows carry the
interpolated box, its tracklet id and both flanking detections.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .ingest import StreamParseError, record_to_json, _record_from_json
from .ioutil import atomic_write_text, canonical_json
from .model import (
    AdjacentEvidence,
    BoundingBox,
    EvidenceKind,
    HardPositive,
    LabeledDetection,
    MiningLabel,
    Verdict,
)


def _evidence_to_json(ev: AdjacentEvidence) -> dict:
    return {
        "frame": ev.frame_index,
        "kind": ev.kind.value,
        "ncc": ev.ncc,
        "max_iou": ev.max_iou,
        "pred_bbox": list(ev.pred_box.as_xywh()) if ev.pred_box else None,
    }


def _evidence_from_json(obj: dict) -> AdjacentEvidence:
    pred = obj.get("pred_bbox")
    return AdjacentEvidence(
        frame_index=obj["frame"],
        kind=EvidenceKind(obj["kind"]),
        ncc=obj.get("ncc"),
        max_iou=obj.get("max_iou"),
        pred_box=BoundingBox(*pred) if pred else None,
    )


def labeled_to_json(row: LabeledDetection) -> dict:
    rec = record_to_json(row.detection)
    rec["label"] = row.label.verdict.value
    rec["evidence"] = [_evidence_to_json(ev) for ev in row.label.evidence]
    return rec


def labeled_from_json(obj: dict) -> LabeledDetection:
    det = _record_from_json(obj)
    label = MiningLabel(
        Verdict(obj["label"]),
        tuple(_evidence_from_json(e) for e in obj.get("evidence", [])),
    )
    return LabeledDetection(det, label)


def hard_positive_to_json(hp: HardPositive) -> dict:
    return {
        "video": hp.video_id,
        "frame": hp.frame_index,
        "bbox": list(hp.box.as_xywh()),
        "tracklet_id": hp.tracklet_id,
        "ncc_confirm": hp.ncc_confirm_score,
        "flank_before": record_to_json(hp.flank_before),
        "flank_after": record_to_json(hp.flank_after),
    }


def hard_positive_from_json(obj: dict) -> HardPositive:
    return HardPositive(
        video_id=obj["video"],
        frame_index=obj["frame"],
        box=BoundingBox(*obj["bbox"]),
        tracklet_id=obj["tracklet_id"],
        flank_before=_record_from_json(obj["flank_before"]),
        flank_after=_record_from_json(obj["flank_after"]),
        ncc_confirm_score=obj["ncc_confirm"],
    )


def render_jsonl(objs: Iterable[dict]) -> str:
    lines = [canonical_json(o) for o in objs]
    return "\n".join(lines) + ("\n" if lines else "")


def write_mining_report(path: str | Path, rows: Sequence[LabeledDetection]) -> None:
    atomic_write_text(path, render_jsonl(labeled_to_json(r) for r in rows))


def read_mining_report(path: str | Path) -> list[LabeledDetection]:
    return [labeled_from_json(obj) for obj in _read_jsonl(path)]


def write_hp_report(path: str | Path, rows: Sequence[HardPositive]) -> None:
    atomic_write_text(path, render_jsonl(hard_positive_to_json(r) for r in rows))


def read_hp_report(path: str | Path) -> list[HardPositive]:
    return [hard_positive_from_json(obj) for obj in _read_jsonl(path)]


def _read_jsonl(path: str | Path) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise StreamParseError(line_no, f"invalid JSON ({exc.msg})") from None
    return out
