"""Flicker classification: hard negatives vs pseudo-positives.

For every high-confidence detection, a short tracklet is predicted into
each adjacent frame by NCC template matching inside an enlarged search
region. A prediction overlapping some detection in that frame (IoU at or
above the isolation threshold) makes the frame CONSISTENT; a prediction
overlapping nothing makes it ISOLATED. Low-NCC matches are rejected so
occlusions never count as isolation evidence.

Verdict table:
  any CONSISTENT frame                    -> pseudo-positive
  none CONSISTENT, both temporal sides
  with enough valid (ISOLATED) frames     -> hard negative
  otherwise                               -> unverified
"""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Mapping, Sequence

from .geometry import enlarge_clamped, iou
from .imageproc import GrayImage, ZeroVarianceError, crop_box, match_template
from .ingest import DetectionStream, FrameStore, filter_by_score
from .model import (
    AdjacentEvidence,
    BoundingBox,
    DetectionRecord,
    EvidenceKind,
    LabeledDetection,
    MiningConfig,
    MiningLabel,
    Verdict,
)

logger = logging.getLogger(__name__)


def predict_in_adjacent(
    det: DetectionRecord,
    target_frame: GrayImage,
    source_frame: GrayImage,
    cfg: MiningConfig,
    target_frame_index: int = -1,
) -> AdjacentEvidence:
    """Template-match one detection into one adjacent frame.

    The detection patch is cut from the source frame and searched inside
    its enlarged box cropped from the target frame. Returns MATCH_REJECTED
    evidence when the best NCC falls below ``cfg.ncc_threshold`` or the
    patch has no texture; otherwise ISOLATED evidence carrying the
    prediction, with ``max_iou`` left unset for the caller to fill in.
    """
    if (source_frame.width, source_frame.height) != (target_frame.width, target_frame.height):
        raise ValueError("source and target frames must share dimensions")
    region_box = enlarge_clamped(
        det.box, cfg.enlargement_px, source_frame.width, source_frame.height
    )
    template, _, _ = crop_box(source_frame, det.box)
    region, rx0, ry0 = crop_box(target_frame, region_box)
    try:
        m = match_template(template, region)
    except ZeroVarianceError:
        return AdjacentEvidence(target_frame_index, EvidenceKind.MATCH_REJECTED)
    if m.ncc < cfg.ncc_threshold:
        return AdjacentEvidence(target_frame_index, EvidenceKind.MATCH_REJECTED, ncc=m.ncc)
    pred = BoundingBox(rx0 + m.offset_x, ry0 + m.offset_y, det.box.w, det.box.h)
    return AdjacentEvidence(target_frame_index, EvidenceKind.ISOLATED, ncc=m.ncc, pred_box=pred)


def classify_detection(
    det: DetectionRecord,
    stream: DetectionStream,
    store: FrameStore,
    cfg: MiningConfig,
) -> MiningLabel:
    """Label one detection by examining every frame within the temporal window."""
    frame_count = store.frame_count(det.video_id)
    source = store.get(det.video_id, det.frame_index)
    evidence: list[AdjacentEvidence] = []
    for tf in range(det.frame_index - cfg.temporal_window, det.frame_index + cfg.temporal_window + 1):
        if tf == det.frame_index:
            continue
        if tf < 0 or tf >= frame_count:
            evidence.append(AdjacentEvidence(tf, EvidenceKind.OUT_OF_RANGE))
            continue
        ev = predict_in_adjacent(det, store.get(det.video_id, tf), source, cfg, tf)
        if ev.pred_box is None:
            evidence.append(ev)
            continue
        neighbors = [
            d for d in stream.at(det.video_id, tf) if d.score >= cfg.score_threshold
        ]
        max_iou = max((iou(ev.pred_box, d.box) for d in neighbors), default=0.0)
        kind = (
            EvidenceKind.CONSISTENT
            if max_iou >= cfg.iou_isolation_threshold
            else EvidenceKind.ISOLATED
        )
        evidence.append(replace(ev, kind=kind, max_iou=max_iou))

    if any(ev.kind is EvidenceKind.CONSISTENT for ev in evidence):
        verdict = Verdict.PSEUDO_POSITIVE
    else:
        isolated_before = sum(
            1
            for ev in evidence
            if ev.kind is EvidenceKind.ISOLATED and ev.frame_index < det.frame_index
        )
        isolated_after = sum(
            1
            for ev in evidence
            if ev.kind is EvidenceKind.ISOLATED and ev.frame_index > det.frame_index
        )
        if (
            isolated_before >= cfg.min_valid_frames_per_side
            and isolated_after >= cfg.min_valid_frames_per_side
        ):
            verdict = Verdict.HARD_NEGATIVE
        else:
            verdict = Verdict.UNVERIFIED
    return MiningLabel(verdict, tuple(evidence))


def mine_video(
    video_id: str,
    stream: DetectionStream,
    store: FrameStore,
    cfg: MiningConfig,
) -> dict[int, tuple[LabeledDetection, ...]]:
    """Classify every high-confidence detection of one video.

    Output is keyed by frame; per-frame order follows (box x, box y, ...).
    """
    high = filter_by_score(stream, cfg.score_threshold)
    out: dict[int, list[LabeledDetection]] = {}
    for frame_index, dets in high.frames(video_id).items():
        for det in dets:
            label = classify_detection(det, high, store, cfg)
            out.setdefault(frame_index, []).append(LabeledDetection(det, label))
    n = sum(len(v) for v in out.values())
    logger.debug("video %s: classified %d detections over %d frames", video_id, n, len(out))
    return {f: tuple(rows) for f, rows in sorted(out.items())}


def mine_stream(
    stream: DetectionStream, store: FrameStore, cfg: MiningConfig
) -> list[LabeledDetection]:
    """Mine every video in the stream; rows sorted by (video, frame, box)."""
    rows: list[LabeledDetection] = []
    for video_id in stream.videos():
        for labeled in mine_video(video_id, stream, store, cfg).values():
            rows.extend(labeled)
    return rows


def select_hn_frames(labels: Mapping[int, Sequence[LabeledDetection]]) -> set[int]:
    """Frames worth exporting: at least one pseudo-positive AND one hard negative."""
    selected = set()
    for frame_index, rows in labels.items():
        verdicts = {row.label.verdict for row in rows}
        if Verdict.PSEUDO_POSITIVE in verdicts and Verdict.HARD_NEGATIVE in verdicts:
            selected.add(frame_index)
    return selected
