"""Off-flicker mining: single-frame detection dropouts inside tracklets.

Tracklets are built by greedy frame-to-frame IoU association with a
one-frame skip allowance; each skipped frame is a candidate "off-flicker".
A candidate is confirmed as a hard positive when (a) no high-confidence
detection already covers the interpolated box in the gap frame and (b) the
appearance at the interpolated box still matches the flanking detection
patch (NCC confirm), which rejects short occlusions.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .geometry import interpolate, iou
from .imageproc import ZeroVarianceError, box_to_rect, crop, ncc
from .ingest import DetectionStream, FrameStore, filter_by_score
from .model import DetectionRecord, HardPositive, MiningConfig

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Tracklet:
    """A chain of detections of one object; members 1 or 2 frames apart."""

    id: int
    video_id: str
    members: tuple[DetectionRecord, ...]
    gap_frames: tuple[int, ...]

    def __post_init__(self) -> None:
        frames = [m.frame_index for m in self.members]
        for a, b in zip(frames, frames[1:]):
            if b - a not in (1, 2):
                raise ValueError(f"tracklet members must be 1 or 2 frames apart, got {a}->{b}")
        expected_gaps = tuple(a + 1 for a, b in zip(frames, frames[1:]) if b - a == 2)
        if tuple(self.gap_frames) != expected_gaps:
            raise ValueError("gap_frames must list exactly the single-frame skips")


class _OpenTrack:
    __slots__ = ("seq", "members", "gaps")

    def __init__(self, seq: int, first: DetectionRecord):
        self.seq = seq
        self.members = [first]
        self.gaps: list[int] = []

    @property
    def head(self) -> DetectionRecord:
        return self.members[-1]


def _greedy_match(
    tracks: list[_OpenTrack], dets: list[DetectionRecord], min_iou: float
) -> list[tuple[_OpenTrack, DetectionRecord]]:
    """Highest-IoU-first unique assignment; ties fall back to creation order."""
    scored = []
    for track in tracks:
        for j, det in enumerate(dets):
            overlap = iou(track.head.box, det.box)
            if overlap >= min_iou:
                scored.append((-overlap, track.seq, j, track, det))
    scored.sort(key=lambda item: item[:3])
    used_tracks: set[int] = set()
    used_dets: set[int] = set()
    pairs = []
    for _, seq, j, track, det in scored:
        if seq in used_tracks or j in used_dets:
            continue
        used_tracks.add(seq)
        used_dets.add(j)
        pairs.append((track, det))
    return pairs


def build_tracklets(stream: DetectionStream, cfg: MiningConfig) -> list[Tracklet]:
    """Greedy IoU linker over high-confidence detections, one-frame skips allowed."""
    high = filter_by_score(stream, cfg.score_threshold)
    tracklets: list[Tracklet] = []
    for video_id in high.videos():
        finished: list[_OpenTrack] = []
        open_tracks: list[_OpenTrack] = []
        seq = 0
        for frame_index, dets in high.frames(video_id).items():
            still_open = []
            for t in open_tracks:
                if t.head.frame_index < frame_index - 2:
                    finished.append(t)
                else:
                    still_open.append(t)
            open_tracks = still_open

            remaining = list(dets)
            for gap in (1, 2):
                heads = [t for t in open_tracks if t.head.frame_index == frame_index - gap]
                for track, det in _greedy_match(heads, remaining, cfg.hp_link_iou):
                    if gap == 2:
                        track.gaps.append(frame_index - 1)
                    track.members.append(det)
                    remaining.remove(det)
            for det in remaining:
                open_tracks.append(_OpenTrack(seq, det))
                seq += 1
        finished.extend(open_tracks)

        finished.sort(key=lambda t: (t.members[0].sort_key()))
        for t in finished:
            if len(t.members) < cfg.hp_min_tracklet_len:
                continue
            tracklets.append(
                Tracklet(len(tracklets), video_id, tuple(t.members), tuple(t.gaps))
            )
    logger.debug("built %d tracklets", len(tracklets))
    return tracklets


def _confirm_patches(store: FrameStore, tracklet: Tracklet, before, cand, gap: int):
    """Equal-size crops: flank patch at g-1 and candidate patch at g."""
    frame_w, frame_h = store.dims(tracklet.video_id)
    cx, cy, cw, ch = box_to_rect(cand, frame_w, frame_h)
    # anchor the flank crop at the flank box corner but reuse the candidate size
    bx, by, _, _ = box_to_rect(before.box, frame_w, frame_h)
    bx = min(max(bx, 0), frame_w - cw)
    by = min(max(by, 0), frame_h - ch)
    flank_patch = crop(store.get(tracklet.video_id, gap - 1), bx, by, cw, ch)
    cand_patch = crop(store.get(tracklet.video_id, gap), cx, cy, cw, ch)
    return flank_patch, cand_patch


def find_off_flickers(
    tracklet: Tracklet,
    stream: DetectionStream,
    store: FrameStore,
    cfg: MiningConfig,
) -> list[HardPositive]:
    """Confirm each single-frame gap of one tracklet as a hard positive."""
    found: list[HardPositive] = []
    by_frame = {m.frame_index: m for m in tracklet.members}
    for gap in tracklet.gap_frames:
        before = by_frame[gap - 1]
        after = by_frame[gap + 1]
        cand = interpolate(before.box, after.box, 0.5)
        occupied = any(
            iou(cand, d.box) >= cfg.iou_isolation_threshold
            for d in stream.at(tracklet.video_id, gap)
            if d.score >= cfg.score_threshold
        )
        if occupied:
            continue
        flank_patch, cand_patch = _confirm_patches(store, tracklet, before, cand, gap)
        try:
            confirm = ncc(flank_patch, cand_patch)
        except ZeroVarianceError:
            continue
        if confirm < cfg.hp_ncc_confirm:
            continue
        found.append(
            HardPositive(
                video_id=tracklet.video_id,
                frame_index=gap,
                box=cand,
                tracklet_id=tracklet.id,
                flank_before=before,
                flank_after=after,
                ncc_confirm_score=confirm,
            )
        )
    return found


def mine_hard_positives(
    stream: DetectionStream, store: FrameStore, cfg: MiningConfig
) -> list[HardPositive]:
    """Build tracklets and confirm every off-flicker, deterministically ordered."""
    found: list[HardPositive] = []
    for tracklet in build_tracklets(stream, cfg):
        found.extend(find_off_flickers(tracklet, stream, store, cfg))
    found.sort(key=lambda hp: (hp.video_id, hp.frame_index, hp.box.x, hp.box.y))
    return found
