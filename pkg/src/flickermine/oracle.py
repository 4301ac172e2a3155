"""Brute-force reference labeler used to cross-check the miners.

Everything here is re-derived from the algorithm contract with plain
loops and direct summation: frame decoding, luma, IoU, the template scan,
the verdict table, the greedy linker and the gap confirmation. It shares
only the plain data types with the production code, never the geometry,
image or mining implementations, so agreement between the two is a real
two-implementation check.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image

from .model import DetectionRecord, MiningConfig, Verdict


def _load_gray(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im if im.mode in ("L", "RGB", "RGBA") else im.convert("RGB"))
    arr = arr.astype(np.float64) / 255.0
    if arr.ndim == 3:
        arr = 0.299 * arr[:, :, 0] + 0.587 * arr[:, :, 1] + 0.114 * arr[:, :, 2]
    return np.clip(arr, 0.0, 1.0)


class _Frames:
    def __init__(self, frames_root: str | Path, video_id: str):
        vdir = Path(frames_root) / video_id
        self.paths = sorted(vdir.glob("*.png")) + sorted(vdir.glob("*.jpg"))
        self.paths.sort(key=lambda p: int(p.stem))
        self.count = len(self.paths)
        self._cache: dict[int, np.ndarray] = {}

    def get(self, index: int) -> np.ndarray:
        if index not in self._cache:
            if len(self._cache) > 24:
                self._cache.clear()
            self._cache[index] = _load_gray(self.paths[index])
        return self._cache[index]


def _iou(a: tuple, b: tuple) -> float:
    ix = min(a[0] + a[2], b[0] + b[2]) - max(a[0], b[0])
    iy = min(a[1] + a[3], b[1] + b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    return inter / (a[2] * a[3] + b[2] * b[3] - inter)


def _rect(box: tuple, frame_w: int, frame_h: int) -> tuple[int, int, int, int]:
    x0 = math.floor(box[0] + 0.5)
    y0 = math.floor(box[1] + 0.5)
    x1 = math.floor(box[0] + box[2] + 0.5)
    y1 = math.floor(box[1] + box[3] + 0.5)
    w = max(1, min(x1 - x0, frame_w))
    h = max(1, min(y1 - y0, frame_h))
    return min(max(x0, 0), frame_w - w), min(max(y0, 0), frame_h - h), w, h


def _best_match(template: np.ndarray, region: np.ndarray):
    """Exhaustive scan, first-best wins (row-major). None if NCC undefined."""
    tz = template - template.mean()
    st = (tz * tz).sum()
    if st <= 0.0:
        return None
    th, tw = template.shape
    best = None
    for oy in range(region.shape[0] - th + 1):
        for ox in range(region.shape[1] - tw + 1):
            win = region[oy : oy + th, ox : ox + tw]
            wz = win - win.mean()
            sw = (wz * wz).sum()
            if sw <= 0.0:
                continue
            val = (tz * wz).sum() / math.sqrt(st * sw)
            if best is None or val > best[0]:
                best = (val, ox, oy)
    return best


def label_detections(
    records: Sequence[DetectionRecord], frames_root: str | Path, cfg: MiningConfig
) -> dict[DetectionRecord, Verdict]:
    """Apply the isolation rule table to every high-confidence detection."""
    high = [r for r in records if r.score >= cfg.score_threshold]
    by_video: dict[str, list[DetectionRecord]] = {}
    for r in high:
        by_video.setdefault(r.video_id, []).append(r)

    out: dict[DetectionRecord, Verdict] = {}
    for video_id, dets in by_video.items():
        frames = _Frames(frames_root, video_id)
        h, w = frames.get(0).shape
        per_frame: dict[int, list[DetectionRecord]] = {}
        for d in dets:
            per_frame.setdefault(d.frame_index, []).append(d)
        for det in dets:
            f = det.frame_index
            box = det.box.as_xywh()
            src = frames.get(f)
            tx, ty, tw_, th_ = _rect(box, w, h)
            template = src[ty : ty + th_, tx : tx + tw_]
            consistent = False
            valid_before = valid_after = 0
            for tf in range(f - cfg.temporal_window, f + cfg.temporal_window + 1):
                if tf == f or tf < 0 or tf >= frames.count:
                    continue
                m = cfg.enlargement_px
                rx0 = max(0.0, box[0] - m)
                ry0 = max(0.0, box[1] - m)
                region_box = (
                    rx0, ry0,
                    min(float(w), box[0] + box[2] + m) - rx0,
                    min(float(h), box[1] + box[3] + m) - ry0,
                )
                gx, gy, gw, gh = _rect(region_box, w, h)
                target = frames.get(tf)
                best = _best_match(template, target[gy : gy + gh, gx : gx + gw])
                if best is None or best[0] < cfg.ncc_threshold:
                    continue
                pred = (gx + best[1], gy + best[2], box[2], box[3])
                max_iou = 0.0
                for other in per_frame.get(tf, []):
                    max_iou = max(max_iou, _iou(pred, other.box.as_xywh()))
                if max_iou >= cfg.iou_isolation_threshold:
                    consistent = True
                elif tf < f:
                    valid_before += 1
                else:
                    valid_after += 1
            if consistent:
                out[det] = Verdict.PSEUDO_POSITIVE
            elif (
                valid_before >= cfg.min_valid_frames_per_side
                and valid_after >= cfg.min_valid_frames_per_side
            ):
                out[det] = Verdict.HARD_NEGATIVE
            else:
                out[det] = Verdict.UNVERIFIED
    return out


def find_hard_positives(
    records: Sequence[DetectionRecord], frames_root: str | Path, cfg: MiningConfig
) -> list[tuple[str, int, tuple[float, float, float, float]]]:
    """Greedy linking + midpoint interpolation + NCC confirm, re-derived."""
    high = sorted(
        (r for r in records if r.score >= cfg.score_threshold),
        key=DetectionRecord.sort_key,
    )
    by_video: dict[str, dict[int, list[DetectionRecord]]] = {}
    for r in high:
        by_video.setdefault(r.video_id, {}).setdefault(r.frame_index, []).append(r)

    results = []
    for video_id, per_frame in sorted(by_video.items()):
        frames = _Frames(frames_root, video_id)
        h, w = frames.get(0).shape
        tracks: list[dict] = []  # {"members": [...], "gaps": [...], "seq": int}
        open_ids: list[int] = []
        seq = 0
        for f in sorted(per_frame):
            open_ids = [
                t for t in open_ids if tracks[t]["members"][-1].frame_index >= f - 2
            ]
            remaining = list(per_frame[f])
            for gap in (1, 2):
                heads = [
                    t for t in open_ids
                    if tracks[t]["members"][-1].frame_index == f - gap
                ]
                cand = []
                for t in heads:
                    head_box = tracks[t]["members"][-1].box.as_xywh()
                    for j, det in enumerate(remaining):
                        overlap = _iou(head_box, det.box.as_xywh())
                        if overlap >= cfg.hp_link_iou:
                            cand.append((-overlap, tracks[t]["seq"], j, t, det))
                cand.sort(key=lambda c: c[:3])
                taken_t, taken_j = set(), set()
                for _, _, j, t, det in cand:
                    if t in taken_t or j in taken_j:
                        continue
                    taken_t.add(t)
                    taken_j.add(j)
                    if gap == 2:
                        tracks[t]["gaps"].append(f - 1)
                    tracks[t]["members"].append(det)
                remaining = [d for j, d in enumerate(remaining) if j not in taken_j]
            for det in remaining:
                tracks.append({"members": [det], "gaps": [], "seq": seq})
                open_ids.append(len(tracks) - 1)
                seq += 1

        for track in sorted(tracks, key=lambda t: t["members"][0].sort_key()):
            if len(track["members"]) < cfg.hp_min_tracklet_len:
                continue
            members = {m.frame_index: m for m in track["members"]}
            for g in track["gaps"]:
                before, after = members[g - 1], members[g + 1]
                bb, ab = before.box.as_xywh(), after.box.as_xywh()
                cand_box = tuple((bv + av) / 2.0 for bv, av in zip(bb, ab))
                if any(
                    _iou(cand_box, d.box.as_xywh()) >= cfg.iou_isolation_threshold
                    for d in per_frame.get(g, [])
                ):
                    continue
                cx, cy, cw, ch = _rect(cand_box, w, h)
                bx, by, _, _ = _rect(bb, w, h)
                bx = min(max(bx, 0), w - cw)
                by = min(max(by, 0), h - ch)
                tpl = frames.get(g - 1)[by : by + ch, bx : bx + cw]
                win = frames.get(g)[cy : cy + ch, cx : cx + cw]
                tz = tpl - tpl.mean()
                wz = win - win.mean()
                st, sw = (tz * tz).sum(), (wz * wz).sum()
                if st <= 0 or sw <= 0:
                    continue
                if (tz * wz).sum() / math.sqrt(st * sw) < cfg.hp_ncc_confirm:
                    continue
                results.append((video_id, g, cand_box))
    results.sort(key=lambda r: (r[0], r[1], r[2]))
    return results
