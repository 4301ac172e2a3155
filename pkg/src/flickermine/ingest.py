"""Detection-stream parsing and random access to extracted video frames.

Stream format: UTF-8, one JSON record per line with fields
``video`` (str), ``frame`` (int), ``bbox`` ([x, y, w, h] in pixels),
``score`` (0..1) and ``category`` (str). Unknown fields are ignored.

Frame layout: ``<root>/<video_id>/<00000000>.png`` (or ``.jpg``), indices
contiguous from zero, all frames of a video sharing one size.
"""

from __future__ import annotations

import json
import re
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

import numpy as np
from PIL import Image

from .imageproc import GrayImage, to_gray
from .model import BoundingBox, DetectionRecord

_FRAME_FILE_RE = re.compile(r"^(\d{8})\.(png|jpg)$")


class StreamParseError(ValueError):
    """A detection-stream line failed validation; carries the line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no


class FrameStoreError(OSError):
    """Frame lookup or decoding failed."""


@dataclass(frozen=True)
class StreamMeta:
    """Optional provenance of a detection stream."""

    detector: str | None = None
    category: str | None = None
    created_at: str | None = None


@dataclass(frozen=True, eq=False)
class DetectionStream:
    """Immutable detection set, grouped by video and sorted by frame."""

    records: tuple[DetectionRecord, ...]
    meta: StreamMeta = StreamMeta()

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.records, key=DetectionRecord.sort_key))
        object.__setattr__(self, "records", ordered)
        by_video: dict[str, dict[int, list[DetectionRecord]]] = {}
        for rec in ordered:
            by_video.setdefault(rec.video_id, {}).setdefault(rec.frame_index, []).append(rec)
        frozen = {
            v: {f: tuple(dets) for f, dets in frames.items()} for v, frames in by_video.items()
        }
        object.__setattr__(self, "_by_video", frozen)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[DetectionRecord]:
        return iter(self.records)

    def videos(self) -> tuple[str, ...]:
        return tuple(sorted(self._by_video))

    def frames(self, video_id: str) -> Mapping[int, tuple[DetectionRecord, ...]]:
        """Frame index -> detections for one video (ascending iteration order)."""
        return dict(sorted(self._by_video.get(video_id, {}).items()))

    def at(self, video_id: str, frame_index: int) -> tuple[DetectionRecord, ...]:
        return self._by_video.get(video_id, {}).get(frame_index, ())

    def categories(self) -> tuple[str, ...]:
        return tuple(sorted({r.category for r in self.records}))


def _record_from_json(obj: dict) -> DetectionRecord:
    if not isinstance(obj, dict):
        raise ValueError("record must be a JSON object")
    try:
        video = obj["video"]
        frame = obj["frame"]
        bbox = obj["bbox"]
        score = obj["score"]
        category = obj["category"]
    except KeyError as exc:
        raise ValueError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(video, str) or not video:
        raise ValueError("video must be a non-empty string")
    if not isinstance(frame, int) or isinstance(frame, bool):
        raise ValueError("frame must be an integer")
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise ValueError("bbox must be [x, y, w, h]")
    if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bbox):
        raise ValueError("bbox values must be numbers")
    if not isinstance(score, (int, float)) or isinstance(score, bool):
        raise ValueError("score must be a number")
    if not isinstance(category, str) or not category:
        raise ValueError("category must be a non-empty string")
    box = BoundingBox(float(bbox[0]), float(bbox[1]), float(bbox[2]), float(bbox[3]))
    return DetectionRecord(video, frame, box, float(score), category)


def parse_detection_stream(
    source: IO | Iterable[str] | str | bytes, meta: StreamMeta = StreamMeta()
) -> DetectionStream:
    """Parse line-delimited detection records; blank lines are skipped."""
    if isinstance(source, bytes):
        lines: Iterable[str] = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    else:
        lines = source
    records = []
    for line_no, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StreamParseError(line_no, f"invalid JSON ({exc.msg})") from None
        try:
            records.append(_record_from_json(obj))
        except ValueError as exc:
            raise StreamParseError(line_no, str(exc)) from None
    return DetectionStream(tuple(records), meta)


def record_to_json(rec: DetectionRecord) -> dict:
    return {
        "video": rec.video_id,
        "frame": rec.frame_index,
        "bbox": list(rec.box.as_xywh()),
        "score": rec.score,
        "category": rec.category,
    }


def serialize_detection_stream(stream: DetectionStream) -> str:
    """Inverse of :func:`parse_detection_stream`, one record per line."""
    lines = [
        json.dumps(record_to_json(rec), sort_keys=True, separators=(",", ":"))
        for rec in stream.records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def filter_by_score(stream: DetectionStream, threshold: float) -> DetectionStream:
    """Keep records with score >= threshold (inclusive boundary)."""
    if not (0.0 < threshold <= 1.0):
        raise ValueError(f"threshold must be in (0,1], got {threshold}")
    kept = tuple(r for r in stream.records if r.score >= threshold)
    return DetectionStream(kept, stream.meta)


def filter_by_category(stream: DetectionStream, category: str) -> DetectionStream:
    kept = tuple(r for r in stream.records if r.category == category)
    return DetectionStream(kept, stream.meta)


class FrameStore:
    """Read-only random access to pre-extracted frames on disk.

    Decoded frames are cached (small LRU) so sequential mining passes
    touch each file once; the cache never changes observable behavior.
    """

    def __init__(self, root: str | Path, cache_frames: int = 16):
        self.root = Path(root)
        if not self.root.is_dir():
            raise FrameStoreError(f"frame root is not a directory: {self.root}")
        self._counts: dict[str, int] = {}
        self._paths: dict[str, dict[int, Path]] = {}
        self._dims: dict[str, tuple[int, int]] = {}
        self._cache: OrderedDict[tuple[str, int], GrayImage] = OrderedDict()
        self._cache_max = max(1, cache_frames)

    def __getstate__(self):  # caches are per-process
        state = self.__dict__.copy()
        state["_cache"] = OrderedDict()
        return state

    def _scan(self, video_id: str) -> dict[int, Path]:
        if video_id in self._paths:
            return self._paths[video_id]
        vdir = self.root / video_id
        if not vdir.is_dir():
            raise FrameStoreError(f"no frame directory for video {video_id!r}: {vdir}")
        found: dict[int, Path] = {}
        for entry in vdir.iterdir():
            m = _FRAME_FILE_RE.match(entry.name)
            if m:
                found[int(m.group(1))] = entry
        if not found:
            raise FrameStoreError(f"no frame files under {vdir}")
        if sorted(found) != list(range(len(found))):
            raise FrameStoreError(
                f"frame indices for video {video_id!r} are not contiguous from 0"
            )
        self._paths[video_id] = found
        self._counts[video_id] = len(found)
        return found

    def videos(self) -> tuple[str, ...]:
        return tuple(sorted(p.name for p in self.root.iterdir() if p.is_dir()))

    def frame_count(self, video_id: str) -> int:
        self._scan(video_id)
        return self._counts[video_id]

    def frame_path(self, video_id: str, index: int) -> Path:
        paths = self._scan(video_id)
        if index not in paths:
            raise FrameStoreError(
                f"frame index {index} out of range [0,{len(paths)}) for video {video_id!r}"
            )
        return paths[index]

    def dims(self, video_id: str) -> tuple[int, int]:
        """(width, height) shared by all frames of the video."""
        if video_id not in self._dims:
            self.get(video_id, 0)
        return self._dims[video_id]

    def get(self, video_id: str, index: int) -> GrayImage:
        key = (video_id, index)
        cached = self._cache.get(key)
        if cached is not None:
            self._cache.move_to_end(key)
            return cached
        path = self.frame_path(video_id, index)
        try:
            with Image.open(path) as im:
                if im.mode in ("L", "RGB", "RGBA"):
                    arr = np.asarray(im)
                else:
                    arr = np.asarray(im.convert("RGB"))
        except OSError as exc:
            raise FrameStoreError(f"cannot decode frame {path}: {exc}") from exc
        gray = to_gray(arr)
        expected = self._dims.get(video_id)
        if expected is None:
            self._dims[video_id] = (gray.width, gray.height)
        elif (gray.width, gray.height) != expected:
            raise FrameStoreError(
                f"frame {path} size {gray.width}x{gray.height} differs from video "
                f"dimensions {expected[0]}x{expected[1]}"
            )
        self._cache[key] = gray
        self._cache.move_to_end(key)
        while len(self._cache) > self._cache_max:
            self._cache.popitem(last=False)
        return gray
