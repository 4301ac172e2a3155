"""Pretrained-detector adapter emitting the flickermine detection stream.

The adapter is deliberately thin: detect per frame, attach a confidence,
write records in the published stream schema (one JSON object per line,
fields video/frame/bbox/score/category). All mining semantics live
downstream.

The bundled model is scikit-image's pretrained multi-block LBP frontal
face cascade, which ships with the library and needs no network access.
The cascade API reports detections but no confidence, so the adapter
derives one: it re-runs the detector over an increasing minimum-neighbor
requirement and scores each box by the highest requirement it survives
(``support / support_levels``). Real faces accumulate many overlapping
multi-scale hits and survive high requirements; noise clusters die early.
The mapping is monotone and deterministic; absolute values were pinned
once against the reference fixture and are regression-tested, not
calibrated probabilities.
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image
from skimage import data as skimage_data
from skimage.feature import Cascade

logger = logging.getLogger(__name__)

_FRAME_FILE_RE = re.compile(r"^(\d{8})\.(png|jpg)$")
MINING_SCORE_THRESHOLD = 0.8  # the downstream default the floor must stay under

MODELS = ("lbp-frontal-face",)


class AdapterError(ValueError):
    """Bad configuration, unreadable frames, or an invalid emitted record."""


@dataclass(frozen=True)
class AdapterConfig:
    model: str = "lbp-frontal-face"
    category: str = "face"
    score_floor: float = 0.05
    batch_size: int = 8
    device: str = "cpu"
    support_levels: int = 12
    min_size: int = 24
    scale_factor: float = 1.2

    def validate(self, mining_threshold: float = MINING_SCORE_THRESHOLD) -> "AdapterConfig":
        if self.model not in MODELS:
            raise AdapterError(f"unknown model {self.model!r}; available: {', '.join(MODELS)}")
        if not (0.0 <= self.score_floor <= mining_threshold):
            raise AdapterError(
                f"score_floor must be in [0, {mining_threshold}] so mining sweeps stay possible"
            )
        if self.device != "cpu":
            raise AdapterError("the bundled cascade runs on cpu only")
        if self.batch_size < 1 or self.support_levels < 1 or self.min_size < 8:
            raise AdapterError("batch_size and support_levels must be >= 1, min_size >= 8")
        if self.scale_factor <= 1.0:
            raise AdapterError("scale_factor must be > 1")
        return self


def _boxes_match(a: dict, b: dict) -> bool:
    if a == b:
        return True
    ix = min(a["c"] + a["width"], b["c"] + b["width"]) - max(a["c"], b["c"])
    iy = min(a["r"] + a["height"], b["r"] + b["height"]) - max(a["r"], b["r"])
    if ix <= 0 or iy <= 0:
        return False
    inter = ix * iy
    union = a["width"] * a["height"] + b["width"] * b["height"] - inter
    return inter / union >= 0.6


class LbpFaceDetector:
    """skimage's pretrained LBP face cascade with support-sweep confidence."""

    def __init__(self, config: AdapterConfig):
        self.config = config
        self._cascade = Cascade(skimage_data.lbp_frontal_face_cascade_filename())

    def _detect_at(self, frame: np.ndarray, min_neighbors: int) -> list[dict]:
        h, w = frame.shape[:2]
        return self._cascade.detect_multi_scale(
            img=frame,
            scale_factor=self.config.scale_factor,
            step_ratio=1,
            min_size=(self.config.min_size, self.config.min_size),
            max_size=(h, w),
            min_neighbor_number=min_neighbors,
        )

    def detect(self, frame: np.ndarray) -> list[tuple[float, float, float, float, float]]:
        """Detections as (x, y, w, h, score), score descending."""
        base = self._detect_at(frame, 1)
        if not base:
            return []
        support = [1] * len(base)
        for k in range(2, self.config.support_levels + 1):
            survivors = self._detect_at(frame, k)
            if not survivors:
                break
            for i, box in enumerate(base):
                if support[i] == k - 1 and any(_boxes_match(box, s) for s in survivors):
                    support[i] = k
        out = []
        for box, s in zip(base, support):
            score = s / self.config.support_levels
            out.append(
                (float(box["c"]), float(box["r"]), float(box["width"]), float(box["height"]),
                 min(1.0, score))
            )
        out.sort(key=lambda d: (-d[4], d[0], d[1], d[2], d[3]))
        return out


def _load_frame(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except OSError as exc:
        raise AdapterError(f"cannot decode frame {path}: {exc}") from exc


def _scan_video(vdir: Path) -> list[Path]:
    found = {}
    for entry in vdir.iterdir():
        m = _FRAME_FILE_RE.match(entry.name)
        if m:
            found[int(m.group(1))] = entry
    if sorted(found) != list(range(len(found))):
        raise AdapterError(f"frame indices under {vdir} are not contiguous from 0")
    return [found[i] for i in sorted(found)]


def _check_record(rec: dict) -> dict:
    """Self-check against the published stream schema before writing."""
    ok = (
        isinstance(rec.get("video"), str) and rec["video"]
        and isinstance(rec.get("frame"), int) and rec["frame"] >= 0
        and isinstance(rec.get("bbox"), list) and len(rec["bbox"]) == 4
        and all(isinstance(v, float) for v in rec["bbox"])
        and rec["bbox"][0] >= 0 and rec["bbox"][1] >= 0
        and rec["bbox"][2] > 0 and rec["bbox"][3] > 0
        and isinstance(rec.get("score"), float) and 0.0 <= rec["score"] <= 1.0
        and isinstance(rec.get("category"), str) and rec["category"]
    )
    if not ok:
        raise AdapterError(f"record violates the stream schema: {rec!r}")
    return rec


def run_detector(frames_dir: str | Path, config: AdapterConfig, out_path: str | Path) -> Path:
    """Detect over every video under ``frames_dir``; write the stream file.

    Frames are processed in index order; records are emitted per frame by
    descending score. The output is written atomically.
    """
    config.validate()
    frames_dir = Path(frames_dir)
    if not frames_dir.is_dir():
        raise AdapterError(f"frames directory not found: {frames_dir}")
    detector = LbpFaceDetector(config)

    lines: list[str] = []
    for vdir in sorted(p for p in frames_dir.iterdir() if p.is_dir()):
        paths = _scan_video(vdir)
        n_kept = 0
        for index, path in enumerate(paths):
            for x, y, w, h, score in detector.detect(_load_frame(path)):
                if score < config.score_floor:
                    continue
                rec = _check_record(
                    {
                        "video": vdir.name,
                        "frame": index,
                        "bbox": [x, y, w, h],
                        "score": score,
                        "category": config.category,
                    }
                )
                lines.append(json.dumps(rec, sort_keys=True, separators=(",", ":")))
                n_kept += 1
            if (index + 1) % config.batch_size == 0:
                logger.debug("%s: %d/%d frames", vdir.name, index + 1, len(paths))
        logger.info("%s: %d detections over %d frames", vdir.name, n_kept, len(paths))

    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(lines) + ("\n" if lines else "")
    fd, tmp = tempfile.mkstemp(dir=out_path.parent, prefix=f".{out_path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return out_path
