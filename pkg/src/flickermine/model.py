"""Core domain types shared by every stage of the mining pipeline."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum


class ConfigError(ValueError):
    """A mining-configuration field is outside its valid range."""


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates, corner + size, sub-pixel allowed."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"box field {name} must be finite, got {v!r}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"box corner must be non-negative, got ({self.x}, {self.y})")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box size must be positive, got {self.w}x{self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def area(self) -> float:
        return self.w * self.h

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class DetectionRecord:
    """One raw detector output on one frame of one video."""

    video_id: str
    frame_index: int
    box: BoundingBox
    score: float
    category: str

    def __post_init__(self) -> None:
        if not isinstance(self.frame_index, int) or self.frame_index < 0:
            raise ValueError(f"frame_index must be a non-negative int, got {self.frame_index!r}")
        if not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must be in [0,1], got {self.score!r}")

    def sort_key(self) -> tuple:
        """Total order used everywhere deterministic output is required."""
        b = self.box
        return (self.video_id, self.frame_index, b.x, b.y, b.w, b.h, self.score, self.category)


class Verdict(Enum):
    """Final per-detection mining verdict."""

    HARD_NEGATIVE = "hard_negative"
    PSEUDO_POSITIVE = "pseudo_positive"
    UNVERIFIED = "unverified"


class EvidenceKind(Enum):
    """What one adjacent frame contributed to the verdict."""

    CONSISTENT = "consistent"
    ISOLATED = "isolated"
    MATCH_REJECTED = "match_rejected"
    OUT_OF_RANGE = "out_of_range"


@dataclass(frozen=True)
class AdjacentEvidence:
    """Outcome of examining one adjacent frame for one detection.

    ``ncc`` is the best template-match score in that frame (None when the
    frame was out of range or the patch had no usable texture). ``pred_box``
    is the tracklet prediction; absent whenever the match was rejected.
    ``max_iou`` is the prediction's best overlap with that frame's
    high-confidence detections; None until detections were compared.
    """

    frame_index: int
    kind: EvidenceKind
    ncc: float | None = None
    max_iou: float | None = None
    pred_box: BoundingBox | None = None

    def __post_init__(self) -> None:
        if self.kind in (EvidenceKind.MATCH_REJECTED, EvidenceKind.OUT_OF_RANGE):
            if self.pred_box is not None:
                raise ValueError(f"{self.kind.value} evidence cannot carry a prediction")
        elif self.pred_box is None:
            raise ValueError(f"{self.kind.value} evidence requires a prediction")


@dataclass(frozen=True)
class MiningLabel:
    """Verdict plus the per-adjacent-frame evidence that produced it."""

    verdict: Verdict
    evidence: tuple[AdjacentEvidence, ...] = ()


@dataclass(frozen=True)
class LabeledDetection:
    """A detection together with its mining verdict; the report row unit."""

    detection: DetectionRecord
    label: MiningLabel


@dataclass(frozen=True)
class HardPositive:
    """A single-frame detection dropout inside a consistent tracklet.

    The box is interpolated from the flanking detections, which sit exactly
    one frame before and after the gap.
    """

    video_id: str
    frame_index: int
    box: BoundingBox
    tracklet_id: int
    flank_before: DetectionRecord
    flank_after: DetectionRecord
    ncc_confirm_score: float

    def __post_init__(self) -> None:
        if self.flank_before.frame_index != self.frame_index - 1:
            raise ValueError("flank_before must sit at frame_index - 1")
        if self.flank_after.frame_index != self.frame_index + 1:
            raise ValueError("flank_after must sit at frame_index + 1")


@dataclass(frozen=True)
class MiningConfig:
    """Tunable thresholds of the mining pipeline.

    Defaults are the published operating point: detections kept at
    confidence >= 0.8, tracklets over a +/-5 frame window, search regions
    grown by 100 px per side, matches rejected below NCC 0.5, and
    isolation decided at IoU 0.2.
    """

    score_threshold: float = 0.8
    temporal_window: int = 5
    enlargement_px: float = 100.0
    ncc_threshold: float = 0.5
    iou_isolation_threshold: float = 0.2
    min_valid_frames_per_side: int = 1
    hp_link_iou: float = 0.4
    hp_min_tracklet_len: int = 3
    hp_ncc_confirm: float = 0.5


def validate_config(cfg: MiningConfig) -> MiningConfig:
    """Return ``cfg`` unchanged if every field is in range, else raise ConfigError."""
    if not (0.0 < cfg.score_threshold <= 1.0):
        raise ConfigError("score_threshold must be in (0,1]")
    if cfg.temporal_window < 1:
        raise ConfigError("temporal_window must be >= 1")
    if not (cfg.enlargement_px >= 0 and math.isfinite(cfg.enlargement_px)):
        raise ConfigError("enlargement_px must be >= 0")
    if not (-1.0 <= cfg.ncc_threshold <= 1.0):
        raise ConfigError("ncc_threshold must be in [-1,1]")
    if not (0.0 <= cfg.iou_isolation_threshold <= 1.0):
        raise ConfigError("iou_isolation_threshold must be in [0,1]")
    if not (1 <= cfg.min_valid_frames_per_side <= cfg.temporal_window):
        raise ConfigError("min_valid_frames_per_side must be in [1, temporal_window]")
    if not (0.0 < cfg.hp_link_iou <= 1.0):
        raise ConfigError("hp_link_iou must be in (0,1]")
    if cfg.hp_min_tracklet_len < 2:
        raise ConfigError("hp_min_tracklet_len must be >= 2")
    if not (-1.0 <= cfg.hp_ncc_confirm <= 1.0):
        raise ConfigError("hp_ncc_confirm must be in [-1,1]")
    return cfg
