"""Retraining-set assembly and serialization.

The output follows the common images/annotations/categories JSON layout so
any detection training framework can consume it. Hard negatives ship in a
sidecar manifest (the standard layout has no concept of a negative box),
leaving both implicit and explicit training modes open downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from typing import Collection, Sequence

from .geometry import iou
from .ingest import FrameStore
from .model import BoundingBox, HardPositive, LabeledDetection, MiningConfig, Verdict


class ExportError(ValueError):
    """Inconsistent inputs while assembling a retraining set."""


@dataclass(frozen=True)
class ImageEntry:
    id: int
    video_id: str
    frame_index: int
    width: int
    height: int
    file_name: str


@dataclass(frozen=True)
class AnnotationEntry:
    id: int
    image_id: int
    box: BoundingBox
    category: str
    source: str  # "pseudo_positive" | "hard_positive"


@dataclass(frozen=True)
class ManifestEntry:
    image_id: int
    video_id: str
    frame_index: int
    box: BoundingBox


@dataclass(frozen=True)
class RetrainingSet:
    images: tuple[ImageEntry, ...]
    annotations: tuple[AnnotationEntry, ...]
    hard_negatives: tuple[ManifestEntry, ...]

    def __post_init__(self) -> None:
        image_ids = {im.id for im in self.images}
        for ann in self.annotations:
            if ann.image_id not in image_ids:
                raise ExportError(f"annotation {ann.id} references missing image {ann.image_id}")
        for entry in self.hard_negatives:
            if entry.image_id not in image_ids:
                raise ExportError(f"manifest entry references missing image {entry.image_id}")
        by_image: dict[int, list[BoundingBox]] = {}
        for ann in self.annotations:
            by_image.setdefault(ann.image_id, []).append(ann.box)
        for entry in self.hard_negatives:
            for box in by_image.get(entry.image_id, []):
                if iou(entry.box, box) >= 0.5:
                    raise ExportError(
                        f"hard-negative box duplicates an annotation on image {entry.image_id}"
                    )


def selection_from_report(rows: Sequence[LabeledDetection]) -> set[tuple[str, int]]:
    """(video, frame) pairs holding at least one pseudo-positive and one hard negative."""
    verdicts: dict[tuple[str, int], set[Verdict]] = {}
    for row in rows:
        key = (row.detection.video_id, row.detection.frame_index)
        verdicts.setdefault(key, set()).add(row.label.verdict)
    return {
        key
        for key, seen in verdicts.items()
        if Verdict.PSEUDO_POSITIVE in seen and Verdict.HARD_NEGATIVE in seen
    }


def build_retraining_set(
    hn_rows: Sequence[LabeledDetection],
    hard_positives: Sequence[HardPositive],
    selection: Collection[tuple[str, int]],
    store: FrameStore,
    cfg: MiningConfig,
) -> RetrainingSet:
    """Assemble images + annotations from the two mining reports.

    Selected flicker frames contribute their pseudo-positives as
    annotations and their hard negatives to the manifest; every
    hard-positive frame contributes the interpolated box plus whatever
    pseudo-positives (tracklet members) sit in the same frame.
    """
    by_frame: dict[tuple[str, int], list[LabeledDetection]] = {}
    for row in hn_rows:
        key = (row.detection.video_id, row.detection.frame_index)
        by_frame.setdefault(key, []).append(row)

    selection = set(selection)
    for key in selection:
        rows = by_frame.get(key, [])
        has_pp = any(r.label.verdict is Verdict.PSEUDO_POSITIVE for r in rows)
        has_hn = any(r.label.verdict is Verdict.HARD_NEGATIVE for r in rows)
        if not (has_pp and has_hn):
            raise ExportError(
                f"selected frame {key} lacks a pseudo-positive/hard-negative pair in the report"
            )

    frame_keys = set(selection) | {(hp.video_id, hp.frame_index) for hp in hard_positives}
    images: list[ImageEntry] = []
    image_id_of: dict[tuple[str, int], int] = {}
    for image_id, key in enumerate(sorted(frame_keys), start=1):
        video_id, frame_index = key
        width, height = store.dims(video_id)
        rel = store.frame_path(video_id, frame_index).relative_to(store.root)
        images.append(ImageEntry(image_id, video_id, frame_index, width, height, rel.as_posix()))
        image_id_of[key] = image_id

    raw_annotations: list[tuple] = []  # (video, frame, x, y, w, h, source, category, image_id)
    manifest: list[ManifestEntry] = []
    for key in sorted(frame_keys):
        image_id = image_id_of[key]
        for row in by_frame.get(key, []):
            det = row.detection
            if row.label.verdict is Verdict.PSEUDO_POSITIVE:
                raw_annotations.append((*key, det.box, "pseudo_positive", det.category, image_id))
            elif row.label.verdict is Verdict.HARD_NEGATIVE and key in selection:
                manifest.append(ManifestEntry(image_id, det.video_id, det.frame_index, det.box))
    for hp in hard_positives:
        key = (hp.video_id, hp.frame_index)
        raw_annotations.append(
            (*key, hp.box, "hard_positive", hp.flank_before.category, image_id_of[key])
        )

    raw_annotations.sort(key=lambda a: (a[0], a[1], a[2].x, a[2].y, a[2].w, a[2].h, a[3]))
    annotations = tuple(
        AnnotationEntry(i, image_id, box, category, source)
        for i, (_, _, box, source, category, image_id) in enumerate(raw_annotations, start=1)
    )
    manifest.sort(key=lambda m: (m.video_id, m.frame_index, m.box.x, m.box.y))
    return RetrainingSet(tuple(images), annotations, tuple(manifest))


def serialize_retraining_set(rset: RetrainingSet) -> tuple[str, str]:
    """(annotation document, hard-negative manifest), both byte-stable JSON."""
    categories = sorted({ann.category for ann in rset.annotations})
    category_id = {name: i for i, name in enumerate(categories, start=1)}
    doc = {
        "images": [
            {
                "id": im.id,
                "video": im.video_id,
                "frame": im.frame_index,
                "width": im.width,
                "height": im.height,
                "file_name": im.file_name,
            }
            for im in rset.images
        ],
        "annotations": [
            {
                "id": ann.id,
                "image_id": ann.image_id,
                "category_id": category_id[ann.category],
                "bbox": list(ann.box.as_xywh()),
                "area": ann.box.area(),
                "iscrowd": 0,
                "source": ann.source,
            }
            for ann in rset.annotations
        ],
        "categories": [{"id": i, "name": name} for name, i in category_id.items()],
    }
    manifest = {
        "hard_negatives": [
            {
                "image_id": m.image_id,
                "video": m.video_id,
                "frame": m.frame_index,
                "bbox": list(m.box.as_xywh()),
            }
            for m in rset.hard_negatives
        ]
    }
    dump = lambda obj: json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return dump(doc), dump(manifest)


def parse_retraining_set(doc_text: str, manifest_text: str) -> RetrainingSet:
    """Inverse of :func:`serialize_retraining_set` (round-trip support)."""
    doc = json.loads(doc_text)
    manifest = json.loads(manifest_text)
    category_name = {c["id"]: c["name"] for c in doc["categories"]}
    images = tuple(
        ImageEntry(im["id"], im["video"], im["frame"], im["width"], im["height"], im["file_name"])
        for im in doc["images"]
    )
    annotations = tuple(
        AnnotationEntry(
            a["id"],
            a["image_id"],
            BoundingBox(*a["bbox"]),
            category_name[a["category_id"]],
            a["source"],
        )
        for a in doc["annotations"]
    )
    hard_negatives = tuple(
        ManifestEntry(m["image_id"], m["video"], m["frame"], BoundingBox(*m["bbox"]))
        for m in manifest["hard_negatives"]
    )
    return RetrainingSet(images, annotations, hard_negatives)
