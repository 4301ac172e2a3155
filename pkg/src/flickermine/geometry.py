"""Box arithmetic: overlap, clamped enlargement, linear interpolation.

All functions use the continuous area convention (no +1 pixel), matching
the sub-pixel box fields.
"""

from __future__ import annotations

from .model import BoundingBox


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area() + b.area() - inter
    # edge recomputation can overshoot the true area by a few ulps
    return min(1.0, inter / union)


def enlarge_clamped(box: BoundingBox, margin: float, frame_w: float, frame_h: float) -> BoundingBox:
    """Grow ``box`` by ``margin`` on every side, intersected with the frame."""
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    x0 = max(0.0, box.x - margin)
    y0 = max(0.0, box.y - margin)
    x1 = min(float(frame_w), box.x2 + margin)
    y1 = min(float(frame_h), box.y2 + margin)
    return BoundingBox(x0, y0, x1 - x0, y1 - y0)


def interpolate(a: BoundingBox, b: BoundingBox, t: float) -> BoundingBox:
    """Component-wise linear interpolation between two boxes, t in [0,1]."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must be in [0,1], got {t}")
    s = 1.0 - t
    # this form reproduces the endpoints exactly at t = 0 and t = 1
    return BoundingBox(
        a.x * s + b.x * t,
        a.y * s + b.y * t,
        a.w * s + b.w * t,
        a.h * s + b.h * t,
    )
