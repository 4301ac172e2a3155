"""Grayscale conversion and exhaustive NCC template matching.

The matcher is the appearance engine behind tracklet prediction. NCC is
the zero-mean (Pearson) variant, computed in float64:

    ncc = sum((T - mean(T)) * (W - mean(W)))
          / sqrt(sum((T - mean(T))^2) * sum((W - mean(W))^2))

``match_template`` scans every integer offset of the template inside the
search region and is exact: the fast paths below reproduce the direct sum
(strided windows, or FFT scoring followed by exact re-scoring of the top
candidates, compatible well inside 1e-6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Above this many multiply-adds the scan switches to FFT scoring.
_FFT_COST_CUTOFF = 4_000_000
# FFT scores within this margin of the max are re-scored exactly.
_FFT_CANDIDATE_TOL = 1e-6


class ImageError(ValueError):
    """Invalid image input (empty, wrong shape, size mismatch)."""


class ZeroVarianceError(ImageError):
    """A patch is constant: NCC is undefined, the region carries no identity."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Immutable single-channel image, float64 intensities in [0,1]."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ImageError(f"gray image must be non-empty 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ImageError("gray image contains non-finite values")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ImageError("gray image intensities must lie in [0,1]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class MatchResult:
    """Best-match offset (top-left, within the search region) and its NCC."""

    offset_x: int
    offset_y: int
    ncc: float


def to_gray(frame: np.ndarray) -> GrayImage:
    """Convert an RGB(A) or single-channel frame to luma in [0,1].

    Integer inputs are treated as 0..255; float inputs as already scaled
    to [0,1]. Luma = 0.299 R + 0.587 G + 0.114 B.
    """
    arr = np.asarray(frame)
    if arr.size == 0:
        raise ImageError("empty image")
    if np.issubdtype(arr.dtype, np.integer):
        arr = arr.astype(np.float64) / 255.0
    else:
        arr = arr.astype(np.float64)
    if arr.ndim == 2:
        gray = arr
    elif arr.ndim == 3 and arr.shape[2] >= 3:
        r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
        gray = LUMA_WEIGHTS[0] * r + LUMA_WEIGHTS[1] * g + LUMA_WEIGHTS[2] * b
    else:
        raise ImageError(f"unsupported frame shape {arr.shape}")
    return GrayImage(np.clip(gray, 0.0, 1.0))


def _round_half_up(v: float) -> int:
    return int(math.floor(v + 0.5))


def crop(img: GrayImage, x0: int, y0: int, w: int, h: int) -> GrayImage:
    """Integer-rect crop; the rect must lie inside the image."""
    if x0 < 0 or y0 < 0 or w <= 0 or h <= 0 or x0 + w > img.width or y0 + h > img.height:
        raise ImageError(
            f"crop rect ({x0},{y0},{w},{h}) outside {img.width}x{img.height} image"
        )
    return GrayImage(img.pixels[y0 : y0 + h, x0 : x0 + w])


def box_to_rect(box, frame_w: int, frame_h: int) -> tuple[int, int, int, int]:
    """Continuous box -> integer pixel rect (x0, y0, w, h).

    Edges are rounded half-up, so nested boxes stay nested; the rect is
    then shifted (not shrunk) to fit the frame.
    """
    x0 = _round_half_up(box.x)
    y0 = _round_half_up(box.y)
    x1 = _round_half_up(box.x2)
    y1 = _round_half_up(box.y2)
    w = max(1, min(x1 - x0, frame_w))
    h = max(1, min(y1 - y0, frame_h))
    x0 = min(max(x0, 0), frame_w - w)
    y0 = min(max(y0, 0), frame_h - h)
    return x0, y0, w, h


def crop_box(img: GrayImage, box) -> tuple[GrayImage, int, int]:
    """Crop the integer rect covering ``box``; returns (patch, x0, y0)."""
    x0, y0, w, h = box_to_rect(box, img.width, img.height)
    return crop(img, x0, y0, w, h), x0, y0


def _ncc_arrays(t: np.ndarray, w: np.ndarray) -> float:
    tz = t - t.mean()
    wz = w - w.mean()
    st = float(np.sum(tz * tz))
    sw = float(np.sum(wz * wz))
    if st <= 0.0 or sw <= 0.0:
        raise ZeroVarianceError("constant patch: NCC undefined")
    val = float(np.sum(tz * wz)) / math.sqrt(st * sw)
    return min(1.0, max(-1.0, val))


def ncc(template: GrayImage, window: GrayImage) -> float:
    """Zero-mean NCC of two equally sized patches, in [-1,1]."""
    if template.pixels.shape != window.pixels.shape:
        raise ImageError(
            f"NCC size mismatch: {template.pixels.shape} vs {window.pixels.shape}"
        )
    return _ncc_arrays(template.pixels, window.pixels)


def _score_direct(
    region: np.ndarray, tz: np.ndarray, st: float
) -> tuple[np.ndarray, np.ndarray, float]:
    th, tw = tz.shape
    windows = np.lib.stride_tricks.sliding_window_view(region, (th, tw))
    n = th * tw
    # sum(tz * W) equals sum(tz * (W - mean(W))) because tz is zero-mean
    num = np.einsum("ijkl,kl->ij", windows, tz, optimize=True)
    wsum = np.einsum("ijkl->ij", windows, optimize=True)
    wsq = np.einsum("ijkl,ijkl->ij", windows, windows, optimize=True)
    wvar = wsq - wsum * wsum / n
    return num, wvar, st


def _score_fft(region: np.ndarray, tz: np.ndarray, st: float) -> tuple[np.ndarray, np.ndarray, float]:
    rh, rw = region.shape
    th, tw = tz.shape
    fh, fw = rh + th - 1, rw + tw - 1
    fr = np.fft.rfft2(region, s=(fh, fw))
    ft = np.fft.rfft2(tz[::-1, ::-1], s=(fh, fw))
    full = np.fft.irfft2(fr * ft, s=(fh, fw))
    num = full[th - 1 : rh, tw - 1 : rw]
    # window sums / sums of squares via integral images
    n = th * tw
    pad = np.zeros((rh + 1, rw + 1))
    pad[1:, 1:] = np.cumsum(np.cumsum(region, axis=0), axis=1)
    s1 = pad[th:, tw:] - pad[:-th, tw:] - pad[th:, :-tw] + pad[:-th, :-tw]
    pad[1:, 1:] = np.cumsum(np.cumsum(region * region, axis=0), axis=1)
    s2 = pad[th:, tw:] - pad[:-th, tw:] - pad[th:, :-tw] + pad[:-th, :-tw]
    wvar = s2 - s1 * s1 / n
    return num, wvar, st


def match_template(template: GrayImage, region: GrayImage) -> MatchResult:
    """Exhaustive NCC scan of ``template`` over ``region``.

    Returns the offset with the highest score; exact ties resolve to the
    smallest offset_y, then smallest offset_x.
    """
    t = template.pixels
    r = region.pixels
    if t.shape[0] > r.shape[0] or t.shape[1] > r.shape[1]:
        raise ImageError(
            f"template {t.shape} larger than search region {r.shape}"
        )
    tz = t - t.mean()
    st = float(np.sum(tz * tz))
    if st <= 0.0:
        raise ZeroVarianceError("constant template: NCC undefined")

    n_offsets = (r.shape[0] - t.shape[0] + 1) * (r.shape[1] - t.shape[1] + 1)
    exact = n_offsets * t.size <= _FFT_COST_CUTOFF
    if exact:
        num, wvar, _ = _score_direct(r, tz, st)
    else:
        num, wvar, _ = _score_fft(r, tz, st)

    valid = wvar > 0.0
    if not valid.any():
        raise ZeroVarianceError("search region is constant everywhere: NCC undefined")
    scores = np.full(num.shape, -np.inf)
    denom = np.sqrt(st * np.maximum(wvar, 0.0), where=valid, out=np.ones_like(wvar))
    np.divide(num, denom, where=valid, out=scores)

    if exact:
        # argmax scans row-major: first hit is already (min y, then min x)
        flat = int(np.argmax(scores))
        oy, ox = divmod(flat, scores.shape[1])
        best = min(1.0, max(-1.0, float(scores[oy, ox])))
        return MatchResult(ox, oy, best)

    # FFT scores carry round-off: re-score near-max offsets with the direct sum
    cutoff = float(scores.max()) - _FFT_CANDIDATE_TOL
    th, tw = t.shape
    best: tuple[float, int, int] | None = None
    for oy, ox in np.argwhere(scores >= cutoff):
        window = r[oy : oy + th, ox : ox + tw]
        try:
            val = _ncc_arrays(t, window)
        except ZeroVarianceError:
            continue
        key = (-val, int(oy), int(ox))
        if best is None or key < best:
            best = key
    if best is None:
        raise ZeroVarianceError("search region is constant everywhere: NCC undefined")
    return MatchResult(best[2], best[1], -best[0])
