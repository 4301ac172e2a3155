import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flickermine.imageproc import (
    GrayImage,
    ImageError,
    MatchResult,
    ZeroVarianceError,
    box_to_rect,
    crop_box,
    match_template,
    ncc,
    to_gray,
)
from flickermine.model import BoundingBox

from conftest import gray


def ncc_oracle(t, w):
    """Direct-summation reference, plain Python loops."""
    t = [list(row) for row in np.asarray(t, dtype=float)]
    w = [list(row) for row in np.asarray(w, dtype=float)]
    n = len(t) * len(t[0])
    tm = sum(sum(r) for r in t) / n
    wm = sum(sum(r) for r in w) / n
    num = s_t = s_w = 0.0
    for i in range(len(t)):
        for j in range(len(t[0])):
            a, b = t[i][j] - tm, w[i][j] - wm
            num += a * b
            s_t += a * a
            s_w += b * b
    return num / math.sqrt(s_t * s_w)


def match_oracle(t, r):
    """Scan every offset; first strict maximum wins (min y, then min x)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    best = None
    for oy in range(r.shape[0] - t.shape[0] + 1):
        for ox in range(r.shape[1] - t.shape[1] + 1):
            val = ncc_oracle(t, r[oy : oy + t.shape[0], ox : ox + t.shape[1]])
            if best is None or val > best[0]:
                best = (val, ox, oy)
    return best


class TestToGray:
    def test_white_is_one(self):
        img = to_gray(np.full((2, 2, 3), 255, dtype=np.uint8))
        assert img.pixels[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_black_is_zero(self):
        img = to_gray(np.zeros((2, 2, 3), dtype=np.uint8))
        assert img.pixels[0, 0] == 0.0

    def test_pure_red_weight(self):
        frame = np.zeros((1, 1, 3), dtype=np.uint8)
        frame[0, 0, 0] = 255
        assert to_gray(frame).pixels[0, 0] == pytest.approx(0.299, abs=1e-6)

    def test_single_channel_passthrough(self):
        img = to_gray(np.array([[0, 128, 255]], dtype=np.uint8))
        assert img.pixels[0, 1] == pytest.approx(128 / 255)

    def test_empty_rejected(self):
        with pytest.raises(ImageError):
            to_gray(np.zeros((0, 3, 3), dtype=np.uint8))


class TestGrayImage:
    def test_out_of_range_rejected(self):
        with pytest.raises(ImageError):
            GrayImage(np.array([[0.5, 1.5]]))

    def test_pixels_are_immutable(self):
        img = gray([[0.1, 0.2], [0.3, 0.4]])
        with pytest.raises(ValueError):
            img.pixels[0, 0] = 0.9


class TestNcc:
    def test_self_correlation(self, rng):
        img = gray(rng.random((5, 7)))
        assert ncc(img, img) == 1.0

    def test_negation_flips_sign(self, rng):
        data = rng.random((5, 7))
        assert ncc(gray(data), gray(1.0 - data)) == -1.0

    def test_fixed_3x3_against_oracle(self):
        t = [[0.1, 0.5, 0.9], [0.2, 0.4, 0.6], [0.3, 0.8, 0.7]]
        w = [[0.2, 0.4, 0.8], [0.1, 0.5, 0.9], [0.4, 0.6, 0.5]]
        assert ncc(gray(t), gray(w)) == pytest.approx(0.7988305528088172, abs=1e-9)
        assert ncc(gray(t), gray(w)) == pytest.approx(ncc_oracle(t, w), abs=1e-12)

    def test_zero_variance_rejected(self, rng):
        flat = gray(np.full((4, 4), 0.5))
        with pytest.raises(ZeroVarianceError):
            ncc(flat, gray(rng.random((4, 4))))

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ImageError):
            ncc(gray(rng.random((4, 4))), gray(rng.random((4, 5))))

    @given(
        seed=st.integers(0, 10_000),
        scale=st.floats(0.05, 0.9),
        offset=st.floats(0.0, 0.1),
    )
    @settings(max_examples=60, deadline=None)
    def test_affine_intensity_invariance(self, seed, scale, offset):
        r = np.random.default_rng(seed)
        t = r.random((6, 6))
        w = r.random((6, 6))
        base = ncc(gray(t), gray(w))
        scaled = ncc(gray(np.clip(t * scale + offset, 0, 1) / 1.0), gray(w))
        assert scaled == pytest.approx(base, abs=1e-6)


class TestMatchTemplate:
    def test_planted_copy_found_exactly(self, rng):
        region = rng.random((20, 24))
        template = region[3 : 3 + 8, 7 : 7 + 9].copy()
        got = match_template(gray(template), gray(region))
        assert (got.offset_x, got.offset_y) == (7, 3)
        assert got.ncc == pytest.approx(1.0, abs=1e-12)

    def test_equal_sizes_single_candidate(self, rng):
        data = rng.random((6, 6))
        got = match_template(gray(data), gray(data))
        assert got == MatchResult(0, 0, got.ncc)
        assert got.ncc == pytest.approx(1.0, abs=1e-12)

    def test_matches_brute_force_oracle(self, rng):
        for _ in range(25):
            template = rng.random((8, 8))
            region = rng.random((16, 16))
            want_val, want_x, want_y = match_oracle(template, region)
            got = match_template(gray(template), gray(region))
            assert (got.offset_x, got.offset_y) == (want_x, want_y)
            assert got.ncc == pytest.approx(want_val, abs=1e-9)

    def test_tie_breaks_to_smallest_y_then_x(self):
        # two identical planted copies; scan order must prefer the upper one
        region = np.zeros((10, 4))
        patch = np.array([[0.1, 0.9], [0.8, 0.2]])
        region[1:3, 1:3] = patch
        region[6:8, 1:3] = patch
        got = match_template(gray(patch), gray(region))
        assert (got.offset_x, got.offset_y) == (1, 1)

    def test_no_higher_scoring_competitor(self, rng):
        template = rng.random((5, 5))
        region = rng.random((12, 12))
        got = match_template(gray(template), gray(region))
        for oy in range(8):
            for ox in range(8):
                window = region[oy : oy + 5, ox : ox + 5]
                assert ncc_oracle(template, window) <= got.ncc + 1e-12

    def test_template_larger_than_region(self, rng):
        with pytest.raises(ImageError):
            match_template(gray(rng.random((8, 8))), gray(rng.random((4, 12))))

    def test_flat_template_rejected(self, rng):
        with pytest.raises(ZeroVarianceError):
            match_template(gray(np.full((4, 4), 0.3)), gray(rng.random((8, 8))))

    def test_flat_region_rejected(self, rng):
        with pytest.raises(ZeroVarianceError):
            match_template(gray(rng.random((4, 4))), gray(np.full((9, 9), 0.3)))

    def test_determinism(self, rng):
        template = gray(rng.random((7, 7)))
        region = gray(rng.random((30, 30)))
        assert match_template(template, region) == match_template(template, region)

    def test_fft_path_agrees_with_direct_scan(self, rng):
        # large enough to cross the internal FFT cutoff
        region_arr = rng.random((240, 240))
        template_arr = region_arr[100:150, 80:140].copy()
        got = match_template(gray(template_arr), gray(region_arr))
        assert (got.offset_x, got.offset_y) == (80, 100)
        assert got.ncc == pytest.approx(1.0, abs=1e-9)


class TestBoxToRect:
    def test_rounds_half_up(self):
        assert box_to_rect(BoundingBox(1.5, 2.4, 10.0, 10.0), 100, 100) == (2, 2, 10, 10)

    def test_shifts_to_fit_frame(self):
        assert box_to_rect(BoundingBox(95.0, 0.0, 10.0, 5.0), 100, 100) == (90, 0, 10, 5)

    def test_crop_box_returns_origin(self, rng):
        img = gray(rng.random((50, 60)))
        patch, x0, y0 = crop_box(img, BoundingBox(10.2, 5.7, 8.0, 6.0))
        assert (x0, y0) == (10, 6)
        assert patch.pixels.shape == (6, 8)
        assert np.array_equal(patch.pixels, img.pixels[6:12, 10:18])
