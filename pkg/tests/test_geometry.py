import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maskcue.geometry import (
    BBox,
    MaskObservation,
    PixelRect,
    iou,
    iou_matrix,
    mask_bbox_ratios,
    mask_bbox_ratios_many,
    rasterize,
)

coord = st.floats(-50, 150, allow_nan=False)
size = st.floats(0.5, 80, allow_nan=False)
boxes = st.builds(BBox, coord, coord, size, size)


def area_oracle(a, b):
    # independent arithmetic on corner coordinates
    ax1, ay1 = a.x + a.w, a.y + a.h
    bx1, by1 = b.x + b.w, b.y + b.h
    inter = max(0.0, min(ax1, bx1) - max(a.x, b.x)) * max(0.0, min(ay1, by1) - max(a.y, b.y))
    return inter / (a.w * a.h + b.w * b.h - inter)


def test_bbox_validation():
    with pytest.raises(ValueError):
        BBox(0, 0, 0, 5)
    with pytest.raises(ValueError):
        BBox(0, 0, 5, -1)
    with pytest.raises(ValueError):
        BBox(float("nan"), 0, 5, 5)
    b = BBox(1, 2, 3, 4)
    assert b.area == 12
    assert b.center == (2.5, 4.0)
    assert b.as_xyxy() == (1, 2, 4, 6)


def test_iou_examples():
    assert iou(BBox(0, 0, 10, 10), BBox(0, 0, 10, 10)) == 1.0
    assert iou(BBox(0, 0, 10, 10), BBox(20, 20, 5, 5)) == 0.0
    assert iou(BBox(0, 0, 10, 10), BBox(5, 0, 10, 10)) == pytest.approx(50 / 150, abs=1e-12)
    # touching edges do not overlap
    assert iou(BBox(0, 0, 10, 10), BBox(10, 0, 10, 10)) == 0.0


@given(boxes, boxes)
def test_iou_symmetric_bounded_and_matches_oracle(a, b):
    v = iou(a, b)
    assert v == iou(b, a)
    assert 0.0 <= v <= 1.0
    assert v == pytest.approx(area_oracle(a, b), abs=1e-12)
    assert iou(a, a) == 1.0


def test_iou_matrix_matches_scalar(backend):
    rng = np.random.default_rng(3)
    a = [BBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2)) for _ in range(6)]
    b = [BBox(*rng.uniform(0, 50, 2), *rng.uniform(1, 30, 2)) for _ in range(5)]
    m = iou_matrix(a, b)
    assert m.shape == (6, 5)
    for i in range(6):
        for j in range(5):
            assert m[i, j] == pytest.approx(iou(a[i], b[j]), abs=1e-12)
    assert iou_matrix([], b).shape == (0, 5)


def test_rasterize_examples():
    assert rasterize(BBox(0, 0, 3, 3), 10, 10).count == 9
    r = rasterize(BBox(-2, -2, 4, 4), 10, 10)
    assert r == PixelRect(0, 0, 2, 2) and r.count == 4
    assert rasterize(BBox(100, 100, 5, 5), 10, 10).count == 0
    # half-up rounding of both edges
    assert rasterize(BBox(0.5, 1.49, 2.0, 2.0), 10, 10) == PixelRect(1, 1, 3, 3)


def membership_oracle(b, width, height):
    # a pixel column c belongs iff floor(x + 0.5) <= c < floor(x + w + 0.5)
    cols = [c for c in range(width) if math.floor(b.x + 0.5) <= c < math.floor(b.x + b.w + 0.5)]
    rows = [r for r in range(height) if math.floor(b.y + 0.5) <= r < math.floor(b.y + b.h + 0.5)]
    return len(cols) * len(rows)


@given(boxes)
def test_rasterize_count_matches_pixel_membership(b):
    assert rasterize(b, 64, 48).count == membership_oracle(b, 64, 48)


@given(boxes, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_rasterize_monotone_under_containment(outer, f0, f1, f2, f3):
    # shrink the outer box to an inner box it geometrically contains
    x0 = outer.x + f0 * outer.w * 0.5
    y0 = outer.y + f1 * outer.h * 0.5
    x1 = outer.x + outer.w - f2 * (outer.x + outer.w - x0) * 0.99
    y1 = outer.y + outer.h - f3 * (outer.y + outer.h - y0) * 0.99
    if x1 - x0 <= 0 or y1 - y0 <= 0:
        return
    inner = BBox(x0, y0, x1 - x0, y1 - y0)
    ro, ri = rasterize(outer, 80, 80), rasterize(inner, 80, 80)
    assert ri.count == 0 or ro.contains(ri)


def test_mask_observation_roundtrip_and_validation():
    arr = np.zeros((4, 5), dtype=bool)
    arr[1:3, 2:4] = True
    m = MaskObservation.from_array(arr, 0.8)
    assert m.area == 4
    assert (m.to_array() == arr).all()
    with pytest.raises(ValueError):
        MaskObservation(5, 4, (3,), 0.5)
    with pytest.raises(ValueError):
        MaskObservation(5, 4, (20,), 1.5)
    empty = MaskObservation(5, 4, (20,), 0.9)
    assert empty.empty and empty.mean_confidence == 0.0


def test_ratio_examples():
    arr = np.zeros((40, 40), dtype=bool)
    arr[0:10, 0:10] = True  # 100 px
    m = MaskObservation.from_array(arr, 0.9)
    r = mask_bbox_ratios(m, BBox(0, 0, 20, 10))  # 200 px box
    assert (r.mc, r.mf, r.inter) == (1.0, 0.5, 100)
    r = mask_bbox_ratios(m, BBox(1, 0, 20, 10))  # drops one column of 10
    assert (r.mc, r.mf, r.inter) == (0.9, 0.45, 90)
    r = mask_bbox_ratios(m, BBox(100, 100, 5, 5))
    assert (r.mc, r.mf, r.inter) == (0.0, 0.0, 0)
    z = mask_bbox_ratios(MaskObservation.from_array(np.zeros((40, 40), bool), 0.0), BBox(0, 0, 5, 5))
    assert (z.mc, z.mf) == (0.0, 0.0)


def pixel_loop(arr, b):
    h, w = arr.shape
    rect = rasterize(b, w, h)
    inter = 0
    for r in range(rect.row0, rect.row1):
        for c in range(rect.col0, rect.col1):
            inter += bool(arr[r, c])
    return inter, int(arr.sum()), rect.count


@settings(max_examples=60)
@given(st.integers(0, 2**32 - 1), boxes)
def test_ratios_match_pixel_loop(seed, b):
    rng = np.random.default_rng(seed)
    arr = rng.random((24, 32)) < rng.uniform(0.0, 0.6)
    m = MaskObservation.from_array(arr, 0.7)
    inter, area, npx = pixel_loop(arr, b)
    r = mask_bbox_ratios(m, b)
    assert r.inter == inter
    assert r.mc == (inter / area if area else 0.0)
    assert r.mf == (inter / npx if npx else 0.0)
    # shared numerator on integers
    assert round(r.mc * area) == inter == round(r.mf * npx)


def test_ratios_many_equals_single(backend):
    rng = np.random.default_rng(11)
    arr = rng.random((30, 30)) < 0.3
    m = MaskObservation.from_array(arr, 0.7)
    bs = [BBox(*rng.uniform(-5, 30, 2), *rng.uniform(1, 20, 2)) for _ in range(10)]
    assert mask_bbox_ratios_many(m, bs) == [mask_bbox_ratios(m, b) for b in bs]
