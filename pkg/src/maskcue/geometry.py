"""Box and mask geometry: IoU, pixel rasterization and mask/box overlap ratios."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels


@dataclass(frozen=True, slots=True)
class BBox:
    """Axis-aligned box, top-left corner plus size, in continuous pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box must have positive size, got w={self.w}, h={self.h}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box has non-finite coordinates: {self}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def as_xyxy(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.x + self.w, self.y + self.h)


class PixelRect(NamedTuple):
    """Half-open integer pixel rect [col0, col1) x [row0, row1)."""

    col0: int
    row0: int
    col1: int
    row1: int

    @property
    def count(self) -> int:
        return max(self.col1 - self.col0, 0) * max(self.row1 - self.row0, 0)

    def contains(self, other: "PixelRect") -> bool:
        if other.count == 0:
            return True
        return (
            self.col0 <= other.col0
            and self.row0 <= other.row0
            and self.col1 >= other.col1
            and self.row1 >= other.row1
        )


@dataclass(frozen=True)
class MaskObservation:
    """Binary mask stored as row-major run lengths, plus its mean confidence.

    Runs alternate background/foreground and start with background; a leading
    zero run lets the mask start on a foreground pixel.
    """

    width: int
    height: int
    runs: tuple[int, ...]
    mean_confidence: float
    area: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"mask dimensions must be positive, got {self.width}x{self.height}")
        total = sum(self.runs)
        if total != self.width * self.height:
            raise ValueError(
                f"run lengths sum to {total}, expected {self.width * self.height}"
            )
        if not 0.0 <= self.mean_confidence <= 1.0:
            raise ValueError(f"mean_confidence {self.mean_confidence} outside [0, 1]")
        area = sum(self.runs[1::2])
        if area == 0 and self.mean_confidence != 0.0:
            object.__setattr__(self, "mean_confidence", 0.0)
        object.__setattr__(self, "area", area)

    @classmethod
    def from_array(cls, mask: np.ndarray, mean_confidence: float) -> "MaskObservation":
        mask = np.asarray(mask, dtype=bool)
        height, width = mask.shape
        runs = _kernels.rle_encode(mask.reshape(-1).view(np.uint8))
        conf = float(mean_confidence) if mask.any() else 0.0
        return cls(width, height, tuple(int(r) for r in runs), conf)

    def to_array(self) -> np.ndarray:
        flat = _kernels.rle_decode(np.asarray(self.runs, dtype=np.int64), self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    @property
    def empty(self) -> bool:
        return self.area == 0


def iou(a: BBox, b: BBox) -> float:
    ax1, ay1 = a.x + a.w, a.y + a.h
    bx1, by1 = b.x + b.w, b.y + b.h
    iw = min(ax1, bx1) - max(a.x, b.x)
    ih = min(ay1, by1) - max(a.y, b.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    # corner-based areas keep iou(a, a) exactly 1 despite rounding in x + w
    union = (ax1 - a.x) * (ay1 - a.y) + (bx1 - b.x) * (by1 - b.y) - inter
    return min(inter / union, 1.0)


def boxes_to_array(boxes: Sequence[BBox]) -> np.ndarray:
    if not boxes:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([b.as_tuple() for b in boxes], dtype=np.float64)


def iou_matrix(a: Sequence[BBox], b: Sequence[BBox]) -> np.ndarray:
    return _kernels.iou_matrix(boxes_to_array(a), boxes_to_array(b))


def _round_half_up(v: float) -> int:
    return math.floor(v + 0.5)


def rasterize(b: BBox, width: int, height: int) -> PixelRect:
    """Integer pixel rect covered by ``b``, clipped to the image.

    Edges are rounded half-up, so a pixel column c belongs to the rect iff
    round(x) <= c < round(x + w).
    """
    if width <= 0 or height <= 0:
        raise ValueError("image dimensions must be positive")
    col0 = min(max(_round_half_up(b.x), 0), width)
    col1 = min(max(_round_half_up(b.x + b.w), 0), width)
    row0 = min(max(_round_half_up(b.y), 0), height)
    row1 = min(max(_round_half_up(b.y + b.h), 0), height)
    if col1 <= col0 or row1 <= row0:
        return PixelRect(0, 0, 0, 0)
    return PixelRect(col0, row0, col1, row1)


class MaskBoxRatios(NamedTuple):
    mc: float
    mf: float
    inter: int


def mask_bbox_ratios(m: MaskObservation, b: BBox) -> MaskBoxRatios:
    """Coverage ``mc`` = |mask & box| / |mask| and fill ``mf`` = |mask & box| / |box|."""
    return mask_bbox_ratios_many(m, [b])[0]


def mask_bbox_ratios_many(m: MaskObservation, boxes: Sequence[BBox]) -> list[MaskBoxRatios]:
    rects = [rasterize(b, m.width, m.height) for b in boxes]
    if not rects:
        return []
    if m.area == 0:
        return [MaskBoxRatios(0.0, 0.0, 0) for _ in rects]
    counts = _kernels.rle_rect_counts(
        np.asarray(m.runs, dtype=np.int64), m.width, np.array(rects, dtype=np.int64)
    )
    out = []
    for rect, inter in zip(rects, counts.tolist()):
        npx = rect.count
        out.append(MaskBoxRatios(inter / m.area, inter / npx if npx else 0.0, int(inter)))
    return out
