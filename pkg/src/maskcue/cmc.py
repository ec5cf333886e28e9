"""Camera-motion compensation: per-frame affine warps applied to predicted boxes."""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol

from .geometry import BBox
from .kalman import KFState, kf_set_box, kf_to_bbox

_MIN_SIZE = sys.float_info.epsilon


@dataclass(frozen=True)
class WarpTransform:
    """Maps (x, y) to (a11 x + a12 y + a13, a21 x + a22 y + a23)."""

    a11: float = 1.0
    a12: float = 0.0
    a13: float = 0.0
    a21: float = 0.0
    a22: float = 1.0
    a23: float = 0.0

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in self.coefficients()):
            raise ValueError(f"warp has non-finite coefficients: {self.coefficients()}")
        if self.a11 * self.a22 - self.a12 * self.a21 == 0.0:
            raise ValueError("warp linear part is singular")

    @classmethod
    def translation(cls, dx: float, dy: float) -> "WarpTransform":
        return cls(1.0, 0.0, dx, 0.0, 1.0, dy)

    def coefficients(self) -> tuple[float, float, float, float, float, float]:
        return (self.a11, self.a12, self.a13, self.a21, self.a22, self.a23)

    @property
    def is_identity(self) -> bool:
        return self.coefficients() == (1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return (self.a11 * x + self.a12 * y + self.a13, self.a21 * x + self.a22 * y + self.a23)

    def then(self, other: "WarpTransform") -> "WarpTransform":
        """The warp that applies ``self`` first and ``other`` second."""
        o = other
        return WarpTransform(
            o.a11 * self.a11 + o.a12 * self.a21,
            o.a11 * self.a12 + o.a12 * self.a22,
            o.a11 * self.a13 + o.a12 * self.a23 + o.a13,
            o.a21 * self.a11 + o.a22 * self.a21,
            o.a21 * self.a12 + o.a22 * self.a22,
            o.a21 * self.a13 + o.a22 * self.a23 + o.a23,
        )


IDENTITY = WarpTransform()


def warp_bbox(b: BBox, w: WarpTransform) -> BBox:
    """Axis-aligned hull of the four warped corners."""
    if w.is_identity:
        return b
    if w.a12 == 0.0 and w.a21 == 0.0 and w.a11 > 0.0 and w.a22 > 0.0:
        # axis-aligned scale + translation keeps corners in order
        x0, y0 = w.apply(b.x, b.y)
        return BBox(x0, y0, max(w.a11 * b.w, _MIN_SIZE), max(w.a22 * b.h, _MIN_SIZE))
    xs, ys = [], []
    for cx, cy in ((b.x, b.y), (b.x + b.w, b.y), (b.x, b.y + b.h), (b.x + b.w, b.y + b.h)):
        px, py = w.apply(cx, cy)
        xs.append(px)
        ys.append(py)
    x0, y0 = min(xs), min(ys)
    return BBox(x0, y0, max(max(xs) - x0, _MIN_SIZE), max(max(ys) - y0, _MIN_SIZE))


def warp_state(s: KFState, w: WarpTransform) -> KFState:
    """Move the predicted box of ``s`` through ``w``; covariance is left untouched."""
    if w.is_identity:
        return s
    return kf_set_box(s, warp_bbox(kf_to_bbox(s), w))


def apply_to_predictions(tracklets: Iterable, w: WarpTransform) -> list:
    """Warp the predicted state of every tracklet in place and return them."""
    out = list(tracklets)
    if w.is_identity:
        return out
    for t in out:
        t.state = warp_state(t.state, w)
    return out


class WarpSource(Protocol):
    def warp(self, frame: int) -> WarpTransform: ...


class IdentityWarps:
    def warp(self, frame: int) -> WarpTransform:
        return IDENTITY


class MissingWarpError(LookupError):
    pass


class FileWarps:
    """Warps read from a warp file, one per frame."""

    def __init__(self, table: Mapping[int, WarpTransform], source: str = "<memory>"):
        self._table = dict(table)
        self.source = source

    @classmethod
    def from_path(cls, path: str | Path) -> "FileWarps":
        from .io import read_warps

        return cls(read_warps(path), str(path))

    def warp(self, frame: int) -> WarpTransform:
        try:
            return self._table[frame]
        except KeyError:
            raise MissingWarpError(f"{self.source}: no warp entry for frame {frame}") from None

    def frames(self) -> list[int]:
        return sorted(self._table)


def warp_provider(kind: str, path: str | Path | None = None) -> WarpSource:
    if kind == "identity":
        return IdentityWarps()
    if kind == "file":
        if path is None:
            raise ValueError("file warp provider needs a path")
        return FileWarps.from_path(path)
    raise ValueError(f"unknown warp provider {kind!r}")
