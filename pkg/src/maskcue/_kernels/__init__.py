"""Hot kernels with a compiled backend and a pure numpy fallback.

The compiled extension is picked at import when it was built; otherwise the
pure implementation is used.  ``use()`` switches backends at runtime, which
the benchmark and the cross-backend tests rely on.
"""
from __future__ import annotations

import numpy as np

from . import _pure

try:
    from . import _native  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _native = None

_impl = _native if _native is not None else _pure


def available() -> list[str]:
    return ["native", "pure"] if _native is not None else ["pure"]


def active() -> str:
    return _impl.NAME


def use(name: str) -> None:
    """Select the backend by name ("native" or "pure")."""
    global _impl
    if name == "pure":
        _impl = _pure
    elif name == "native":
        if _native is None:
            raise RuntimeError("compiled kernels are not built")
        _impl = _native
    else:
        raise ValueError(f"unknown backend {name!r}")


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (n, 4) and (m, 4) arrays of (x, y, w, h) boxes."""
    return _impl.iou_matrix(a, b)


def rle_encode(flat: np.ndarray) -> np.ndarray:
    return _impl.rle_encode(flat)


def rle_decode(runs: np.ndarray, n: int) -> np.ndarray:
    return _impl.rle_decode(runs, n)


def rle_rect_counts(runs: np.ndarray, width: int, rects: np.ndarray) -> np.ndarray:
    return _impl.rle_rect_counts(runs, width, rects)


def min_cost_matching(
    cost: np.ndarray, gate: float, max_cardinality: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    return _impl.min_cost_matching(cost, gate, max_cardinality)
