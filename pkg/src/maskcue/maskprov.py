"""Per-tracklet mask sources standing in for the segmenter and mask propagator.

A provider binds a new tracklet to a mask stream (``bind``), serves the
stream's observation at each frame (``fetch``) and forgets the binding when
the tracklet dies (``release``).  An absent observation means the object is
not visible at that frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np
from scipy import ndimage

from .geometry import BBox, MaskObservation, iou

BIND_MIN_IOU = 0.5


@dataclass
class MaskStream:
    stream_id: int
    birth_frame: int
    birth_bbox: BBox
    frames: dict[int, MaskObservation] = field(default_factory=dict)


@dataclass(frozen=True)
class MaskNoise:
    """Stress model for imperfect propagated masks.

    ``dilate_px`` grows (positive) or shrinks (negative) the mask with a square
    structuring element.  ``leak_prob`` merges a neighbouring object's mask
    into this one and ``swap_prob`` replaces the mask by the neighbour's (the
    propagator jumped to the occluder); both lower confidence by
    ``leak_conf_drop`` and only apply when the caller supplies a neighbour.
    """

    dilate_px: int = 0
    conf_drop: float = 0.0
    dropout_prob: float = 0.0
    leak_prob: float = 0.0
    leak_conf_drop: float = 0.0
    swap_prob: float = 0.0

    def __post_init__(self) -> None:
        for name in ("conf_drop", "dropout_prob", "leak_prob", "leak_conf_drop", "swap_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")

    @property
    def is_zero(self) -> bool:
        return self == MaskNoise()


def _morph(mask: np.ndarray, px: int) -> np.ndarray:
    """Square dilation (px > 0) or erosion (px < 0), computed on a padded crop."""
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        return mask
    r = abs(px)
    r0, r1 = max(rows[0] - r, 0), min(rows[-1] + r + 1, mask.shape[0])
    c0, c1 = max(cols[0] - r, 0), min(cols[-1] + r + 1, mask.shape[1])
    structure = np.ones((2 * r + 1, 2 * r + 1), dtype=bool)
    crop = mask[r0:r1, c0:c1]
    if px > 0:
        crop = ndimage.binary_dilation(crop, structure=structure)
    else:
        # pixels beyond the image edge count as background
        crop = ndimage.binary_erosion(crop, structure=structure, border_value=0)
    out = np.zeros_like(mask)
    out[r0:r1, c0:c1] = crop
    return out


def oracle_noise(
    observation: Optional[MaskObservation],
    cfg: MaskNoise,
    rng: np.random.Generator,
    neighbour: Optional[MaskObservation] = None,
) -> Optional[MaskObservation]:
    """Corrupt one observation.  Draws a fixed number of variates per call."""
    u_drop, u_leak, u_swap = rng.random(3)
    if observation is None or cfg.is_zero:
        return observation
    if u_drop < cfg.dropout_prob:
        return None
    conf = observation.mean_confidence
    mask = None
    if cfg.dilate_px:
        mask = _morph(observation.to_array(), cfg.dilate_px)
    if neighbour is not None and not neighbour.empty and u_swap < cfg.swap_prob:
        mask = neighbour.to_array()
        conf -= cfg.leak_conf_drop
    elif neighbour is not None and not neighbour.empty and u_leak < cfg.leak_prob:
        if mask is None:
            mask = observation.to_array()
        mask = mask | neighbour.to_array()
        conf -= cfg.leak_conf_drop
    conf = min(max(conf - cfg.conf_drop, 0.0), 1.0)
    if mask is None:
        if conf == observation.mean_confidence:
            return observation
        return MaskObservation(observation.width, observation.height, observation.runs, conf)
    if not mask.any():
        return None
    return MaskObservation.from_array(mask, conf)


class MaskProvider(Protocol):
    def bind(self, birth_frame: int, det_bbox: BBox) -> Optional[int]: ...

    def fetch(self, handle: int, frame: int) -> Optional[MaskObservation]: ...

    def release(self, handle: int) -> None: ...


class NoMasks:
    """Provider that never binds; every tracklet runs on IoU alone."""

    def bind(self, birth_frame: int, det_bbox: BBox) -> Optional[int]:
        return None

    def fetch(self, handle: int, frame: int) -> Optional[MaskObservation]:
        return None

    def release(self, handle: int) -> None:
        pass


class FileMaskProvider:
    """Serves precomputed mask streams; each stream binds at most once."""

    def __init__(self, streams: Sequence[MaskStream]):
        self.streams = {s.stream_id: s for s in streams}
        self._bound: set[int] = set()
        self._live: set[int] = set()

    @classmethod
    def from_path(cls, path: str | Path) -> "FileMaskProvider":
        from .io import read_masks

        return cls(read_masks(path))

    def bind(self, birth_frame: int, det_bbox: BBox) -> Optional[int]:
        best, best_iou = None, BIND_MIN_IOU
        for sid in sorted(self.streams):
            s = self.streams[sid]
            if sid in self._bound or s.birth_frame != birth_frame:
                continue
            v = iou(s.birth_bbox, det_bbox)
            if v > best_iou or (v == best_iou and best is None):
                best, best_iou = sid, v
        if best is not None:
            self._bound.add(best)
            self._live.add(best)
        return best

    def fetch(self, handle: int, frame: int) -> Optional[MaskObservation]:
        if handle not in self._live:
            raise KeyError(f"mask stream {handle} is not bound")
        return self.streams[handle].frames.get(frame)

    def release(self, handle: int) -> None:
        self._live.discard(handle)


class OracleMaskProvider:
    """Binds new tracklets to ground-truth objects by box overlap.

    ``gt_boxes[frame][obj]`` gives the ground-truth boxes and
    ``masks[obj][frame]`` the (possibly corrupted) observation of each object.
    Every bind opens a fresh stream, so an object that lost its tracklet can be
    picked up again by the next one, like a segmenter run on a new detection.
    """

    def __init__(
        self,
        gt_boxes: Mapping[int, Mapping[int, BBox]],
        masks: Mapping[int, Mapping[int, MaskObservation]],
    ):
        self.gt_boxes = gt_boxes
        self.masks = masks
        self._streams: dict[int, int] = {}
        self._next = 1

    def bind(self, birth_frame: int, det_bbox: BBox) -> Optional[int]:
        best, best_iou = None, BIND_MIN_IOU
        for obj, box in sorted(self.gt_boxes.get(birth_frame, {}).items()):
            v = iou(box, det_bbox)
            if v > best_iou or (v == best_iou and best is None):
                best, best_iou = obj, v
        if best is None:
            return None
        handle = self._next
        self._next += 1
        self._streams[handle] = best
        return handle

    def bound_object(self, handle: int) -> int:
        return self._streams[handle]

    def fetch(self, handle: int, frame: int) -> Optional[MaskObservation]:
        obj = self._streams[handle]
        return self.masks.get(obj, {}).get(frame)

    def release(self, handle: int) -> None:
        self._streams.pop(handle, None)
