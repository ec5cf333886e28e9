"""Per-frame tracking pipeline: BYTE-style staged association with the mask cue."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

from . import assign
from .association import MaskGateResult, Variant, associate
from .cmc import IDENTITY, WarpSource, WarpTransform, apply_to_predictions
from .config import TrackerConfig
from .geometry import BBox, MaskObservation
from .kalman import KFState, kf_init, kf_predict, kf_to_bbox, kf_update
from .maskprov import MaskProvider, NoMasks

__all__ = [
    "Detection",
    "FrameInput",
    "GateRecord",
    "SequenceError",
    "Status",
    "TrackOutput",
    "Tracker",
    "TrackerConfig",
    "Tracklet",
    "run_sequence",
    "split_detections",
]

log = logging.getLogger(__name__)


class Status(enum.Enum):
    TENTATIVE = "tentative"
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


_ALLOWED = {
    Status.TENTATIVE: {Status.ACTIVE, Status.REMOVED},
    Status.ACTIVE: {Status.LOST},
    Status.LOST: {Status.ACTIVE, Status.REMOVED},
    Status.REMOVED: set(),
}


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


@dataclass(eq=False)
class Tracklet:
    id: int
    state: KFState
    status: Status
    start_frame: int
    last_matched_frame: int
    score: float
    mask_binding: Optional[int] = None

    @property
    def bbox(self) -> BBox:
        return kf_to_bbox(self.state)

    def set_status(self, new: Status) -> None:
        if new is self.status:
            return
        if new not in _ALLOWED[self.status]:
            raise RuntimeError(f"tracklet {self.id}: illegal transition {self.status.value} -> {new.value}")
        self.status = new


class TrackOutput(NamedTuple):
    id: int
    bbox: BBox
    score: float


class GateRecord(NamedTuple):
    frame: int
    stage: int
    track_id: int
    det_index: int
    result: MaskGateResult


class SequenceError(RuntimeError):
    pass


def split_detections(
    dets: Sequence[Detection], cfg: TrackerConfig
) -> tuple[list[Detection], list[Detection]]:
    """High (score >= det_high) and low (det_low_floor <= score < det_high) groups."""
    high = [d for d in dets if d.score >= cfg.det_high]
    low = [d for d in dets if cfg.det_low_floor <= d.score < cfg.det_high]
    return high, low


class Tracker:
    """Tracker state for one sequence.  Feed frames in order to ``process_frame``."""

    def __init__(
        self,
        cfg: TrackerConfig = TrackerConfig(),
        masks: Optional[MaskProvider] = None,
        record_gates: bool = False,
    ):
        self.cfg = cfg
        self.variant = cfg.variant
        self.masks: MaskProvider = masks if masks is not None else NoMasks()
        self.tracklets: list[Tracklet] = []
        self.frame: Optional[int] = None
        self.first_frame: Optional[int] = None
        self._next_id = 1
        self.record_gates = record_gates
        self.gate_log: list[GateRecord] = []
        self.bind_requests: list[tuple[int, int]] = []  # (frame, track id)
        self.releases: list[tuple[int, int]] = []  # (frame, track id)
        self._mask_cache: dict[int, Optional[MaskObservation]] = {}

    # -- helpers ---------------------------------------------------------------

    def _mask_of(self, t: Tracklet, override: Optional[Mapping[int, MaskObservation]]) -> Optional[MaskObservation]:
        if override is not None:
            return override.get(t.id)
        if t.mask_binding is None:
            return None
        if t.id not in self._mask_cache:
            self._mask_cache[t.id] = self.masks.fetch(t.mask_binding, self.frame)
        return self._mask_cache[t.id]

    def _match(
        self,
        stage: int,
        tracks: list[Tracklet],
        dets: list[Detection],
        gate: float,
        override: Optional[Mapping[int, MaskObservation]],
    ) -> assign.Assignment:
        if not tracks or not dets:
            return assign.Assignment([], list(range(len(tracks))), list(range(len(dets))))
        preds = [t.bbox for t in tracks]
        boxes = [d.bbox for d in dets]
        if self.variant.uses_masks:
            track_masks = [self._mask_of(t, override) for t in tracks]
        else:
            track_masks = [None] * len(tracks)
        costs, gates = associate(
            preds, boxes, track_masks, self.variant, gate, self.cfg.mask_thresholds
        )
        if self.record_gates:
            for (i, j), g in sorted(gates.items()):
                self.gate_log.append(GateRecord(self.frame, stage, tracks[i].id, j, g))
        return assign.solve(costs.fused_costs, gate)

    def _apply(self, t: Tracklet, det: Detection) -> None:
        t.state = kf_update(t.state, det.bbox)
        t.score = det.score
        t.last_matched_frame = self.frame
        t.set_status(Status.ACTIVE)

    # -- pipeline --------------------------------------------------------------

    def process_frame(
        self,
        frame_idx: int,
        dets: Sequence[Detection],
        warp: WarpTransform = IDENTITY,
        masks: Optional[Mapping[int, MaskObservation]] = None,
    ) -> list[TrackOutput]:
        """Advance one frame and return the active tracklets' boxes.

        ``masks`` optionally overrides the provider with explicit per-tracklet
        observations keyed by tracklet id.
        """
        if self.frame is not None and frame_idx != self.frame + 1:
            raise SequenceError(f"frame {frame_idx} does not follow frame {self.frame}")
        self.frame = frame_idx
        if self.first_frame is None:
            self.first_frame = frame_idx
        self._mask_cache = {}
        cfg = self.cfg

        # (a) motion prediction; lost tracks stop growing in height
        for t in self.tracklets:
            if t.status is Status.LOST:
                mean = t.state.mean.copy()
                mean[7] = 0.0
                t.state = KFState(mean, t.state.cov)
            t.state = kf_predict(t.state)
        # (b) camera-motion compensation
        if self.variant.uses_cmc:
            apply_to_predictions(self.tracklets, warp)

        high, low = split_detections(dets, cfg)
        confirmed = [t for t in self.tracklets if t.status in (Status.ACTIVE, Status.LOST)]
        tentative = [t for t in self.tracklets if t.status is Status.TENTATIVE]

        # (c) stage 1: active + lost vs high detections
        a1 = self._match(1, confirmed, high, cfg.match_stage1, masks)
        for i, j in a1.matches:
            self._apply(confirmed[i], high[j])
        rest_high = [high[j] for j in a1.unmatched_cols]

        # (d) stage 2: still-unmatched active tracks vs low detections
        remaining = [confirmed[i] for i in a1.unmatched_rows if confirmed[i].status is Status.ACTIVE]
        a2 = self._match(2, remaining, low, cfg.match_stage2, masks)
        for i, j in a2.matches:
            self._apply(remaining[i], low[j])
        for i in a2.unmatched_rows:
            remaining[i].set_status(Status.LOST)

        # (e) stage 3: tentative tracks vs leftover high detections
        a3 = self._match(3, tentative, rest_high, cfg.match_unconfirmed, masks)
        for i, j in a3.matches:
            self._apply(tentative[i], rest_high[j])
        removed = [tentative[i] for i in a3.unmatched_rows]
        for t in removed:
            t.set_status(Status.REMOVED)
        new_dets = [rest_high[j] for j in a3.unmatched_cols]

        # (g) expire lost tracks
        for t in self.tracklets:
            if t.status is Status.LOST and self.frame - t.last_matched_frame > cfg.track_buffer:
                t.set_status(Status.REMOVED)
                removed.append(t)

        # (h) births
        born = []
        for d in new_dets:
            if d.score < cfg.new_track:
                continue
            status = Status.ACTIVE if self.frame == self.first_frame else Status.TENTATIVE
            t = Tracklet(self._next_id, kf_init(d.bbox), status, self.frame, self.frame, d.score)
            self._next_id += 1
            born.append(t)
        self.tracklets.extend(born)

        self.sync_mask_lifecycle(born, removed)
        self.tracklets = [t for t in self.tracklets if t.status is not Status.REMOVED]

        # (i) outputs
        return [
            TrackOutput(t.id, t.bbox, t.score)
            for t in sorted(self.tracklets, key=lambda t: t.id)
            if t.status is Status.ACTIVE
        ]

    def sync_mask_lifecycle(self, born: Sequence[Tracklet], removed: Sequence[Tracklet]) -> None:
        """Bind a mask stream for each new tracklet and release those of dead ones."""
        for t in removed:
            if t.mask_binding is not None:
                self.masks.release(t.mask_binding)
                self.releases.append((self.frame, t.id))
                t.mask_binding = None
        if not self.variant.uses_masks:
            return
        for t in born:
            self.bind_requests.append((self.frame, t.id))
            try:
                t.mask_binding = self.masks.bind(self.frame, t.bbox)
            except Exception:  # provider failure: run this tracklet on IoU alone
                log.warning("mask bind failed for tracklet %d at frame %d", t.id, self.frame, exc_info=True)
                t.mask_binding = None

    def bound_tracklets(self) -> set[int]:
        return {t.id for t in self.tracklets if t.mask_binding is not None}


@dataclass
class FrameInput:
    frame: int
    detections: list[Detection]
    warp: WarpTransform = IDENTITY
    masks: Optional[Mapping[int, MaskObservation]] = None


class FrameError(RuntimeError):
    def __init__(self, frame: int, cause: BaseException):
        super().__init__(f"frame {frame}: {cause}")
        self.frame = frame
        self.cause = cause


def run_sequence(
    frames: Iterable[FrameInput],
    cfg: TrackerConfig = TrackerConfig(),
    masks: Optional[MaskProvider] = None,
    tracker: Optional[Tracker] = None,
) -> list[list[TrackOutput]]:
    """Run a tracker over ``frames`` and collect each frame's outputs."""
    tr = tracker if tracker is not None else Tracker(cfg, masks)
    out = []
    for f in frames:
        try:
            out.append(tr.process_frame(f.frame, f.detections, f.warp, f.masks))
        except SequenceError:
            raise
        except Exception as exc:
            raise FrameError(f.frame, exc) from exc
    return out


def frames_from_records(
    det_by_frame: Mapping[int, Sequence[Detection]],
    n_frames: int,
    warps: Optional[WarpSource] = None,
    first_frame: int = 1,
) -> Iterator[FrameInput]:
    """Frame inputs for frames ``first_frame..n_frames``, empty where no detections."""
    for f in range(first_frame, n_frames + 1):
        w = warps.warp(f) if warps is not None else IDENTITY
        yield FrameInput(f, list(det_by_frame.get(f, ())), w)
