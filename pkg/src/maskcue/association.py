"""IoU cost matrix, ambiguity/isolation classification and mask-cue fusion."""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .geometry import BBox, MaskObservation, iou_matrix, mask_bbox_ratios_many


class Variant(enum.Enum):
    BASELINE = "baseline"
    A1 = "a1"
    A2 = "a2"
    A3 = "a3"
    A4 = "a4"
    A5 = "a5"
    A6 = "a6"
    MCBYTE = "mcbyte"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        try:
            return cls(text.strip().lower())
        except ValueError:
            names = ", ".join(v.value for v in cls)
            raise ValueError(f"unknown variant {text!r} (expected one of {names})") from None

    @property
    def uses_masks(self) -> bool:
        return self is not Variant.BASELINE

    @property
    def uses_cmc(self) -> bool:
        return self is Variant.MCBYTE

    @property
    def gate_checks(self) -> int:
        """How many of the four mask conditions this variant enforces."""
        return {Variant.A3: 1, Variant.A4: 2, Variant.A5: 3}.get(self, 4)


class EntryClass(enum.IntEnum):
    PLAIN = 0
    AMBIGUOUS = 1
    ISOLATED = 2


@dataclass(frozen=True)
class MaskThresholds:
    mask_conf: float = 0.6
    mc_min: float = 0.9
    mf_min: float = 0.05


@dataclass(frozen=True)
class MaskGateResult:
    passed: bool
    mf: float = 0.0
    mc: float = 0.0
    failing_condition: Optional[int] = None

    @property
    def visible(self) -> bool:
        return self.failing_condition != 1


NOT_VISIBLE = MaskGateResult(False, failing_condition=1)


@dataclass(frozen=True)
class CostMatrix:
    iou_costs: np.ndarray
    fused_costs: np.ndarray
    classes: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.iou_costs.shape


def build_iou_costs(pred_boxes: Sequence[BBox], det_boxes: Sequence[BBox]) -> CostMatrix:
    costs = 1.0 - iou_matrix(pred_boxes, det_boxes)
    return CostMatrix(costs, costs.copy(), np.zeros(costs.shape, dtype=np.int8))


def classify_entries(costs: CostMatrix, match_thresh: float) -> CostMatrix:
    """Mark entries as ambiguous or isolated relative to ``match_thresh``.

    Ambiguous: the entry's row or column holds two or more sub-threshold costs.
    Isolated: the entry is at or above the threshold and neither its row nor
    its column holds any sub-threshold cost.
    """
    c = costs.iou_costs
    below = c < match_thresh
    row_cnt = below.sum(axis=1)
    col_cnt = below.sum(axis=0)
    ambiguous = (row_cnt[:, None] >= 2) | (col_cnt[None, :] >= 2)
    isolated = ~below & (row_cnt[:, None] == 0) & (col_cnt[None, :] == 0)
    classes = np.full(c.shape, EntryClass.PLAIN, dtype=np.int8)
    classes[ambiguous] = EntryClass.AMBIGUOUS
    classes[isolated] = EntryClass.ISOLATED
    return replace(costs, classes=classes)


def _gate_from_ratios(
    m: MaskObservation, mc: float, mf: float, cfg: MaskThresholds, checks: int
) -> MaskGateResult:
    if checks >= 2 and m.mean_confidence < cfg.mask_conf:
        return MaskGateResult(False, mf, mc, 2)
    if checks >= 3 and mf < cfg.mf_min:
        return MaskGateResult(False, mf, mc, 3)
    if checks >= 4 and mc < cfg.mc_min:
        return MaskGateResult(False, mf, mc, 4)
    return MaskGateResult(True, mf, mc)


def gate_mask(
    m: Optional[MaskObservation],
    det: BBox,
    cfg: MaskThresholds = MaskThresholds(),
    checks: int = 4,
) -> MaskGateResult:
    """Check conditions 1..``checks`` in order: visible, confident, fill, coverage."""
    if m is None or m.empty:
        return NOT_VISIBLE
    (ratio,) = mask_bbox_ratios_many(m, [det])
    return _gate_from_ratios(m, ratio.mc, ratio.mf, cfg, checks)


def evaluate_gates(
    masks: Sequence[Optional[MaskObservation]],
    dets: Sequence[BBox],
    cfg: MaskThresholds,
    checks: int,
    needed: Optional[np.ndarray] = None,
) -> dict[tuple[int, int], MaskGateResult]:
    """Gate results for every (tracklet, detection) pair flagged in ``needed``."""
    out: dict[tuple[int, int], MaskGateResult] = {}
    for i, m in enumerate(masks):
        cols = range(len(dets)) if needed is None else np.flatnonzero(needed[i]).tolist()
        if not cols:
            continue
        if m is None or m.empty:
            for j in cols:
                out[i, j] = NOT_VISIBLE
            continue
        ratios = mask_bbox_ratios_many(m, [dets[j] for j in cols])
        for j, r in zip(cols, ratios):
            out[i, j] = _gate_from_ratios(m, r.mc, r.mf, cfg, checks)
    return out


def fuse_costs(
    costs: CostMatrix,
    gates: dict[tuple[int, int], MaskGateResult],
    variant: Variant,
) -> CostMatrix:
    """Fold the mask cue into the IoU costs according to ``variant``.

    Pairs missing from ``gates`` count as not visible.
    """
    iou_c = costs.iou_costs
    fused = iou_c.copy()
    if variant is Variant.BASELINE:
        return replace(costs, fused_costs=fused)
    if variant in (Variant.A1, Variant.A2):
        if variant is Variant.A1:
            fused[:] = np.inf
        for (i, j), g in gates.items():
            if g.visible:
                fused[i, j] = 1.0 - g.mf
        return replace(costs, fused_costs=fused)
    for (i, j), g in gates.items():
        if g.passed and costs.classes[i, j] != EntryClass.PLAIN:
            fused[i, j] = iou_c[i, j] - g.mf
    return replace(costs, fused_costs=fused)


def associate(
    pred_boxes: Sequence[BBox],
    det_boxes: Sequence[BBox],
    masks: Sequence[Optional[MaskObservation]],
    variant: Variant,
    match_thresh: float,
    cfg: MaskThresholds = MaskThresholds(),
) -> tuple[CostMatrix, dict[tuple[int, int], MaskGateResult]]:
    """Build, classify and fuse the cost matrix for one association stage.

    ``masks[i]`` is the current mask of tracklet ``i`` (None when it has no
    mask this frame).  Gates are only evaluated where the variant can use them.
    """
    costs = build_iou_costs(pred_boxes, det_boxes)
    if not variant.uses_masks or costs.iou_costs.size == 0:
        return costs, {}
    costs = classify_entries(costs, match_thresh)
    if variant in (Variant.A1, Variant.A2):
        needed = None
    else:
        needed = costs.classes != EntryClass.PLAIN
    gates = evaluate_gates(masks, det_boxes, cfg, variant.gate_checks, needed)
    return fuse_costs(costs, gates, variant), gates
