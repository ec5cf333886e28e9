"""CLEAR-MOT (MOTA, FP, FN, IDSW) and IDF1 evaluation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import assign
from .geometry import BBox, iou_matrix

IOU_MIN = 0.5

# frame -> [(object id, box), ...]
FrameBoxes = Mapping[int, Sequence[tuple[int, BBox]]]


class MetricError(ValueError):
    """Raised when a metric is undefined, e.g. for an empty ground truth."""


@dataclass(frozen=True)
class ClearEvents:
    tp: int
    fp: int
    fn: int
    idsw: int


@dataclass(frozen=True)
class EvalReport:
    mota: float
    idf1: float
    fp: int
    fn: int
    idsw: int
    gt_count: int
    idtp: int
    idfp: int
    idfn: int

    def as_dict(self) -> dict[str, float | int]:
        return {
            "mota": self.mota,
            "idf1": self.idf1,
            "fp": self.fp,
            "fn": self.fn,
            "idsw": self.idsw,
            "gt_count": self.gt_count,
            "idtp": self.idtp,
            "idfp": self.idfp,
            "idfn": self.idfn,
        }


def _check_ids(items: Sequence[tuple[int, BBox]], what: str, frame: int | None) -> None:
    ids = [i for i, _ in items]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        where = f" at frame {frame}" if frame is not None else ""
        raise ValueError(f"duplicate {what} ids {dup}{where}")


def clear_match_frame(
    gt: Sequence[tuple[int, BBox]],
    res: Sequence[tuple[int, BBox]],
    prev: Mapping[int, int],
    iou_min: float = IOU_MIN,
    frame: int | None = None,
) -> tuple[dict[int, int], ClearEvents, dict[int, int]]:
    """Match one frame.

    ``prev`` maps each ground-truth id to the result id it was last matched
    with.  Returns this frame's correspondence, the event counts and the
    updated last-match map.
    """
    _check_ids(gt, "ground-truth", frame)
    _check_ids(res, "result", frame)
    last = dict(prev)
    ious = iou_matrix([b for _, b in gt], [b for _, b in res])
    gt_ids = [i for i, _ in gt]
    res_ids = [i for i, _ in res]
    res_col = {h: j for j, h in enumerate(res_ids)}
    gt_used = [False] * len(gt)
    res_used = [False] * len(res)
    corr: dict[int, int] = {}

    # keep last frame's pairs while they still overlap enough
    for i, g in enumerate(gt_ids):
        h = last.get(g)
        j = res_col.get(h) if h is not None else None
        if j is None or res_used[j] or ious[i, j] < iou_min:
            continue
        corr[g] = h
        gt_used[i] = res_used[j] = True

    idsw = 0
    rows = [i for i in range(len(gt)) if not gt_used[i]]
    cols = [j for j in range(len(res)) if not res_used[j]]
    if rows and cols:
        sub = ious[np.ix_(rows, cols)]
        cost = np.where(sub >= iou_min, 1.0 - sub, np.inf)
        for r, c in assign.solve(cost, 1.0, max_cardinality=True).matches:
            i, j = rows[r], cols[c]
            g, h = gt_ids[i], res_ids[j]
            if g in last and last[g] != h:
                idsw += 1
            corr[g] = h
            gt_used[i] = res_used[j] = True
    for g, h in corr.items():
        last[g] = h
    events = ClearEvents(
        tp=len(corr),
        fp=len(res) - len(corr),
        fn=len(gt) - len(corr),
        idsw=idsw,
    )
    return corr, events, last


def _frames(gt: FrameBoxes, res: FrameBoxes) -> list[int]:
    return sorted(set(gt) | set(res))


def _gt_total(gt: FrameBoxes) -> int:
    return sum(len(v) for v in gt.values())


def clear_mot(gt: FrameBoxes, res: FrameBoxes, iou_min: float = IOU_MIN) -> tuple[float, ClearEvents, int]:
    """Accumulate CLEAR events over all frames; returns (mota, events, gt_count)."""
    total = _gt_total(gt)
    if total == 0:
        raise MetricError("ground truth is empty; MOTA is undefined")
    last: dict[int, int] = {}
    tp = fp = fn = idsw = 0
    for f in _frames(gt, res):
        _, ev, last = clear_match_frame(gt.get(f, ()), res.get(f, ()), last, iou_min, f)
        tp += ev.tp
        fp += ev.fp
        fn += ev.fn
        idsw += ev.idsw
    mota = 1.0 - (fp + fn + idsw) / total
    return mota, ClearEvents(tp, fp, fn, idsw), total


def mota(gt: FrameBoxes, res: FrameBoxes, iou_min: float = IOU_MIN) -> float:
    return clear_mot(gt, res, iou_min)[0]


def identity_counts(gt: FrameBoxes, res: FrameBoxes, iou_min: float = IOU_MIN) -> tuple[list[int], list[int], np.ndarray]:
    """Per (gt trajectory, result trajectory) number of frames with IoU >= iou_min."""
    gt_ids = sorted({i for v in gt.values() for i, _ in v})
    res_ids = sorted({i for v in res.values() for i, _ in v})
    gi = {g: k for k, g in enumerate(gt_ids)}
    ri = {h: k for k, h in enumerate(res_ids)}
    counts = np.zeros((len(gt_ids), len(res_ids)), dtype=np.int64)
    for f in _frames(gt, res):
        g_items = gt.get(f, ())
        r_items = res.get(f, ())
        _check_ids(g_items, "ground-truth", f)
        _check_ids(r_items, "result", f)
        if not g_items or not r_items:
            continue
        ious = iou_matrix([b for _, b in g_items], [b for _, b in r_items])
        ii, jj = np.nonzero(ious >= iou_min)
        for i, j in zip(ii.tolist(), jj.tolist()):
            counts[gi[g_items[i][0]], ri[r_items[j][0]]] += 1
    return gt_ids, res_ids, counts


def idf1(gt: FrameBoxes, res: FrameBoxes, iou_min: float = IOU_MIN) -> tuple[float, int, int, int]:
    """Returns (idf1, idtp, idfp, idfn) under the best one-to-one trajectory matching."""
    total_gt = _gt_total(gt)
    if total_gt == 0:
        raise MetricError("ground truth is empty; IDF1 is undefined")
    total_res = _gt_total(res)
    _, _, counts = identity_counts(gt, res, iou_min)
    idtp = 0
    if counts.size:
        # all entries are admissible (<= 0): a maximum-weight matching
        result = assign.solve(-counts.astype(np.float64), 0.0)
        idtp = int(sum(counts[i, j] for i, j in result.matches))
    idfp = total_res - idtp
    idfn = total_gt - idtp
    score = 2 * idtp / (2 * idtp + idfp + idfn)
    return score, idtp, idfp, idfn


def evaluate(gt: FrameBoxes, res: FrameBoxes, iou_min: float = IOU_MIN) -> EvalReport:
    m, ev, total = clear_mot(gt, res, iou_min)
    f1, idtp, idfp, idfn = idf1(gt, res, iou_min)
    return EvalReport(m, f1, ev.fp, ev.fn, ev.idsw, total, idtp, idfp, idfn)


def sequence_from_records(records: Iterable) -> dict[int, list[tuple[int, BBox]]]:
    """Group MOT records (anything with frame, id and bbox) by frame."""
    out: dict[int, list[tuple[int, BBox]]] = {}
    for r in records:
        out.setdefault(r.frame, []).append((r.id, r.bbox))
    return out
