"""Pure numpy/Python implementations of the hot kernels.

Same signatures and results as the compiled ``_native`` module.  The
matching solver mirrors the compiled loop operation for operation so both
backends return identical assignments on identical input.
"""
from __future__ import annotations

import math

import numpy as np

NAME = "pure"


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]), dtype=np.float64)
    ax0, ay0 = a[:, 0:1], a[:, 1:2]
    ax1, ay1 = ax0 + a[:, 2:3], ay0 + a[:, 3:4]
    bx0, by0 = b[:, 0], b[:, 1]
    bx1, by1 = bx0 + b[:, 2], by0 + b[:, 3]
    iw = np.minimum(ax1, bx1) - np.maximum(ax0, bx0)
    ih = np.minimum(ay1, by1) - np.maximum(ay0, by0)
    iw = np.maximum(iw, 0.0)
    ih = np.maximum(ih, 0.0)
    inter = iw * ih
    # areas from the same corner arithmetic as the overlap, so iou(a, a) == 1
    union = (ax1 - ax0) * (ay1 - ay0) + (bx1 - bx0) * (by1 - by0) - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=inter > 0.0)
    return np.minimum(out, 1.0)


def rle_encode(flat: np.ndarray) -> np.ndarray:
    flat = np.ascontiguousarray(flat).reshape(-1).astype(bool)
    n = flat.size
    if n == 0:
        return np.zeros(1, dtype=np.int64)
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [n]))
    runs = np.diff(bounds).astype(np.int64)
    if flat[0]:
        runs = np.concatenate(([0], runs)).astype(np.int64)
    return runs


def rle_decode(runs: np.ndarray, n: int) -> np.ndarray:
    runs = np.asarray(runs, dtype=np.int64)
    values = (np.arange(runs.size) % 2).astype(np.uint8)
    flat = np.repeat(values, runs)
    if flat.size != n:
        raise ValueError(f"run lengths sum to {flat.size}, expected {n}")
    return flat


def rle_rect_counts(runs: np.ndarray, width: int, rects: np.ndarray) -> np.ndarray:
    """Foreground pixels of an RLE mask inside each half-open rect (c0, r0, c1, r1)."""
    runs = np.asarray(runs, dtype=np.int64)
    rects = np.asarray(rects, dtype=np.int64).reshape(-1, 4)
    total = int(runs.sum())
    out = np.zeros(rects.shape[0], dtype=np.int64)
    if total == 0 or rects.shape[0] == 0:
        return out
    height = total // width
    grid = rle_decode(runs, total).reshape(height, width).astype(np.int64)
    integral = np.zeros((height + 1, width + 1), dtype=np.int64)
    integral[1:, 1:] = grid.cumsum(axis=0).cumsum(axis=1)
    c0, r0, c1, r1 = rects[:, 0], rects[:, 1], rects[:, 2], rects[:, 3]
    ok = (c1 > c0) & (r1 > r0)
    c0 = np.where(ok, c0, 0)
    r0 = np.where(ok, r0, 0)
    c1 = np.where(ok, c1, 0)
    r1 = np.where(ok, r1, 0)
    out[:] = integral[r1, c1] - integral[r0, c1] - integral[r1, c0] + integral[r0, c0]
    return out


def min_cost_matching(
    cost: np.ndarray, gate: float, max_cardinality: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Gated matching over entries with cost <= gate.

    Default objective: minimise the sum of (cost - gate) over matched pairs,
    so a pair is only taken when it pays off against leaving both ends
    unmatched.  With ``max_cardinality`` the matching instead has as many
    pairs as possible and, among those, the lowest total cost.

    Successive shortest augmenting paths with node potentials, multi-source
    from every free row.  Path lengths never decrease between augmentations,
    so the default objective stops at the first path longer than zero.
    Returns matched (rows, cols) sorted by row.
    """
    cost = np.ascontiguousarray(cost, dtype=np.float64)
    n, m = cost.shape
    raw = cost.tolist()
    feas = [[(raw[i][j] <= gate) for j in range(m)] for i in range(n)]
    c = [[(raw[i][j] - gate) if feas[i][j] else 0.0 for j in range(m)] for i in range(n)]
    row_match = [-1] * n
    col_match = [-1] * m
    pot_r = [0.0] * n
    pot_c = [0.0] * m
    for j in range(m):
        best = 0.0
        seen = False
        for i in range(n):
            if feas[i][j] and (not seen or c[i][j] < best):
                best = c[i][j]
                seen = True
        pot_c[j] = best

    inf = math.inf
    while True:
        dist_r = [inf] * n
        dist_c = [inf] * m
        done_r = [False] * n
        done_c = [False] * m
        prev_c = [-1] * m  # row that reached column j
        for i in range(n):
            if row_match[i] < 0:
                dist_r[i] = 0.0
        # dense Dijkstra; rows occupy indices [0, n), columns [n, n + m)
        while True:
            best = inf
            node = -1
            for i in range(n):
                if not done_r[i] and dist_r[i] < best:
                    best = dist_r[i]
                    node = i
            for j in range(m):
                if not done_c[j] and dist_c[j] < best:
                    best = dist_c[j]
                    node = n + j
            if node < 0:
                break
            if node < n:
                i = node
                done_r[i] = True
                ci = c[i]
                fi = feas[i]
                for j in range(m):
                    if done_c[j] or not fi[j] or row_match[i] == j:
                        continue
                    nd = best + (ci[j] + pot_r[i] - pot_c[j])
                    if nd < dist_c[j]:
                        dist_c[j] = nd
                        prev_c[j] = i
            else:
                j = node - n
                done_c[j] = True
                i = col_match[j]
                if i >= 0 and not done_r[i]:
                    nd = best + (pot_c[j] - c[i][j] - pot_r[i])
                    if nd < dist_r[i]:
                        dist_r[i] = nd

        target = -1
        best = inf
        for j in range(m):
            if col_match[j] < 0 and done_c[j]:
                d = dist_c[j] + pot_c[j]
                if d < best:
                    best = d
                    target = j
        if target < 0 or (best > 0.0 and not max_cardinality):
            break

        dmax = 0.0
        for i in range(n):
            if done_r[i] and dist_r[i] > dmax:
                dmax = dist_r[i]
        for j in range(m):
            if done_c[j] and dist_c[j] > dmax:
                dmax = dist_c[j]
        for i in range(n):
            pot_r[i] += dist_r[i] if done_r[i] else dmax
        for j in range(m):
            pot_c[j] += dist_c[j] if done_c[j] else dmax

        j = target
        while j >= 0:
            i = prev_c[j]
            nxt = row_match[i]
            row_match[i] = j
            col_match[j] = i
            j = nxt

    rows = [i for i in range(n) if row_match[i] >= 0]
    cols = [row_match[i] for i in rows]
    return np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64)
