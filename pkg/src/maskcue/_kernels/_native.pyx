# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  Mirrors ``_pure`` function for function."""
import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

NAME = "native"


def iou_matrix(a, b):
    cdef double[:, ::1] av = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    cdef double[:, ::1] bv = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = av.shape[0], m = bv.shape[0], i, j
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double ax0, ay0, ax1, ay1, aa, bx0, by0, bx1, by1, iw, ih, inter, union
    for i in range(n):
        ax0 = av[i, 0]
        ay0 = av[i, 1]
        ax1 = ax0 + av[i, 2]
        ay1 = ay0 + av[i, 3]
        # areas from the same corner arithmetic as the overlap, so iou(a, a) == 1
        aa = (ax1 - ax0) * (ay1 - ay0)
        for j in range(m):
            bx0 = bv[j, 0]
            by0 = bv[j, 1]
            bx1 = bx0 + bv[j, 2]
            by1 = by0 + bv[j, 3]
            iw = min(ax1, bx1) - max(ax0, bx0)
            ih = min(ay1, by1) - max(ay0, by0)
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            union = aa + (bx1 - bx0) * (by1 - by0) - inter
            o[i, j] = min(inter / union, 1.0)
    return out


# a scalar loop loses to numpy's vectorised compare here (about 4x on a
# 640x360 frame), so the compiled backend shares the numpy encoder
from ._pure import rle_encode


def rle_decode(runs, Py_ssize_t n):
    cdef cnp.int64_t[::1] r = np.ascontiguousarray(runs, dtype=np.int64)
    cdef Py_ssize_t k, p, pos = 0, total = 0
    for k in range(r.shape[0]):
        total += r[k]
    if total != n:
        raise ValueError(f"run lengths sum to {total}, expected {n}")
    out = np.zeros(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    for k in range(r.shape[0]):
        if k % 2 == 1:
            for p in range(pos, pos + r[k]):
                o[p] = 1
        pos += r[k]
    return out


def rle_rect_counts(runs, Py_ssize_t width, rects):
    """Foreground pixels of an RLE mask inside each half-open rect (c0, r0, c1, r1)."""
    cdef cnp.int64_t[::1] r = np.ascontiguousarray(runs, dtype=np.int64)
    cdef cnp.int64_t[:, ::1] rc = np.ascontiguousarray(rects, dtype=np.int64).reshape(-1, 4)
    cdef Py_ssize_t nrect = rc.shape[0], k, q, pos = 0, s, e, row, rs, lo, hi
    cdef cnp.int64_t c0, r0, c1, r1
    out = np.zeros(nrect, dtype=np.int64)
    cdef cnp.int64_t[::1] o = out
    for k in range(r.shape[0]):
        s = pos
        e = pos + r[k]
        pos = e
        if k % 2 == 0 or e <= s:
            continue
        row = s // width
        while row * width < e:
            rs = row * width
            lo = s - rs if s > rs else 0
            hi = e - rs if e - rs < width else width
            for q in range(nrect):
                c0 = rc[q, 0]
                r0 = rc[q, 1]
                c1 = rc[q, 2]
                r1 = rc[q, 3]
                if row < r0 or row >= r1 or c1 <= c0:
                    continue
                if hi > c0 and lo < c1:
                    o[q] += (hi if hi < c1 else c1) - (lo if lo > c0 else c0)
            row += 1
    return out


def min_cost_matching(cost, double gate, bint max_cardinality=False):
    """Gated matching over entries with cost <= gate; see ``_pure``."""
    cdef double[:, ::1] raw = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t n = raw.shape[0], m = raw.shape[1], i, j, node, target, nxt
    cdef double[:, ::1] c = np.zeros((n, m), dtype=np.float64)
    cdef double best, nd, d, dmax
    cdef bint seen
    feas_a = np.zeros((n, m), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] feas = feas_a
    row_match_a = np.full(n, -1, dtype=np.int64)
    col_match_a = np.full(m, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] row_match = row_match_a
    cdef cnp.int64_t[::1] col_match = col_match_a
    cdef double[::1] pot_r = np.zeros(n, dtype=np.float64)
    cdef double[::1] pot_c = np.zeros(m, dtype=np.float64)
    cdef double[::1] dist_r = np.empty(n, dtype=np.float64)
    cdef double[::1] dist_c = np.empty(m, dtype=np.float64)
    cdef cnp.uint8_t[::1] done_r = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] done_c = np.empty(m, dtype=np.uint8)
    cdef cnp.int64_t[::1] prev_c = np.empty(m, dtype=np.int64)

    for i in range(n):
        for j in range(m):
            feas[i, j] = raw[i, j] <= gate
            if feas[i, j]:
                c[i, j] = raw[i, j] - gate
    for j in range(m):
        best = 0.0
        seen = False
        for i in range(n):
            if feas[i, j] and (not seen or c[i, j] < best):
                best = c[i, j]
                seen = True
        pot_c[j] = best

    while True:
        for i in range(n):
            dist_r[i] = 0.0 if row_match[i] < 0 else INFINITY
            done_r[i] = 0
        for j in range(m):
            dist_c[j] = INFINITY
            done_c[j] = 0
            prev_c[j] = -1
        while True:
            best = INFINITY
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
                done_r[i] = 1
                for j in range(m):
                    if done_c[j] or not feas[i, j] or row_match[i] == j:
                        continue
                    nd = best + (c[i, j] + pot_r[i] - pot_c[j])
                    if nd < dist_c[j]:
                        dist_c[j] = nd
                        prev_c[j] = i
            else:
                j = node - n
                done_c[j] = 1
                i = col_match[j]
                if i >= 0 and not done_r[i]:
                    nd = best + (pot_c[j] - c[i, j] - pot_r[i])
                    if nd < dist_r[i]:
                        dist_r[i] = nd

        target = -1
        best = INFINITY
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

    rows = np.flatnonzero(row_match_a >= 0).astype(np.int64)
    return rows, row_match_a[rows].copy()
