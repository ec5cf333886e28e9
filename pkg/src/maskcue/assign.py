"""Gated minimum-cost bipartite matching."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class Assignment:
    matches: list[tuple[int, int]]
    unmatched_rows: list[int]
    unmatched_cols: list[int]


def solve(costs, gate: float, max_cardinality: bool = False) -> Assignment:
    """Match rows to columns, never pairing an entry whose cost exceeds ``gate``.

    Entries above the gate are excluded outright.  Among the remaining pairs
    the matching minimises the sum of (cost - gate): a pair is taken whenever
    it costs no more than the gate, unless taking it would force a costlier
    arrangement elsewhere.  This is the behaviour of a Jonker-Volgenant solve
    with ``cost_limit=gate``.  With ``max_cardinality=True`` the result instead
    has the most admissible pairs possible and the lowest total cost among
    those (the classic "infinite sentinel" reading).

    Non-finite entries are never admissible; negative costs are fine.
    Matches are returned sorted by row.
    """
    c = np.asarray(costs, dtype=np.float64)
    if c.ndim != 2:
        if c.size == 0:
            c = c.reshape(0, 0)
        else:
            raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    n, m = c.shape
    if n == 0 or m == 0:
        return Assignment([], list(range(n)), list(range(m)))
    rows, cols = _kernels.min_cost_matching(c, float(gate), max_cardinality)
    matches = list(zip(rows.tolist(), cols.tolist()))
    used_r = set(rows.tolist())
    used_c = set(cols.tolist())
    return Assignment(
        matches,
        [i for i in range(n) if i not in used_r],
        [j for j in range(m) if j not in used_c],
    )
