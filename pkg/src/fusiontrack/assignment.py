"""Rectangular linear assignment (Hungarian method with potentials).

The solver is the shortest-augmenting-path variant, O(n^2 m) for an n x m
matrix with n <= m. It is written out rather than delegated because ties need
a fixed rule: among optimal matchings the one whose row-sorted pair list is
lexicographically smallest is returned. A refinement pass walks the rows in
order and tries lower column indices, restricted to edges that are tight under
the optimal duals; each candidate is confirmed by re-solving the remainder and
comparing ``math.fsum`` totals, so the pass never gives up optimality.
"""

from __future__ import annotations

import math

import numpy as np

SENTINEL = 1e12


def _hungarian(cost: np.ndarray) -> tuple[list[int], list[float], list[float]]:
    """Return ``(col_of_row, u, v)`` for an n x m matrix with n <= m.

    ``u`` and ``v`` are the row and column potentials (1-based, index 0 unused);
    ``cost[i, j] - u[i+1] - v[j+1] >= 0`` with equality on every optimal edge.
    """
    n, m = cost.shape
    inf = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (m + 1)
    match = [0] * (m + 1)  # match[j] = row (1-based) assigned to column j, 0 = free
    way = [0] * (m + 1)
    rows = cost.tolist()
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            row = rows[i0 - 1]
            ui0 = u[i0]
            delta = inf
            j1 = -1
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - ui0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    col_of_row = [-1] * n
    for j in range(1, m + 1):
        if match[j]:
            col_of_row[match[j] - 1] = j - 1
    return col_of_row, u, v


def _raw(c: np.ndarray) -> tuple[list[tuple[int, int]], np.ndarray]:
    """One Hungarian solve: pairs sorted by row, plus a mask of tight edges."""
    n, m = c.shape
    flip = n > m
    a = c.T if flip else c
    cols, u, v = _hungarian(a)
    ua, va = np.asarray(u[1:])[:, None], np.asarray(v[1:])[None, :]
    reduced = a - ua - va
    tight = reduced <= 1e-9 * (np.abs(a) + np.abs(ua) + np.abs(va) + 1.0)
    if flip:
        return sorted((i, j) for j, i in enumerate(cols)), tight.T
    return list(enumerate(cols)), tight


def _strip(c: np.ndarray, pairs, limit: float) -> list[tuple[int, int]]:
    return [(i, j) for i, j in pairs if c[i, j] < limit]


def _solve(c: np.ndarray, limit: float) -> list[tuple[int, int]]:
    if c.size == 0:
        return []
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix must be finite; use SENTINEL for forbidden pairs")
    pairs, tight = _raw(c)
    pairs = _strip(c, pairs, limit)
    return _lexicographic(c, pairs, tight & (c < limit), limit)


def _lexicographic(c: np.ndarray, pairs, tight: np.ndarray, limit: float) -> list[tuple[int, int]]:
    n, m = c.shape
    k = len(pairs)
    target = math.fsum(c[i, j] for i, j in pairs)
    current = dict(pairs)
    fixed: list[tuple[int, int]] = []
    for i in range(n):
        if len(fixed) == k:
            break
        used = {j for _, j in fixed}
        upto = current.get(i, m)
        for j in range(upto):
            if j in used or not tight[i, j]:
                continue
            trial = fixed + [(i, j)]
            rows = list(range(i + 1, n))
            cols = [q for q in range(m) if q not in used and q != j]
            need = k - len(trial)
            sub: list[tuple[int, int]] = []
            if need and rows and cols:
                raw, _ = _raw(c[np.ix_(rows, cols)])
                sub = [(rows[r], cols[q]) for r, q in raw if c[rows[r], cols[q]] < limit]
            if len(sub) != need:
                continue
            cand = trial + sub
            if math.fsum(c[r, q] for r, q in cand) == target:
                current = dict(cand)
                break
        if i in current:
            fixed.append((i, current[i]))
    return sorted(current.items())


def linear_assignment(cost) -> list[tuple[int, int]]:
    """Minimum-cost matching of size ``min(rows, cols)``; pairs sorted by row.

    Ties go to the lexicographically smallest pair list.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    return _solve(c, math.inf)


def solve_assignment(cost, sentinel: float = SENTINEL) -> list[tuple[int, int]]:
    """Optimal matching with forbidden (sentinel-cost) pairs stripped afterwards.

    Among matchings with the most non-forbidden pairs and the lowest total,
    the lexicographically smallest is returned.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {c.shape}")
    return _solve(c, sentinel)


def assignment_cost(cost, pairs) -> float:
    c = np.asarray(cost, dtype=np.float64)
    return math.fsum(c[i, j] for i, j in pairs)
