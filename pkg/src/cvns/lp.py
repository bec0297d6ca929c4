"""Dense two-phase tableau simplex with Bland's anti-cycling rule.

Solves  min c.x  subject to  A x = b, x >= 0.  Meant for the small
decomposition problems in :mod:`cvns.polytope` (a few hundred rows,
a few thousand columns), not as a general-purpose solver.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-11


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded" | "iteration_limit"
    x: np.ndarray
    objective: float
    iterations: int


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])


def _run(T: np.ndarray, basis: list[int], n_cols: int, max_iter: int, it0: int) -> tuple[str, int]:
    """Pivot on tableau ``T`` (last row = reduced costs) until optimal."""
    m = T.shape[0] - 1
    it = it0
    while it < max_iter:
        costs = T[-1, :n_cols]
        candidates = np.flatnonzero(costs < -COST_TOL)
        if len(candidates) == 0:
            return "optimal", it
        col = int(candidates[0])  # Bland: lowest index enters
        colv = T[:m, col]
        rows = np.flatnonzero(colv > PIVOT_TOL)
        if len(rows) == 0:
            return "unbounded", it
        ratios = T[rows, -1] / colv[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        # Bland: among tied rows, leave the lowest basis index
        row = int(min(tied, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
        it += 1
    return "iteration_limit", it


def simplex(c, A_eq, b_eq, max_iter: int = 100_000) -> LPResult:
    c = np.asarray(c, dtype=float)
    A = np.array(A_eq, dtype=float)
    b = np.array(b_eq, dtype=float)
    m, n = A.shape
    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # reuse existing unit columns as the starting basis; add artificials elsewhere
    basis = [-1] * m
    unit = (A == 1).sum(0) == 1
    unit &= (A != 0).sum(0) == 1
    for j in np.flatnonzero(unit):
        i = int(np.flatnonzero(A[:, j])[0])
        if basis[i] < 0:
            basis[i] = int(j)
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)

    T = np.zeros((m + 1, n + n_art + 1))
    T[:m, :n] = A
    T[:m, -1] = b
    for k, i in enumerate(art_rows):
        T[i, n + k] = 1.0
        basis[i] = n + k

    it = 0
    if n_art:
        # phase 1: minimise the sum of artificials
        T[-1, :] = 0.0
        T[-1, n:n + n_art] = 1.0
        for i in art_rows:
            T[-1] -= T[i]
        status, it = _run(T, basis, n + n_art, max_iter, it)
        if status == "iteration_limit":
            return LPResult(status, np.zeros(n), np.nan, it)
        if -T[-1, -1] > 1e-8 * max(1.0, b.max(initial=0.0)):
            return LPResult("infeasible", np.zeros(n), np.nan, it)
        # drive remaining artificials out of the basis; drop redundant rows
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n:
                cols = np.flatnonzero(np.abs(T[i, :n]) > PIVOT_TOL)
                if len(cols):
                    _pivot(T, i, int(cols[0]))
                    basis[i] = int(cols[0])
                else:
                    keep[i] = False
        basis = [bi for bi, k in zip(basis, keep[:m]) if k]
        T = np.delete(T, np.s_[n:n + n_art], axis=1)[keep]
    m = T.shape[0] - 1

    # phase 2
    T[-1, :] = 0.0
    T[-1, :n] = c
    for i in range(m):
        if c[basis[i]] != 0:
            T[-1] -= c[basis[i]] * T[i]
    status, it = _run(T, basis, n, max_iter, it)
    x = np.zeros(n)
    for i, j in enumerate(basis):
        x[j] = T[i, -1]
    return LPResult(status, x, float(c @ x), it)
