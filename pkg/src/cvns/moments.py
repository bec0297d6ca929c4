"""Cross-moments of behaviour cells and the CFRD inequality."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .measures import Behaviour, Measure, MeasureError, sample


def gaussian_raw_moment(center, sigma, n: int):
    """E[X^n] for X ~ N(center, sigma^2).

    Uses m_n = center*m_{n-1} + (n-1)*sigma^2*m_{n-2}; broadcasts over
    ``center`` and ``sigma``.
    """
    if int(n) != n or n < 0:
        raise MeasureError(f"moment order must be a nonnegative integer, got {n!r}")
    center, var = np.broadcast_arrays(np.asarray(center, dtype=float),
                                      np.asarray(sigma, dtype=float) ** 2)
    prev, cur = np.ones_like(center), center.copy()
    if n == 0:
        return prev if prev.ndim else float(prev)
    for k in range(2, int(n) + 1):
        prev, cur = cur, center * cur + (k - 1) * var * prev
    return cur if cur.ndim else float(cur)


def cross_moment(m: Measure, n_a: int, n_b: int) -> float:
    """<A^n_a B^n_b> under ``m``, exact (Gaussian axes are independent)."""
    total = float(np.dot(m.dw, m.da ** n_a * m.db ** n_b))
    if len(m.gw):
        total += float(np.dot(m.gw, gaussian_raw_moment(m.ga, m.gs, n_a)
                              * gaussian_raw_moment(m.gb, m.gs, n_b)))
    return total


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float


def cross_moment_mc(m: Measure, n_a: int, n_b: int, n_samples: int, seed: int) -> MCEstimate:
    if n_samples < 2:
        raise MeasureError("Monte Carlo estimate needs at least 2 samples")
    pts = sample(m, seed, n_samples)
    vals = pts[:, 0] ** n_a * pts[:, 1] ** n_b
    return MCEstimate(float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples)))


@dataclass(frozen=True)
class CfrdReport:
    lhs: float
    rhs: float
    violation: float
    # per_cell_moments[x][y] = (<A_x B_y>, <A_x^2 B_y^2>)
    per_cell_moments: tuple

    @property
    def clamped(self) -> float:
        return max(self.violation, 0.0)


def cfrd(bhv: Behaviour) -> CfrdReport:
    """Evaluate both sides of the CFRD inequality; violation = lhs - rhs."""
    mom = [[(cross_moment(bhv[x, y], 1, 1), cross_moment(bhv[x, y], 2, 2)) for y in (0, 1)]
           for x in (0, 1)]
    c = lambda x, y: mom[x][y][0]
    lhs = (c(0, 0) - c(1, 1)) ** 2 + (c(0, 1) + c(1, 0)) ** 2
    rhs = sum(mom[x][y][1] for x in (0, 1) for y in (0, 1))
    return CfrdReport(lhs, rhs, lhs - rhs, tuple(tuple(r) for r in mom))


@dataclass(frozen=True)
class ViolationValue:
    clamped: float
    signed: float


def gaussian_prbox2_violation(ell: float, sigma: float) -> ViolationValue:
    """Closed-form CFRD violation of the order-2 Gaussian PR box
    with centres (ell, -ell) on both sides and common width sigma."""
    if ell == 0:
        raise MeasureError("ell must be nonzero")
    if sigma < 0:
        raise MeasureError("sigma must be nonnegative")
    signed = 8 * ell ** 4 - 4 * (sigma ** 2 + ell ** 2) ** 2
    return ViolationValue(max(signed, 0.0), signed)
