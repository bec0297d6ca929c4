"""Constructors for local, CV PR, and Gaussian PR behaviours."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

import numpy as np

from .measures import Behaviour, Measure, MeasureError


def _vector(v, name: str) -> tuple[float, ...]:
    out = tuple(float(t) for t in np.atleast_1d(np.asarray(v, dtype=float)))
    if not all(np.isfinite(out)):
        raise MeasureError(f"{name} has non-finite entries")
    return out


def _require_distinct(v: Sequence[float], name: str) -> None:
    if len(set(v)) != len(v):
        raise MeasureError(f"{name} entries must be pairwise distinct, got {v}")


@dataclass(frozen=True)
class PRBoxSpec:
    """Order-k CV PR box with input-dependent centre vectors."""

    k: int
    a0: tuple
    a1: tuple
    b0: tuple
    b1: tuple

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise MeasureError(f"order k must be a positive integer, got {self.k!r}")
        for name in ("a0", "a1", "b0", "b1"):
            v = _vector(getattr(self, name), name)
            if len(v) != self.k:
                raise MeasureError(f"{name} has length {len(v)}, expected {self.k}")
            _require_distinct(v, name)
            object.__setattr__(self, name, v)

    def a(self, x: int) -> tuple:
        return self.a1 if x else self.a0

    def b(self, y: int) -> tuple:
        return self.b1 if y else self.b0


@dataclass(frozen=True)
class HVTerm:
    weight: float
    a_of_x: tuple  # (a(0), a(1))
    b_of_y: tuple  # (b(0), b(1))


def _shifted_pairs(a: Sequence[float], b: Sequence[float], shift: int):
    k = len(a)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)[(np.arange(k) + shift) % k]
    return a, b


def cv_pr_box_general(spec: PRBoxSpec) -> Behaviour:
    k = spec.k
    w = np.full(k, 1.0 / k)
    cells = []
    for x in (0, 1):
        row = []
        for y in (0, 1):
            a, b = _shifted_pairs(spec.a(x), spec.b(y), x * y)
            row.append(Measure(w, a, b))
        cells.append(row)
    return Behaviour(cells)


def cv_pr_box(k: int, a, b) -> Behaviour:
    """Cell (x, y) = (1/k) sum_j delta(a_j, b_{(j + xy) mod k})."""
    a, b = _vector(a, "a"), _vector(b, "b")
    return cv_pr_box_general(PRBoxSpec(k, a, a, b, b))


def deterministic_box(a0: float, a1: float, b0: float, b1: float) -> Behaviour:
    return cv_pr_box_general(PRBoxSpec(1, (a0,), (a1,), (b0,), (b1,)))


def local_hv_behaviour(terms: Sequence[HVTerm]) -> Behaviour:
    """Finite hidden-variable model: a mixture of deterministic responses."""
    if not terms:
        raise MeasureError("need at least one hidden-variable term")
    w = np.array([t.weight for t in terms], dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise MeasureError(f"hidden-variable weights must be >= 0 and sum to 1, got sum {w.sum()!r}")
    A = np.array([t.a_of_x for t in terms], dtype=float).reshape(-1, 2)
    B = np.array([t.b_of_y for t in terms], dtype=float).reshape(-1, 2)
    return Behaviour([[Measure(w, A[:, x], B[:, y]) for y in (0, 1)] for x in (0, 1)])


def gaussian_pr_box(k: int, a, b, sigmas) -> Behaviour:
    """Order-k PR box with each atom smeared into an isotropic Gaussian.

    Only equal widths give a no-signaling behaviour: Bob's marginal in
    cell (1, 1) pairs b_{j+1} with sigma_j instead of sigma_{j+1}.
    """
    a, b, s = _vector(a, "a"), _vector(b, "b"), _vector(sigmas, "sigmas")
    if not (len(a) == len(b) == len(s) == k):
        raise MeasureError(f"centre and width vectors must have length k={k}")
    _require_distinct(a, "a")
    _require_distinct(b, "b")
    if any(t <= 0 for t in s):
        raise MeasureError(f"widths must be positive, got {s}")
    w = np.full(k, 1.0 / k)
    cells = []
    for x in (0, 1):
        row = []
        for y in (0, 1):
            ca, cb = _shifted_pairs(a, b, x * y)
            row.append(Measure(gw=w, ga=ca, gb=cb, gs=s))
        cells.append(row)
    return Behaviour(cells)


def relabel_inputs(bhv: Behaviour, flip_x: bool, flip_y: bool) -> Behaviour:
    """Apply x -> x+1 mod 2 and/or y -> y+1 mod 2."""
    return Behaviour([[bhv[x ^ int(flip_x), y ^ int(flip_y)] for y in (0, 1)] for x in (0, 1)])


OutputMap = Union[None, Callable[[float], float], Mapping[float, float]]


def _apply(fn: OutputMap, v: tuple) -> tuple:
    if fn is None:
        return v
    if isinstance(fn, Mapping):
        return tuple(float(fn.get(t, t)) for t in v)
    return tuple(float(fn(t)) for t in v)


def relabel_outputs(spec: PRBoxSpec, perm_a0: OutputMap = None, perm_a1: OutputMap = None,
                    perm_b0: OutputMap = None, perm_b1: OutputMap = None) -> PRBoxSpec:
    """Input-dependent output relabeling, applied entrywise to the centres.

    Maps may be callables or dicts (missing keys are fixed points).
    A map that sends two centres to the same value is rejected.
    """
    return PRBoxSpec(spec.k, _apply(perm_a0, spec.a0), _apply(perm_a1, spec.a1),
                     _apply(perm_b0, spec.b0), _apply(perm_b1, spec.b1))


def appendix_c_sequence(n: int, shift: int = 1) -> Behaviour:
    """PR box of order n+1 on the grid {0, 1/n, ..., 1}.

    Cells with xy = 0 sit on the diagonal; cell (1, 1) pairs k/n with
    ((k + shift) mod (n+1))/n, so ``shift=1`` gives atoms (k/n, (k+1)/n)
    plus (1, 0).  Every atom has weight 1/(n+1).  ``shift`` must be
    coprime to n+1; ``shift=n`` pairs k/n with (k-1)/n instead.
    """
    if int(n) != n or n < 1:
        raise MeasureError(f"n must be a positive integer, got {n!r}")
    k = n + 1
    if math.gcd(shift, k) != 1:
        raise MeasureError(f"shift {shift} is not coprime to n+1={k}")
    # visiting the grid in steps of `shift` turns the cyclic +1 rule into +shift
    grid = ((np.arange(k) * shift) % k) / n
    return cv_pr_box_general(PRBoxSpec(k, grid, grid, grid, grid))


def diagonal_behaviour(n: int) -> Behaviour:
    """All four cells uniform on the diagonal atoms (k/n, k/n), k = 0..n."""
    grid = np.arange(n + 1) / n
    w = np.full(n + 1, 1.0 / (n + 1))
    m = Measure(w, grid, grid)
    return Behaviour([[m, m], [m, m]])
