"""Finite-mixture probability measures on the plane and bipartite behaviours.

Every measure is a weighted sum of Dirac atoms and isotropic Gaussians.
Components are stored as two typed blocks of numpy arrays so that
discretized measures with tens of thousands of atoms stay cheap.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import ndtr

MERGE_EPS = 1e-10
DEFAULT_TOL = 1e-9
NORM_TOL = 1e-9
PROBE_INTERVALS = 64


class MeasureError(ValueError):
    """Malformed measure, rectangle or behaviour."""


@dataclass(frozen=True)
class DiracAtom:
    weight: float
    a: float
    b: float


@dataclass(frozen=True)
class GaussianAtom:
    weight: float
    center_a: float
    center_b: float
    sigma: float


@dataclass(frozen=True)
class PointMass:
    weight: float
    c: float


@dataclass(frozen=True)
class Gaussian1D:
    weight: float
    c: float
    sigma: float


Component = Union[DiracAtom, GaussianAtom]


def _frozen(x) -> np.ndarray:
    arr = np.array(x, dtype=float).reshape(-1)
    arr.flags.writeable = False
    return arr


def _check_weights(w: np.ndarray, *, normalized: bool, tol: float) -> None:
    if np.any(~np.isfinite(w)):
        raise MeasureError("weights must be finite")
    if np.any(w < 0):
        raise MeasureError(f"negative weight {w.min()!r}")
    if normalized and abs(w.sum() - 1.0) > tol:
        raise MeasureError(f"weights sum to {w.sum()!r}, expected 1")


class Measure:
    """Probability measure on R^2 given as a finite mixture.

    ``diracs`` holds columns (weight, a, b); ``gaussians`` holds
    (weight, center_a, center_b, sigma).
    """

    __slots__ = ("dw", "da", "db", "gw", "ga", "gb", "gs")

    def __init__(self, dw=(), da=(), db=(), gw=(), ga=(), gb=(), gs=(),
                 *, normalized: bool = True, tol: float = NORM_TOL):
        self.dw, self.da, self.db = _frozen(dw), _frozen(da), _frozen(db)
        self.gw, self.ga, self.gb, self.gs = _frozen(gw), _frozen(ga), _frozen(gb), _frozen(gs)
        if not (len(self.dw) == len(self.da) == len(self.db)):
            raise MeasureError("Dirac arrays differ in length")
        if not (len(self.gw) == len(self.ga) == len(self.gb) == len(self.gs)):
            raise MeasureError("Gaussian arrays differ in length")
        if len(self.dw) + len(self.gw) == 0:
            raise MeasureError("measure has no components")
        for arr in (self.da, self.db, self.ga, self.gb):
            if np.any(~np.isfinite(arr)):
                raise MeasureError("component locations must be finite")
        if np.any(~(self.gs > 0)) or np.any(~np.isfinite(self.gs)):
            raise MeasureError("Gaussian widths must be positive and finite")
        _check_weights(np.concatenate([self.dw, self.gw]), normalized=normalized, tol=tol)

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_components(cls, components: Iterable[Component], **kw) -> "Measure":
        d, g = [], []
        for c in components:
            if isinstance(c, DiracAtom):
                d.append((c.weight, c.a, c.b))
            elif isinstance(c, GaussianAtom):
                g.append((c.weight, c.center_a, c.center_b, c.sigma))
            else:
                raise MeasureError(f"unknown component {c!r}")
        d = np.array(d, dtype=float).reshape(-1, 3)
        g = np.array(g, dtype=float).reshape(-1, 4)
        return cls(*d.T, *g.T, **kw)

    @classmethod
    def dirac(cls, a: float, b: float) -> "Measure":
        return cls([1.0], [a], [b])

    @classmethod
    def gaussian(cls, a: float, b: float, sigma: float) -> "Measure":
        return cls(gw=[1.0], ga=[a], gb=[b], gs=[sigma])

    # -- views ----------------------------------------------------------
    @property
    def components(self) -> list[Component]:
        out: list[Component] = [DiracAtom(*map(float, r)) for r in zip(self.dw, self.da, self.db)]
        out += [GaussianAtom(*map(float, r)) for r in zip(self.gw, self.ga, self.gb, self.gs)]
        return out

    @property
    def total_weight(self) -> float:
        return float(self.dw.sum() + self.gw.sum())

    @property
    def is_atomic(self) -> bool:
        return len(self.gw) == 0

    def __len__(self) -> int:
        return len(self.dw) + len(self.gw)

    def __repr__(self) -> str:
        return f"Measure(n_dirac={len(self.dw)}, n_gauss={len(self.gw)})"

    def scaled(self, factor: float) -> "Measure":
        """Measure pushed forward under (a, b) -> (factor*a, factor*b)."""
        return Measure(self.dw, factor * self.da, factor * self.db,
                       self.gw, factor * self.ga, factor * self.gb,
                       abs(factor) * self.gs)


class Marginal1D:
    """Probability measure on R: point masses plus 1-D Gaussians."""

    __slots__ = ("pw", "pc", "gw", "gc", "gs")

    def __init__(self, pw=(), pc=(), gw=(), gc=(), gs=(), *, normalized: bool = True,
                 tol: float = NORM_TOL):
        self.pw, self.pc = _frozen(pw), _frozen(pc)
        self.gw, self.gc, self.gs = _frozen(gw), _frozen(gc), _frozen(gs)
        if len(self.pw) != len(self.pc) or not (len(self.gw) == len(self.gc) == len(self.gs)):
            raise MeasureError("component arrays differ in length")
        _check_weights(np.concatenate([self.pw, self.gw]), normalized=normalized, tol=tol)

    @property
    def components(self) -> list[Union[PointMass, Gaussian1D]]:
        out: list = [PointMass(float(w), float(c)) for w, c in zip(self.pw, self.pc)]
        out += [Gaussian1D(float(w), float(c), float(s)) for w, c, s in zip(self.gw, self.gc, self.gs)]
        return out

    def __len__(self) -> int:
        return len(self.pw) + len(self.gw)

    def __repr__(self) -> str:
        return f"Marginal1D(n_point={len(self.pw)}, n_gauss={len(self.gw)})"


class Behaviour:
    """2x2 array of measures, ``bhv[x, y]`` is the cell for inputs (x, y)."""

    __slots__ = ("cells",)

    def __init__(self, cells: Sequence[Sequence[Measure]]):
        cells = tuple(tuple(row) for row in cells)
        if len(cells) != 2 or any(len(row) != 2 for row in cells):
            raise MeasureError("behaviour needs a 2x2 array of cells")
        for row in cells:
            for m in row:
                if not isinstance(m, Measure):
                    raise MeasureError(f"cell is not a Measure: {m!r}")
        self.cells = cells

    def __getitem__(self, xy: tuple[int, int]) -> Measure:
        x, y = xy
        return self.cells[x][y]

    def items(self):
        for x in (0, 1):
            for y in (0, 1):
                yield (x, y), self.cells[x][y]

    def map(self, fn) -> "Behaviour":
        return Behaviour([[fn(self.cells[x][y]) for y in (0, 1)] for x in (0, 1)])

    @property
    def is_atomic(self) -> bool:
        return all(m.is_atomic for _, m in self.items())

    def __repr__(self) -> str:
        return f"Behaviour({[[len(m) for m in row] for row in self.cells]})"


# -- mixtures ---------------------------------------------------------------

def mix(measures: Sequence[Measure], weights: Sequence[float]) -> Measure:
    """Convex combination of measures."""
    weights = np.asarray(weights, dtype=float)
    if len(measures) != len(weights) or len(measures) == 0:
        raise MeasureError("need one weight per measure")
    _check_weights(weights, normalized=True, tol=NORM_TOL)
    cat = lambda attr: np.concatenate([getattr(m, attr) for m in measures])
    dw = np.concatenate([q * m.dw for q, m in zip(weights, measures)])
    gw = np.concatenate([q * m.gw for q, m in zip(weights, measures)])
    return Measure(dw, cat("da"), cat("db"), gw, cat("ga"), cat("gb"), cat("gs"))


def mix_behaviours(behaviours: Sequence[Behaviour], weights: Sequence[float]) -> Behaviour:
    return Behaviour([[mix([b[x, y] for b in behaviours], weights) for y in (0, 1)]
                      for x in (0, 1)])


# -- rectangle masses -------------------------------------------------------

def interval_prob(lo, hi, center, sigma):
    """P(lo <= X <= hi) for X ~ N(center, sigma^2), accurate in both tails.

    Broadcasts over all arguments.
    """
    zl = (np.asarray(lo, dtype=float) - center) / sigma
    zh = (np.asarray(hi, dtype=float) - center) / sigma
    upper = zl > 0
    # in the upper tail use survival functions to avoid cancellation
    return np.where(upper, ndtr(-zl) - ndtr(-zh), ndtr(zh) - ndtr(zl))


def _check_rect(a1, a2, b1, b2):
    if any(np.isnan(v) for v in (a1, a2, b1, b2)):
        raise MeasureError("rectangle bound is NaN")
    if a1 > a2 or b1 > b2:
        raise MeasureError(f"malformed rectangle [{a1},{a2}]x[{b1},{b2}]")


def mass(m: Measure, rect: Sequence[float]) -> float:
    """Mass of the closed rectangle ``(a1, a2, b1, b2)``; bounds may be infinite."""
    a1, a2, b1, b2 = map(float, rect)
    _check_rect(a1, a2, b1, b2)
    inside = (m.da >= a1) & (m.da <= a2) & (m.db >= b1) & (m.db <= b2)
    total = m.dw[inside].sum()
    if len(m.gw):
        pa = interval_prob(a1, a2, m.ga, m.gs)
        pb = interval_prob(b1, b2, m.gb, m.gs)
        total += np.dot(m.gw, pa * pb)
    return float(total)


def mass_1d(m: Marginal1D, lo: float, hi: float) -> float:
    """Mass of the closed interval [lo, hi]."""
    if lo > hi:
        raise MeasureError(f"malformed interval [{lo},{hi}]")
    total = m.pw[(m.pc >= lo) & (m.pc <= hi)].sum()
    if len(m.gw):
        total += np.dot(m.gw, interval_prob(lo, hi, m.gc, m.gs))
    return float(total)


def marginal(m: Measure, party: str) -> Marginal1D:
    """Project onto Alice's (``"A"``) or Bob's (``"B"``) axis."""
    party = party.upper()
    if party == "A":
        return Marginal1D(m.dw, m.da, m.gw, m.ga, m.gs, normalized=False)
    if party == "B":
        return Marginal1D(m.dw, m.db, m.gw, m.gb, m.gs, normalized=False)
    raise MeasureError(f"party must be 'A' or 'B', got {party!r}")


# -- canonical form ---------------------------------------------------------

def _cluster(keys: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Group rows of ``keys`` whose columns chain within ``eps``.

    Columns are resolved one after another: rows are first chained on
    column 0, then within each group on column 1, and so on.  Returns
    (labels, order) where ``order`` sorts rows by (label, keys).
    """
    n, d = keys.shape
    labels = np.zeros(n, dtype=np.int64)
    order = np.arange(n)
    for col in range(d):
        order = np.lexsort((keys[:, col], labels))
        k = keys[order, col]
        lab = labels[order]
        new = np.ones(n, dtype=bool)
        if n > 1:
            new[1:] = (np.diff(k) > eps) | (np.diff(lab) != 0)
        ids = np.cumsum(new) - 1
        labels = np.empty(n, dtype=np.int64)
        labels[order] = ids
    # final order: by label (labels are increasing along the last lexsort)
    return labels, order


def _merge_block(w: np.ndarray, keys: np.ndarray, eps: float, drop_zero: bool):
    if len(w) == 0:
        return w, keys
    labels, order = _cluster(keys, eps)
    n_groups = labels.max() + 1
    sw = np.bincount(labels, weights=w, minlength=n_groups)
    first = np.full(n_groups, -1)
    # first member of each group in sorted order is its representative
    sorted_labels = labels[order]
    starts = np.flatnonzero(np.r_[True, np.diff(sorted_labels) != 0])
    first[sorted_labels[starts]] = order[starts]
    rep = keys[first]
    idx = np.lexsort(rep.T[::-1])
    sw, rep = sw[idx], rep[idx]
    if drop_zero:
        keep = sw != 0
        sw, rep = sw[keep], rep[keep]
    return sw, rep


def canonicalize(m, eps: float = MERGE_EPS):
    """Merge coinciding components, drop zero weights, and sort.

    Works on both :class:`Measure` and :class:`Marginal1D`; idempotent.
    Diracs/points come before Gaussians, each block sorted by parameters.
    """
    if isinstance(m, Measure):
        dw, d = _merge_block(m.dw, np.column_stack([m.da, m.db]), eps, True)
        gw, g = _merge_block(m.gw, np.column_stack([m.ga, m.gb, m.gs]), eps, True)
        return Measure(dw, d[:, 0], d[:, 1], gw, g[:, 0], g[:, 1], g[:, 2], normalized=False)
    if isinstance(m, Marginal1D):
        pw, p = _merge_block(m.pw, m.pc[:, None], eps, True)
        gw, g = _merge_block(m.gw, np.column_stack([m.gc, m.gs]), eps, True)
        return Marginal1D(pw, p[:, 0], gw, g[:, 0], g[:, 1], normalized=False)
    raise TypeError(f"cannot canonicalize {type(m).__name__}")


def _signed_difference(m1: Marginal1D, m2: Marginal1D, tol: float) -> float:
    """Largest |weight| left after merging m1 with the negation of m2."""
    worst = 0.0
    blocks = [
        (np.r_[m1.pw, -m2.pw], np.r_[m1.pc, m2.pc][:, None]),
        (np.r_[m1.gw, -m2.gw], np.column_stack([np.r_[m1.gc, m2.gc], np.r_[m1.gs, m2.gs]])),
    ]
    for w, keys in blocks:
        if len(w):
            sw, _ = _merge_block(w, keys, tol, False)
            worst = max(worst, float(np.abs(sw).max()))
    return worst


def _probe_difference(m1: Marginal1D, m2: Marginal1D, n_probe: int = PROBE_INTERVALS) -> float:
    lo_parts, hi_parts = [], []
    for m in (m1, m2):
        lo_parts += [m.pc, m.gc - 6 * m.gs]
        hi_parts += [m.pc, m.gc + 6 * m.gs]
    lo = float(np.concatenate(lo_parts).min())
    hi = float(np.concatenate(hi_parts).max())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_probe + 1)
    return max(abs(mass_1d(m1, e0, e1) - mass_1d(m2, e0, e1))
               for e0, e1 in zip(edges[:-1], edges[1:]))


@dataclass(frozen=True)
class NSReport:
    ok: bool
    max_deviation: float
    probe_deviation: float


def is_no_signaling(bhv: Behaviour, tol: float = DEFAULT_TOL) -> NSReport:
    """Check that each party's marginal ignores the other party's input.

    Marginals are compared as canonical component lists (parameters
    matched within ``tol``; unmatched weight counts as deviation) and
    cross-checked by interval masses on a 64-interval probe grid.
    """
    comp_dev = probe_dev = 0.0
    pairs = []
    for x in (0, 1):
        pairs.append((marginal(bhv[x, 0], "A"), marginal(bhv[x, 1], "A")))
    for y in (0, 1):
        pairs.append((marginal(bhv[0, y], "B"), marginal(bhv[1, y], "B")))
    for m1, m2 in pairs:
        m1, m2 = canonicalize(m1), canonicalize(m2)
        comp_dev = max(comp_dev, _signed_difference(m1, m2, tol))
        probe_dev = max(probe_dev, _probe_difference(m1, m2))
    return NSReport(comp_dev <= tol and probe_dev <= tol, comp_dev, probe_dev)


# -- sampling ---------------------------------------------------------------

def sample(m: Measure, seed: int, n: int) -> np.ndarray:
    """Draw ``n`` outcome pairs as an (n, 2) array; deterministic in ``seed``."""
    if n < 1:
        raise MeasureError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    w = np.concatenate([m.dw, m.gw])
    idx = rng.choice(len(w), size=n, p=w / w.sum())
    centers = np.column_stack([np.r_[m.da, m.ga], np.r_[m.db, m.gb]])
    out = centers[idx].copy()
    widths = np.r_[np.zeros(len(m.dw)), m.gs][idx]
    noise = rng.standard_normal((n, 2))
    out += noise * widths[:, None]
    return out
