"""Grid discretization of behaviours, binning, CHSH and convergence checks.

A behaviour is pushed onto a product partition of the plane: each
rectangle's mass is placed on one representative atom.  Because every
cell uses the same partition, marginals of the result are the
marginals of the input restricted to the partition, so no-signaling
carries over exactly.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .measures import Behaviour, Marginal1D, Measure, MeasureError, canonicalize, interval_prob, mass
from .moments import cross_moment

ESCAPE_TOL = 1e-9
TRIVIAL_GAP = 1e-12


class DomainError(MeasureError):
    """Behaviour has too much mass outside the compact discretization window."""


@dataclass(frozen=True)
class Grid:
    half_width: float
    n: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise MeasureError(f"half-width must be positive, got {self.half_width!r}")
        if int(self.n) != self.n or self.n < 1:
            raise MeasureError(f"bin count must be a positive integer, got {self.n!r}")

    @property
    def edges(self) -> np.ndarray:
        return self.half_width * (2 * np.arange(self.n + 1) / self.n - 1)

    @property
    def centers(self) -> np.ndarray:
        return self.half_width * ((2 * np.arange(self.n) + 1) / self.n - 1)


# -- partition masses -------------------------------------------------------

def _bin_index(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin of each value for bins [e_i, e_{i+1}), last bin closed; -1 outside."""
    idx = np.searchsorted(edges, values, side="right") - 1
    idx[values == edges[-1]] = len(edges) - 2
    idx[(values < edges[0]) | (values > edges[-1])] = -1
    return idx


def _axis_probs(centers: np.ndarray, sigmas: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """(n_components, n_bins) masses of 1-D Gaussians on consecutive bins."""
    return interval_prob(edges[None, :-1], edges[None, 1:], centers[:, None], sigmas[:, None])


def partition_weights(m: Measure, edges_a: np.ndarray, edges_b: np.ndarray) -> np.ndarray:
    """Mass of ``m`` on every rectangle of the product partition."""
    W = np.zeros((len(edges_a) - 1, len(edges_b) - 1))
    if len(m.dw):
        ia, ib = _bin_index(m.da, edges_a), _bin_index(m.db, edges_b)
        ok = (ia >= 0) & (ib >= 0)
        np.add.at(W, (ia[ok], ib[ok]), m.dw[ok])
    if len(m.gw):
        pa = _axis_probs(m.ga, m.gs, edges_a)
        pb = _axis_probs(m.gb, m.gs, edges_b)
        W += (pa * m.gw[:, None]).T @ pb
    return W


def _push_to_atoms(bhv: Behaviour, edges: np.ndarray, reps: np.ndarray) -> Behaviour:
    A, B = np.meshgrid(reps, reps, indexing="ij")
    A, B = A.ravel(), B.ravel()

    def cell(m: Measure) -> Measure:
        W = partition_weights(m, edges, edges)
        return Measure(W.ravel(), A, B, normalized=False)
    return bhv.map(cell)


def escaping_mass(m: Measure, half_width: float) -> float:
    K = half_width
    return max(0.0, 1.0 - mass(m, (-K, K, -K, K)))


def discretize_compact(bhv: Behaviour, K: float, n: int, *, clamp_tails: bool = False,
                       tol: float = ESCAPE_TOL) -> Behaviour:
    """Replace each cell by atoms at the centres of an n x n grid on [-K, K]^2.

    The outermost bins are extended to infinity, so any mass escaping the
    window lands on the boundary atoms.  Unless ``clamp_tails`` is set,
    escaping mass above ``tol`` raises :class:`DomainError`.
    """
    grid = Grid(K, n)
    if not clamp_tails:
        for (x, y), m in bhv.items():
            lost = escaping_mass(m, K)
            if lost > tol:
                raise DomainError(
                    f"cell ({x},{y}) has mass {lost:.3g} outside [-{K},{K}]^2; "
                    "use a larger K, clamp_tails=True, or discretize_unbounded")
    edges = grid.edges.copy()
    edges[0], edges[-1] = -np.inf, np.inf
    return _push_to_atoms(bhv, edges, grid.centers)


def unbounded_partition(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Edges and representatives for the index-n unbounded construction.

    [-n, n] is cut into 2n^2 intervals of length 1/n with centre
    representatives; the two open tails are represented at -(n+1) and n+1.
    """
    if int(n) != n or n < 1:
        raise MeasureError(f"index n must be a positive integer, got {n!r}")
    m = 2 * n * n
    inner = -n + np.arange(m + 1) / n
    edges = np.r_[-np.inf, inner, np.inf]
    reps = np.r_[-(n + 1.0), -n + (np.arange(m) + 0.5) / n, n + 1.0]
    return edges, reps


def discretize_unbounded(bhv: Behaviour, n: int) -> Behaviour:
    """Interior grid atoms plus boundary strip and corner atoms at +-(n+1).

    The product of the axis partition reproduces all terms: interior x
    interior bins, tail x interior strips, and the four tail corners.
    """
    edges, reps = unbounded_partition(n)
    return _push_to_atoms(bhv, edges, reps)


# -- finite behaviours ------------------------------------------------------

@dataclass(frozen=True)
class FiniteBehaviour:
    """Conditional probability tables p(i, j | x, y) with real outcome labels.

    ``tables[x][y]`` has shape (len(alice_outcomes[x]), len(bob_outcomes[y])).
    """

    alice_outcomes: tuple
    bob_outcomes: tuple
    tables: tuple

    def __post_init__(self):
        ao = tuple(tuple(float(v) for v in o) for o in self.alice_outcomes)
        bo = tuple(tuple(float(v) for v in o) for o in self.bob_outcomes)
        if len(ao) != 2 or len(bo) != 2 or not all(ao) or not all(bo):
            raise MeasureError("need a nonempty outcome list for each of the two inputs per party")
        tabs = []
        for x in (0, 1):
            row = []
            for y in (0, 1):
                t = np.array(self.tables[x][y], dtype=float)
                if t.shape != (len(ao[x]), len(bo[y])):
                    raise MeasureError(f"table ({x},{y}) has shape {t.shape}, "
                                       f"expected {(len(ao[x]), len(bo[y]))}")
                if np.any(t < 0) or abs(t.sum() - 1) > 1e-9:
                    raise MeasureError(f"table ({x},{y}) is not a probability table")
                t.flags.writeable = False
                row.append(t)
            tabs.append(tuple(row))
        object.__setattr__(self, "alice_outcomes", ao)
        object.__setattr__(self, "bob_outcomes", bo)
        object.__setattr__(self, "tables", tuple(tabs))

    def table(self, x: int, y: int) -> np.ndarray:
        return self.tables[x][y]

    def flat(self) -> np.ndarray:
        """Tables concatenated in (x, y) = 00, 01, 10, 11 order, row-major."""
        return np.concatenate([self.tables[x][y].ravel() for x in (0, 1) for y in (0, 1)])

    def same_table(self, other: "FiniteBehaviour", tol: float = 1e-12) -> bool:
        return (self.alice_outcomes == other.alice_outcomes
                and self.bob_outcomes == other.bob_outcomes
                and float(np.abs(self.flat() - other.flat()).max()) <= tol)


def _labels(*coords: np.ndarray) -> np.ndarray:
    """Distinct values, merging those that agree within the canonical tolerance."""
    v = np.concatenate(coords)
    m = canonicalize(Marginal1D(np.ones(len(v)), v, normalized=False))
    return m.pc


def _nearest(labels: np.ndarray, values: np.ndarray) -> np.ndarray:
    idx = np.clip(np.searchsorted(labels, values), 1, max(len(labels) - 1, 1))
    if len(labels) == 1:
        return np.zeros(len(values), dtype=int)
    left = labels[idx - 1]
    return np.where(np.abs(values - left) <= np.abs(labels[idx] - values), idx - 1, idx)


def to_finite(bhv: Behaviour) -> FiniteBehaviour:
    """Read an all-Dirac behaviour as outcome-label tables.

    Labels are the distinct atom coordinates carrying positive weight,
    collected per party and input over both cells of that input.
    """
    if not bhv.is_atomic:
        raise MeasureError("to_finite needs a behaviour made only of Dirac atoms")
    cells = [[canonicalize(bhv[x, y]) for y in (0, 1)] for x in (0, 1)]
    alice = [_labels(cells[x][0].da, cells[x][1].da) for x in (0, 1)]
    bob = [_labels(cells[0][y].db, cells[1][y].db) for y in (0, 1)]
    tables = []
    for x in (0, 1):
        row = []
        for y in (0, 1):
            m = cells[x][y]
            t = np.zeros((len(alice[x]), len(bob[y])))
            np.add.at(t, (_nearest(alice[x], m.da), _nearest(bob[y], m.db)), m.dw)
            row.append(t)
        tables.append(row)
    return FiniteBehaviour(tuple(alice), tuple(bob), tables)


def from_finite(fb: FiniteBehaviour) -> Behaviour:
    """Atomic behaviour with one Dirac atom per nonzero table entry."""
    def cell(x, y):
        t = fb.table(x, y)
        i, j = np.nonzero(t)
        return Measure(t[i, j], np.asarray(fb.alice_outcomes[x])[i],
                       np.asarray(fb.bob_outcomes[y])[j])
    return Behaviour([[cell(x, y) for y in (0, 1)] for x in (0, 1)])


def _check_thresholds(t: Sequence[float], who: str) -> np.ndarray:
    t = np.asarray(t, dtype=float).reshape(-1)
    if np.any(~np.isfinite(t)) or np.any(np.diff(t) <= 0):
        raise MeasureError(f"{who} thresholds must be finite and strictly increasing, got {list(t)}")
    return t


def _default_labels(n_bins: int) -> tuple:
    return (-1.0, 1.0) if n_bins == 2 else tuple(float(i) for i in range(n_bins))


def bin_behaviour(bhv: Behaviour, alice_thresholds: Sequence[float],
                  bob_thresholds: Optional[Sequence[float]] = None, *,
                  alice_labels: Optional[Sequence[float]] = None,
                  bob_labels: Optional[Sequence[float]] = None) -> FiniteBehaviour:
    """Coarse-grain outcomes into the intervals between thresholds.

    Bins are (-inf, t_1), [t_1, t_2), ..., [t_m, inf), the same for both
    inputs of a party.  With two bins the labels default to -1 (low) and
    +1 (high); otherwise to the bin indices.  ``bob_thresholds`` defaults
    to Alice's.
    """
    ta = _check_thresholds(alice_thresholds, "Alice")
    tb = ta if bob_thresholds is None else _check_thresholds(bob_thresholds, "Bob")
    ea, eb = np.r_[-np.inf, ta, np.inf], np.r_[-np.inf, tb, np.inf]
    la = tuple(alice_labels) if alice_labels is not None else _default_labels(len(ea) - 1)
    lb = tuple(bob_labels) if bob_labels is not None else _default_labels(len(eb) - 1)
    if len(la) != len(ea) - 1 or len(lb) != len(eb) - 1:
        raise MeasureError("need one label per bin")
    tables = [[partition_weights(bhv[x, y], ea, eb) for y in (0, 1)] for x in (0, 1)]
    return FiniteBehaviour((la, la), (lb, lb), tables)


def chsh(fb: FiniteBehaviour) -> float:
    """E00 + E01 + E10 - E11 for +-1 valued outcomes."""
    for side in (fb.alice_outcomes, fb.bob_outcomes):
        for labels in side:
            if len(labels) != 2 or set(labels) != {-1.0, 1.0}:
                raise MeasureError(f"CHSH needs outcomes labelled -1 and +1, got {labels}")
    E = [[float(np.asarray(fb.alice_outcomes[x]) @ fb.table(x, y) @ np.asarray(fb.bob_outcomes[y]))
          for y in (0, 1)] for x in (0, 1)]
    return E[0][0] + E[0][1] + E[1][0] - E[1][1]


# -- bounded continuous probe functions -------------------------------------

@dataclass(frozen=True)
class ProbeFunction:
    """Bounded continuous f(a, b) from a small fixed family.

    kinds: ``cos`` -> cos(alpha*a + beta*b); ``gauss`` -> exp(-(a^2+b^2)/(2 s^2));
    ``clamp`` -> clip(a, -c, c) * clip(b, -c, c).
    """

    kind: str
    params: tuple

    @property
    def id(self) -> str:
        return f"{self.kind}:" + ",".join(f"{p:g}" for p in self.params)

    def __call__(self, a, b):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        if self.kind == "cos":
            alpha, beta = self.params
            return np.cos(alpha * a + beta * b)
        if self.kind == "gauss":
            (s,) = self.params
            return np.exp(-(a ** 2 + b ** 2) / (2 * s * s))
        (c,) = self.params
        return np.clip(a, -c, c) * np.clip(b, -c, c)

    def gaussian_expectation(self, ca: float, cb: float, sigma: float) -> float:
        """E f(A, B) with A ~ N(ca, sigma^2), B ~ N(cb, sigma^2) independent."""
        if self.kind == "cos":
            alpha, beta = self.params
            return math.cos(alpha * ca + beta * cb) * math.exp(-0.5 * sigma ** 2 * (alpha ** 2 + beta ** 2))
        if self.kind == "gauss":
            (s,) = self.params
            v = s * s + sigma * sigma
            return (s * s / v) * math.exp(-(ca * ca + cb * cb) / (2 * v))
        (c,) = self.params
        return _clamp_expectation(ca, sigma, c) * _clamp_expectation(cb, sigma, c)


def _clamp_expectation(mu: float, sigma: float, c: float) -> float:
    """E clip(X, -c, c) for X ~ N(mu, sigma^2); middle piece by adaptive quadrature."""
    lower = -c * ndtr((-c - mu) / sigma)
    upper = c * ndtr((mu - c) / sigma)
    dens = lambda t: t * math.exp(-0.5 * ((t - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    lo, hi = max(-c, mu - 40 * sigma), min(c, mu + 40 * sigma)
    middle = 0.0
    if lo < hi:
        middle, _ = integrate.quad(dens, lo, hi, points=[mu] if lo < mu < hi else None,
                                   epsabs=1e-10, epsrel=1e-12, limit=200)
    return float(lower + middle + upper)


_ALIASES = {"cos(a+b)": "cos:1,1", "cos(a-b)": "cos:1,-1", "gauss": "gauss:1", "clamp": "clamp:1"}
_ARITY = {"cos": 2, "gauss": 1, "clamp": 1}


def probe(f_id: str) -> ProbeFunction:
    """Parse a probe id such as ``cos:1,1``, ``gauss:0.5``, ``clamp:2`` or ``cos(a+b)``."""
    raw = _ALIASES.get(f_id.strip(), f_id.strip())
    kind, _, rest = raw.partition(":")
    if kind not in _ARITY:
        raise MeasureError(f"unknown test function {f_id!r}; known kinds: cos, gauss, clamp")
    try:
        params = tuple(float(p) for p in rest.split(",")) if rest else ()
    except ValueError as exc:
        raise MeasureError(f"bad parameters in test function {f_id!r}") from exc
    if len(params) != _ARITY[kind]:
        raise MeasureError(f"{kind} takes {_ARITY[kind]} parameter(s), got {f_id!r}")
    if kind in ("gauss", "clamp") and not params[0] > 0:
        raise MeasureError(f"{kind} parameter must be positive, got {f_id!r}")
    return ProbeFunction(kind, params)


DEFAULT_PROBES = ("cos:1,1", "cos:1,-1", "gauss:1", "clamp:1")


def test_function_integral(m: Measure, f_id) -> float:
    """Integral of a library probe function against ``m``."""
    f = f_id if isinstance(f_id, ProbeFunction) else probe(f_id)
    total = float(np.dot(m.dw, f(m.da, m.db)))
    for w, ca, cb, s in zip(m.gw, m.ga, m.gb, m.gs):
        total += float(w) * f.gaussian_expectation(float(ca), float(cb), float(s))
    return total


test_function_integral.__test__ = False  # keep pytest from collecting it


# -- convergence diagnostics ------------------------------------------------

@dataclass
class ConvergenceReport:
    n: int
    # moment_gaps[x, y, na, nb]
    moment_gaps: np.ndarray
    # probe_gaps[f_id][x, y]
    probe_gaps: dict = field(default_factory=dict)

    def rows(self) -> Iterable[tuple]:
        M = self.moment_gaps.shape[2] - 1
        for x in (0, 1):
            for y in (0, 1):
                for na in range(M + 1):
                    for nb in range(M + 1):
                        yield x, y, "moment", f"{na},{nb}", self.n, float(self.moment_gaps[x, y, na, nb])
                for fid, g in self.probe_gaps.items():
                    yield x, y, "testfn", fid, self.n, float(g[x, y])

    def entries(self) -> dict:
        return {(x, y, kind, key): gap for x, y, kind, key, _, gap in self.rows()}


def moment_table(m: Measure, M: int) -> np.ndarray:
    return np.array([[cross_moment(m, na, nb) for nb in range(M + 1)] for na in range(M + 1)])


def convergence_report(bhv: Behaviour, K: float, n_list: Sequence[int], M: int = 4,
                       probes: Sequence[str] = DEFAULT_PROBES, *,
                       clamp_tails: bool = False) -> list[ConvergenceReport]:
    """Moment and probe-integral gaps between ``bhv`` and its n-bin discretizations."""
    fns = [probe(p) for p in probes]
    exact_m = {xy: moment_table(m, M) for xy, m in bhv.items()}
    exact_f = {xy: [test_function_integral(m, f) for f in fns] for xy, m in bhv.items()}
    reports = []
    for n in sorted(set(int(v) for v in n_list)):
        disc = discretize_compact(bhv, K, n, clamp_tails=clamp_tails)
        mg = np.zeros((2, 2, M + 1, M + 1))
        pg = {f.id: np.zeros((2, 2)) for f in fns}
        for (x, y), m in disc.items():
            mg[x, y] = np.abs(moment_table(m, M) - exact_m[x, y])
            for f, exact in zip(fns, exact_f[x, y]):
                pg[f.id][x, y] = abs(test_function_integral(m, f) - exact)
        reports.append(ConvergenceReport(n, mg, pg))
    return reports


def gaps_shrink(first: ConvergenceReport, last: ConvergenceReport,
                trivial: float = TRIVIAL_GAP) -> list[tuple]:
    """Entries whose gap did not strictly decrease from ``first`` to ``last``.

    Entries at or below ``trivial`` in both reports (mass preservation,
    exactly reproduced moments) count as converged.
    """
    a, b = first.entries(), last.entries()
    return [(key, a[key], b[key]) for key in a
            if not (b[key] < a[key] or (a[key] <= trivial and b[key] <= trivial))]


def reports_to_csv(reports: Sequence[ConvergenceReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell_x", "cell_y", "kind", "order_or_id", "n", "gap"])
    for r in reports:
        for row in r.rows():
            w.writerow([*row[:5], repr(row[5])])
    return buf.getvalue()
