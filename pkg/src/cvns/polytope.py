"""Vertices, decompositions and extremality in the finite no-signaling polytope.

Tables are flattened in cell order (x, y) = 00, 01, 10, 11, each cell
row-major in (Alice outcome, Bob outcome).
"""
from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .discretization import FiniteBehaviour
from .lp import simplex
from .measures import MeasureError

MAX_CATALOG = 10 ** 6
SUPPORT_TOL = 1e-12
RANK_RTOL = 1e-8


class CatalogSizeError(MeasureError):
    """Vertex enumeration would exceed the size guard."""


class DecompositionError(RuntimeError):
    def __init__(self, message: str, best_residual: float):
        super().__init__(message)
        self.best_residual = best_residual


def _layout(alice_outcomes, bob_outcomes):
    sizes = [(len(alice_outcomes[x]), len(bob_outcomes[y])) for x in (0, 1) for y in (0, 1)]
    offsets = np.cumsum([0] + [p * q for p, q in sizes])
    return sizes, offsets


def _flat_index(offsets, sizes, x, y, i, j):
    c = 2 * x + y
    return offsets[c] + i * sizes[c][1] + j


# -- no-signaling -----------------------------------------------------------

@dataclass(frozen=True)
class FiniteNSReport:
    ok: bool
    max_deviation: float


def is_no_signaling_finite(fb: FiniteBehaviour, tol: float = 1e-9) -> FiniteNSReport:
    dev = 0.0
    for x in (0, 1):
        dev = max(dev, float(np.abs(fb.table(x, 0).sum(1) - fb.table(x, 1).sum(1)).max()))
    for y in (0, 1):
        dev = max(dev, float(np.abs(fb.table(0, y).sum(0) - fb.table(1, y).sum(0)).max()))
    return FiniteNSReport(dev <= tol, dev)


# -- vertex catalog ---------------------------------------------------------

@dataclass
class VertexCatalog:
    alice_outcomes: tuple
    bob_outcomes: tuple
    matrix: np.ndarray  # (n_vertices, table_size)
    tags: list

    def __len__(self) -> int:
        return len(self.tags)

    def vertex(self, v: int) -> FiniteBehaviour:
        sizes, offsets = _layout(self.alice_outcomes, self.bob_outcomes)
        row = self.matrix[v]
        tables = [[row[offsets[2 * x + y]:offsets[2 * x + y + 1]].reshape(sizes[2 * x + y])
                   for y in (0, 1)] for x in (0, 1)]
        return FiniteBehaviour(self.alice_outcomes, self.bob_outcomes, tables)

    def find(self, fb: FiniteBehaviour, tol: float = 1e-12) -> list[int]:
        """Indices of vertices whose table equals ``fb``'s."""
        gap = np.abs(self.matrix - fb.flat()[None, :]).max(axis=1)
        return [int(i) for i in np.flatnonzero(gap <= tol)]

    def tag_str(self, v: int) -> str:
        t = self.tags[v]
        j = lambda tup: "-".join(map(str, tup))
        if t[0] == "local":
            return f"local[a={j(t[1])};b={j(t[2])}]"
        return f"pr{t[1]}[a0={j(t[2])};a1={j(t[3])};b0={j(t[4])};b1={j(t[5])}]"


def catalog_size_bound(alice_outcomes, bob_outcomes, k_max: int) -> int:
    """Number of candidate vertices before deduplication."""
    na = [len(o) for o in alice_outcomes]
    nb = [len(o) for o in bob_outcomes]
    total = math.prod(na) * math.prod(nb)
    for k in range(2, k_max + 1):
        total += math.prod(math.perm(s, k) for s in na + nb)
    return total


def enumerate_vertices(alice_outcomes: Sequence[Sequence[float]], bob_outcomes: Sequence[Sequence[float]],
                       k_max: int, max_size: int = MAX_CATALOG) -> VertexCatalog:
    """Local deterministic boxes plus all discrete PR boxes of order 2..k_max.

    An order-k box picks, for each party and input, an ordered k-tuple of
    distinct outcomes and puts 1/k on (a_x[j], b_y[(j + xy) mod k]).
    Duplicated tables are kept once.
    """
    alice = tuple(tuple(float(v) for v in o) for o in alice_outcomes)
    bob = tuple(tuple(float(v) for v in o) for o in bob_outcomes)
    if len(alice) != 2 or len(bob) != 2 or not all(alice) or not all(bob):
        raise MeasureError("need nonempty outcome lists for both inputs of both parties")
    if int(k_max) != k_max or k_max < 1:
        raise MeasureError(f"k_max must be a positive integer, got {k_max!r}")
    smallest = min(len(o) for o in alice + bob)
    if k_max > smallest:
        raise MeasureError(f"k_max={k_max} exceeds the smallest outcome set ({smallest})")
    bound = catalog_size_bound(alice, bob, k_max)
    if bound > max_size:
        raise CatalogSizeError(f"catalog would hold up to {bound} vertices (limit {max_size}); "
                               "use fewer outcomes or a smaller k_max")

    sizes, offsets = _layout(alice, bob)
    rows, tags, seen = [], [], set()

    def add(vec, tag):
        key = np.round(vec, 12).tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(vec)
            tags.append(tag)

    ra = [range(len(o)) for o in alice]
    rb = [range(len(o)) for o in bob]
    for i0, i1, j0, j1 in itertools.product(ra[0], ra[1], rb[0], rb[1]):
        vec = np.zeros(offsets[-1])
        ia, jb = (i0, i1), (j0, j1)
        for x in (0, 1):
            for y in (0, 1):
                vec[_flat_index(offsets, sizes, x, y, ia[x], jb[y])] = 1.0
        add(vec, ("local", ia, jb))

    for k in range(2, k_max + 1):
        tup = lambda r: list(itertools.permutations(r, k))
        for ta0, ta1, tb0, tb1 in itertools.product(tup(ra[0]), tup(ra[1]), tup(rb[0]), tup(rb[1])):
            vec = np.zeros(offsets[-1])
            ta, tb = (ta0, ta1), (tb0, tb1)
            for x in (0, 1):
                for y in (0, 1):
                    for j in range(k):
                        vec[_flat_index(offsets, sizes, x, y, ta[x][j], tb[y][(j + x * y) % k])] = 1.0 / k
            add(vec, ("pr", k, ta0, ta1, tb0, tb1))

    return VertexCatalog(alice, bob, np.array(rows), tags)


# -- decomposition ----------------------------------------------------------

@dataclass
class Decomposition:
    weights: np.ndarray
    residual: float

    def support(self, tol: float = 0.0) -> list[tuple[int, float]]:
        return [(int(i), float(self.weights[i])) for i in np.flatnonzero(self.weights > tol)]

    def to_csv(self, catalog: VertexCatalog) -> str:
        buf = io.StringIO()
        buf.write(f"# residual={self.residual!r}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["vertex_id", "tag", "weight"])
        for i, wt in self.support():
            w.writerow([i, catalog.tag_str(i), repr(wt)])
        return buf.getvalue()


def decompose(fb: FiniteBehaviour, catalog: VertexCatalog, ns_tol: float = 1e-9) -> Decomposition:
    """Convex weights over catalog vertices minimising the max-norm residual.

    LP:  min t  s.t.  -t <= V^T w - p <= t,  sum(w) = 1,  w >= 0.
    """
    if fb.alice_outcomes != catalog.alice_outcomes or fb.bob_outcomes != catalog.bob_outcomes:
        raise MeasureError("behaviour outcome sets do not match the catalog")
    ns = is_no_signaling_finite(fb, ns_tol)
    if not ns.ok:
        raise MeasureError(f"behaviour is signaling (deviation {ns.max_deviation:.3g})")

    p = fb.flat()
    V = catalog.matrix.T  # (D, n_vertices)
    D, nv = V.shape
    eye = np.eye(D)
    ones = np.ones((D, 1))
    zeros = np.zeros((D, D))
    # columns: w (nv) | t | s_plus (D) | s_minus (D)
    A = np.block([
        [V, -ones, eye, zeros],
        [-V, -ones, zeros, eye],
        [np.ones((1, nv)), np.zeros((1, 1 + 2 * D))],
    ])
    b = np.r_[p, -p, 1.0]
    c = np.zeros(A.shape[1])
    c[nv] = 1.0
    res = simplex(c, A, b)
    if res.status != "optimal":
        best = float(np.abs(V @ np.clip(res.x[:nv], 0, None) - p).max()) if res.x.any() else math.inf
        raise DecompositionError(f"decomposition LP ended with status {res.status}", best)

    w = res.x[:nv].copy()
    w[w < 0] = 0.0  # only roundoff-level negatives can occur here
    residual = float(np.abs(V @ w - p).max())
    return Decomposition(w, residual)


# -- extremality ------------------------------------------------------------

def constraint_columns(fb: FiniteBehaviour, entries) -> np.ndarray:
    """Columns of the normalization + no-signaling equality system.

    ``entries`` is a sequence of (x, y, i, j).  Rows: one normalization per
    (x, y); one Alice row per (x, i) holding p(i,.|x,0) - p(i,.|x,1); one
    Bob row per (y, j) holding p(.,j|0,y) - p(.,j|1,y).
    """
    na = [len(o) for o in fb.alice_outcomes]
    nb = [len(o) for o in fb.bob_outcomes]
    a_off = [4, 4 + na[0]]
    b_off = [4 + na[0] + na[1], 4 + na[0] + na[1] + nb[0]]
    n_rows = 4 + sum(na) + sum(nb)
    A = np.zeros((n_rows, len(entries)))
    for col, (x, y, i, j) in enumerate(entries):
        A[2 * x + y, col] = 1.0
        A[a_off[x] + i, col] = 1.0 if y == 0 else -1.0
        A[b_off[y] + j, col] = 1.0 if x == 0 else -1.0
    return A


def is_extreme(fb: FiniteBehaviour, support_tol: float = SUPPORT_TOL, rank_rtol: float = RANK_RTOL) -> bool:
    """Vertex test: constraint columns on the support are linearly independent."""
    ns = is_no_signaling_finite(fb)
    if not ns.ok:
        raise MeasureError(f"behaviour is signaling (deviation {ns.max_deviation:.3g})")
    entries = [(x, y, int(i), int(j)) for x in (0, 1) for y in (0, 1)
               for i, j in zip(*np.nonzero(fb.table(x, y) > support_tol))]
    A = constraint_columns(fb, entries)
    s = np.linalg.svd(A, compute_uv=False)
    rank = int((s > rank_rtol * s[0]).sum())
    return rank == len(entries)
