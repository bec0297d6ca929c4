import numpy as np
import pytest
from scipy.optimize import linprog

from cvns.lp import simplex


def test_simple_optimum():
    # min -x1 - x2 s.t. x1 + x2 + s = 1
    res = simplex([-1, -1, 0], [[1, 1, 1]], [1])
    assert res.status == "optimal" and res.objective == pytest.approx(-1)


def test_infeasible():
    res = simplex([1, 1], [[1, 1]], [-1])
    assert res.status == "infeasible"


def test_unbounded():
    res = simplex([-1, 0], [[1, -1]], [0])
    assert res.status == "unbounded"


def test_redundant_rows():
    res = simplex([1, 2], [[1, 1], [2, 2]], [1, 2])
    assert res.status == "optimal" and np.allclose(res.x, [1, 0])


def test_degenerate_cycling_example():
    # Beale's example: cycles under the textbook largest-coefficient rule
    c = [-0.75, 150, -0.02, 6, 0, 0, 0]
    A = [[0.25, -60, -0.04, 9, 1, 0, 0],
         [0.5, -90, -0.02, 3, 0, 1, 0],
         [0, 0, 1, 0, 0, 0, 1]]
    res = simplex(c, A, [0, 0, 1])
    assert res.status == "optimal" and res.objective == pytest.approx(-0.05)


def test_matches_linprog(rng):
    # feasible by construction; the sum row keeps the region bounded
    for _ in range(60):
        m, n = int(rng.integers(2, 8)), int(rng.integers(8, 20))
        A = np.vstack([rng.normal(size=(m, n)), np.ones(n)])
        b = A @ rng.dirichlet(np.ones(n))
        c = rng.normal(size=n)
        ours = simplex(c, A, b)
        ref = linprog(c, A_eq=A, b_eq=b, bounds=(0, None), method="highs")
        assert ref.status == 0 and ours.status == "optimal"
        assert ours.objective == pytest.approx(ref.fun, abs=1e-8)
        assert np.allclose(A @ ours.x, b, atol=1e-8) and ours.x.min() >= -1e-12


def test_infeasible_agrees_with_linprog(rng):
    for _ in range(20):
        n = 6
        A = np.vstack([np.ones(n), rng.normal(size=n)])
        b = np.array([1.0, np.abs(A[1]).max() + 1.0])  # a.x cannot exceed max|a_i| on the simplex
        assert simplex(np.zeros(n), A, b).status == "infeasible"
        assert linprog(np.zeros(n), A_eq=A, b_eq=b, method="highs").status == 2
