import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cvns.boxes import cv_pr_box, deterministic_box, gaussian_pr_box
from cvns.ensembles import random_local_behaviour, random_measure
from cvns.measures import Behaviour, Measure, MeasureError
from cvns.moments import (cfrd, cross_moment, cross_moment_mc, gaussian_prbox2_violation,
                          gaussian_raw_moment)

from conftest import measures


def raw_moment_oracle(c, s, n):
    """E[(c + sZ)^n] by binomial expansion with E[Z^k] = (k-1)!! for even k."""
    def z_moment(k):
        return 0 if k % 2 else math.prod(range(k - 1, 0, -2))
    return sum(math.comb(n, k) * c ** (n - k) * s ** k * z_moment(k) for k in range(n + 1))


def _scaled(bhv, lam):
    def scale(m):
        return Measure(m.dw, lam * m.da, lam * m.db, m.gw, lam * m.ga, lam * m.gb, lam * m.gs)
    return bhv.map(scale)


# -- gaussian_raw_moment ----------------------------------------------------

@pytest.mark.parametrize("c, s, n, want", [(1, 0.5, 2, 1.25), (0, 1, 4, 3.0), (2, 1, 3, 14.0)])
def test_raw_moment_examples(c, s, n, want):
    assert gaussian_raw_moment(c, s, n) == pytest.approx(want, abs=1e-12)


def test_raw_moment_14_against_monte_carlo():
    rng = np.random.default_rng(1)
    z = 2 + rng.standard_normal(10 ** 6)
    v = z ** 3
    assert abs(v.mean() - gaussian_raw_moment(2, 1, 3)) < 5 * v.std(ddof=1) / 1e3


@given(st.floats(-3, 3), st.floats(0, 2), st.integers(0, 8))
def test_raw_moment_matches_binomial_oracle(c, s, n):
    want = raw_moment_oracle(c, s, n)
    assert gaussian_raw_moment(c, s, n) == pytest.approx(want, rel=1e-11, abs=1e-11)


def test_raw_moment_zero_width_is_power():
    assert gaussian_raw_moment(1.7, 0.0, 5) == pytest.approx(1.7 ** 5)


def test_raw_moment_rejects_negative_order():
    with pytest.raises(MeasureError):
        gaussian_raw_moment(0, 1, -1)


def test_raw_moment_broadcasts():
    out = gaussian_raw_moment(np.array([0.0, 1.0]), 1.0, 2)
    assert np.allclose(out, [1.0, 2.0])


# -- cross_moment -----------------------------------------------------------

def test_cross_moment_perfect_correlation():
    assert cross_moment(Measure([0.5, 0.5], [1, -1], [1, -1]), 1, 1) == 1


def test_cross_moment_gaussian_product():
    assert cross_moment(Measure.gaussian(1, 2, 0.5), 2, 2) == pytest.approx(5.3125, abs=1e-12)


@given(measures())
def test_cross_moment_zero_order_is_mass(m):
    assert cross_moment(m, 0, 0) == pytest.approx(1.0, abs=1e-12)


# -- cross_moment_mc --------------------------------------------------------

def test_mc_deterministic_atom():
    est = cross_moment_mc(Measure.dirac(2, 3), 1, 1, 1000, 0)
    assert est.estimate == 6 and est.stderr == 0


def test_mc_two_atoms():
    est = cross_moment_mc(Measure([0.5, 0.5], [1, -1], [1, -1]), 1, 1, 10 ** 5, 3)
    assert abs(est.estimate - 1) <= 5 * est.stderr + 1e-15


def test_mc_gaussian_product():
    est = cross_moment_mc(Measure.gaussian(1, 2, 0.5), 2, 2, 10 ** 6, 4)
    assert abs(est.estimate - 5.3125) <= 5 * est.stderr


def test_mc_rejects_single_sample():
    with pytest.raises(MeasureError):
        cross_moment_mc(Measure.dirac(0, 0), 1, 1, 1, 0)


def test_mc_agrees_with_closed_form_random(rng):
    for i in range(10):
        m = random_measure(rng)
        for na, nb in ((1, 1), (2, 2)):
            est = cross_moment_mc(m, na, nb, 10 ** 5, 100 + i)
            exact = cross_moment(m, na, nb)
            assert abs(est.estimate - exact) <= 5 * est.stderr + 1e-12 * max(1.0, abs(exact))


# -- cfrd -------------------------------------------------------------------

def test_cfrd_pr_box_violation_four():
    assert cfrd(cv_pr_box(2, [1, -1], [1, -1])).violation == pytest.approx(4.0, abs=1e-12)


@pytest.mark.parametrize("alpha, beta", [(1, 1), (2, -0.5), (0.3, 3)])
def test_cfrd_constant_outputs_saturate(alpha, beta):
    rep = cfrd(deterministic_box(alpha, alpha, beta, beta))
    assert rep.lhs == pytest.approx(4 * alpha ** 2 * beta ** 2)
    assert rep.violation == pytest.approx(0.0, abs=1e-12)


def test_cfrd_gaussian_box_below_threshold_is_negative():
    rep = cfrd(gaussian_pr_box(2, [1, -1], [1, -1], [1, 1]))
    assert rep.violation == pytest.approx(-8.0, abs=1e-12)
    assert rep.clamped == 0


def test_cfrd_local_perfect_correlation():
    m = Measure([0.5, 0.5], [1, -1], [1, -1])
    rep = cfrd(Behaviour([[m, m], [m, m]]))
    assert rep.lhs == pytest.approx(4) and rep.rhs == pytest.approx(4)


def test_cfrd_local_never_violates(rng):
    worst = max(cfrd(random_local_behaviour(rng)).violation for _ in range(200))
    assert worst <= 1e-9


def test_cfrd_scales_with_fourth_power(rng):
    for _ in range(20):
        bhv = random_local_behaviour(rng) if rng.random() < 0.5 else gaussian_pr_box(
            2, rng.uniform(-2, 2, 2), rng.uniform(-2, 2, 2), [0.3, 0.3])
        v1, v2 = cfrd(bhv).violation, cfrd(_scaled(bhv, 2.0)).violation
        assert v2 == pytest.approx(16 * v1, rel=1e-10, abs=1e-9)


# -- closed form ------------------------------------------------------------

# ell=2, sigma=0: 8*2^4 - 4*(2^2)^2 = 128 - 64 = 64 = 4*ell^4
@pytest.mark.parametrize("ell, sigma, clamped", [(1, 0, 4.0), (2, 0, 64.0),
                                                 (1, math.sqrt(math.sqrt(2) - 1), 0.0)])
def test_closed_form_examples(ell, sigma, clamped):
    assert gaussian_prbox2_violation(ell, sigma).clamped == pytest.approx(clamped, abs=1e-12)


def test_closed_form_rejects_zero_ell():
    with pytest.raises(MeasureError):
        gaussian_prbox2_violation(0, 1)


def test_threshold_ratio():
    # sign change of 8 - 4(r^-2 + 1)^2 in the ratio r = ell/sigma
    r = math.sqrt(1 + math.sqrt(2))
    assert r == pytest.approx(1.5538, abs=1e-4)
    assert gaussian_prbox2_violation(1, 1 / (r * 1.001)).signed > 0
    assert gaussian_prbox2_violation(1, 1 / (r * 0.999)).signed < 0


@pytest.mark.parametrize("ell", [0.5, 1, 2])
def test_closed_form_matches_pipeline(ell):
    for sigma in np.round(np.arange(0.1, 2.01, 0.1), 10):
        bhv = gaussian_pr_box(2, [ell, -ell], [ell, -ell], [sigma, sigma])
        assert cfrd(bhv).violation == pytest.approx(gaussian_prbox2_violation(ell, sigma).signed, abs=1e-9)
    assert cfrd(cv_pr_box(2, [ell, -ell], [ell, -ell])).violation == pytest.approx(
        gaussian_prbox2_violation(ell, 0).signed, abs=1e-9)


def test_fig3a_violation():
    v = cfrd(gaussian_pr_box(2, [1, -1], [1, -1], [0.2, 0.2])).violation
    assert v == pytest.approx(8 - 4 * 1.04 ** 2, abs=1e-12)


def test_order_three_box_can_violate():
    # a = b = (1, 0, -1): xy=0 cells give <AB> = <A^2B^2> = 2/3; cell (1,1)
    # pairs (1,0), (0,-1), (-1,1), so <AB> = -1/3 and <A^2B^2> = 1/3.
    # lhs = 1 + 16/9 = 25/9, rhs = 21/9
    rep = cfrd(cv_pr_box(3, [1, 0, -1], [1, 0, -1]))
    assert rep.lhs == pytest.approx(25 / 9, abs=1e-12)
    assert rep.rhs == pytest.approx(21 / 9, abs=1e-12)
    assert rep.violation == pytest.approx(4 / 9, abs=1e-12)
