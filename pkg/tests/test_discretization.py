import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import norm

from cvns.boxes import appendix_c_sequence, cv_pr_box, gaussian_pr_box, local_hv_behaviour
from cvns.discretization import (DomainError, FiniteBehaviour, Grid, bin_behaviour, chsh,
                                 convergence_report, discretize_compact, discretize_unbounded,
                                 from_finite, gaps_shrink, partition_weights, probe,
                                 reports_to_csv, to_finite, unbounded_partition)
from cvns.discretization import test_function_integral as integral
from cvns.ensembles import (random_hv_terms, random_local_behaviour, random_ns_atomic_mixture,
                            random_ns_gaussian_mixture)
from cvns.measures import Behaviour, Measure, MeasureError, canonicalize, is_no_signaling, mass
from cvns.moments import cross_moment
from cvns.polytope import is_no_signaling_finite

PR2 = cv_pr_box(2, [1, -1], [1, -1])


def atoms(m):
    return sorted((c.a, c.b, round(c.weight, 12)) for c in canonicalize(m).components)


def uniform_behaviour():
    m = Measure(np.full(4, 0.25), [1, 1, -1, -1], [1, -1, 1, -1])
    return Behaviour([[m, m], [m, m]])


# -- grid -------------------------------------------------------------------

def test_grid_edges_and_centres():
    g = Grid(3.0, 6)
    assert np.allclose(g.edges, np.linspace(-3, 3, 7))
    assert np.all(np.diff(g.edges) > 0)
    assert np.all((g.centers > g.edges[:-1]) & (g.centers < g.edges[1:]))


def test_grid_odd_count_has_exact_zero_centre():
    assert Grid(2.0, 5).centers[2] == 0.0


# -- compact ----------------------------------------------------------------

def test_compact_atoms_on_centres_are_unchanged():
    bhv = cv_pr_box(2, [0.5, -0.5], [0.5, -0.5])
    disc = discretize_compact(bhv, 1, 2)
    for xy, m in bhv.items():
        assert atoms(disc[xy]) == atoms(m)


def test_compact_single_bin(rng):
    disc = discretize_compact(random_ns_gaussian_mixture(rng), 3, 1, clamp_tails=True)
    for _, m in disc.items():
        assert atoms(m) == [(0.0, 0.0, 1.0)]


def test_compact_moment_gap_small():
    bhv = gaussian_pr_box(2, [1, -1], [1, -1], [0.1, 0.1])
    disc = discretize_compact(bhv, 2, 100)
    for xy, m in bhv.items():
        assert abs(cross_moment(disc[xy], 1, 1) - cross_moment(m, 1, 1)) < 1e-3


def test_compact_weights_equal_rectangle_masses(rng):
    bhv = random_ns_gaussian_mixture(rng)
    K, n = 3.0, 7
    edges = Grid(K, n).edges
    disc = discretize_compact(bhv, K, n)
    for xy, m in bhv.items():
        W = partition_weights(disc[xy], edges, edges)
        for i in range(n):
            for j in range(n):
                # interior rectangles, half-open except the top edge
                want = mass(m, (edges[i], edges[i + 1], edges[j], edges[j + 1]))
                assert W[i, j] == pytest.approx(want, abs=1e-12)


def test_compact_escape_raises():
    with pytest.raises(DomainError):
        discretize_compact(gaussian_pr_box(2, [1, -1], [1, -1], [0.5, 0.5]), 1.5, 4)


def test_compact_clamp_tails_keeps_mass():
    bhv = gaussian_pr_box(2, [1, -1], [1, -1], [0.5, 0.5])
    disc = discretize_compact(bhv, 1.5, 4, clamp_tails=True)
    assert all(m.total_weight == pytest.approx(1.0, abs=1e-12) for _, m in disc.items())


def test_compact_preserves_no_signaling(rng):
    for _ in range(100):
        bhv = random_ns_gaussian_mixture(rng) if rng.random() < 0.5 else random_ns_atomic_mixture(rng, bound=2.5)
        disc = discretize_compact(bhv, 3, int(rng.integers(1, 30)))
        assert is_no_signaling(disc).ok


# -- unbounded --------------------------------------------------------------

def test_unbounded_partition_shape():
    edges, reps = unbounded_partition(2)
    assert len(reps) == 2 * 4 + 2 and len(edges) == len(reps) + 1
    assert reps[0] == -3 and reps[-1] == 3
    assert np.allclose(np.diff(edges[1:-1]), 0.5)


def test_unbounded_corner_atom():
    disc = discretize_unbounded(Behaviour([[Measure.gaussian(0, 0, 1)] * 2] * 2), 1)
    corner = mass(disc[0, 0], (2, 2, 2, 2))
    assert corner == pytest.approx(norm.sf(1) ** 2, rel=1e-12)
    assert corner == pytest.approx(0.0252, abs=1e-4)


def test_unbounded_matches_compact_for_supported_input():
    bhv = cv_pr_box(2, [0.3, -0.8], [0.1, 0.9])
    disc = discretize_unbounded(bhv, 2)
    ref = discretize_compact(bhv, 2, 8)
    for xy, m in disc.items():
        assert mass(m, (-3, -3, -math.inf, math.inf)) == 0
        assert mass(m, (3, 3, -math.inf, math.inf)) == 0
        assert atoms(m) == atoms(ref[xy])


def test_unbounded_preserves_no_signaling(rng):
    for _ in range(50):
        bhv = random_ns_gaussian_mixture(rng, center_bound=3, sigma_range=(0.3, 2.0))
        assert is_no_signaling(discretize_unbounded(bhv, int(rng.integers(1, 4)))).ok


def test_unbounded_preserves_mass(rng):
    bhv = random_ns_gaussian_mixture(rng, sigma_range=(1.0, 3.0))
    for _, m in discretize_unbounded(bhv, 2).items():
        assert m.total_weight == pytest.approx(1.0, abs=1e-12)


# -- finite behaviours ------------------------------------------------------

def test_to_finite_pr_box():
    fb = to_finite(PR2)
    assert fb.alice_outcomes == ((-1.0, 1.0), (-1.0, 1.0))
    assert np.allclose(fb.table(0, 0), [[0.5, 0], [0, 0.5]])
    assert np.allclose(fb.table(1, 1), [[0, 0.5], [0.5, 0]])


def test_to_finite_deterministic():
    from cvns.boxes import deterministic_box
    fb = to_finite(deterministic_box(1, 2, 3, 4))
    assert all(fb.table(x, y).shape == (1, 1) and fb.table(x, y)[0, 0] == 1 for x in (0, 1) for y in (0, 1))


def test_to_finite_round_trip(rng):
    for _ in range(30):
        bhv = random_ns_atomic_mixture(rng)
        back = from_finite(to_finite(bhv))
        for xy, m in bhv.items():
            assert atoms(back[xy]) == atoms(m)


def test_to_finite_rejects_gaussian():
    with pytest.raises(MeasureError):
        to_finite(gaussian_pr_box(2, [1, -1], [1, -1], [0.1, 0.1]))


def test_finite_behaviour_validates_tables():
    with pytest.raises(MeasureError):
        FiniteBehaviour(((0,), (0,)), ((0,), (0,)), [[[[0.5]], [[1]]], [[[1]], [[1]]]])


# -- binning and CHSH -------------------------------------------------------

def test_sign_binning_pr_box():
    fb = bin_behaviour(PR2, [0])
    for x in (0, 1):
        for y in (0, 1):
            t = fb.table(x, y)
            same = t[0, 0] + t[1, 1]
            assert same == pytest.approx(0.0 if x * y else 1.0)
    assert chsh(fb) == 4


def test_sign_binning_gaussian_is_uniform():
    fb = bin_behaviour(Behaviour([[Measure.gaussian(0, 0, 1)] * 2] * 2), [0])
    assert np.allclose(fb.table(0, 1), 0.25, atol=1e-15)


def test_chsh_local_correlated_is_two():
    m = Measure([0.5, 0.5], [1, -1], [1, -1])
    assert chsh(bin_behaviour(Behaviour([[m, m], [m, m]]), [0])) == pytest.approx(2)


def test_chsh_uniform_is_zero():
    assert chsh(bin_behaviour(uniform_behaviour(), [0])) == pytest.approx(0, abs=1e-15)


def test_chsh_rejects_three_outcomes():
    with pytest.raises(MeasureError):
        chsh(bin_behaviour(PR2, [-0.5, 0.5]))


def test_binning_rejects_unsorted():
    with pytest.raises(MeasureError):
        bin_behaviour(PR2, [1, 0])


def test_binning_no_thresholds_single_outcome():
    fb = bin_behaviour(PR2, [])
    assert fb.table(1, 1).shape == (1, 1)


def test_binning_preserves_no_signaling(rng):
    for _ in range(100):
        bhv = random_ns_gaussian_mixture(rng)
        t = np.sort(rng.uniform(-2, 2, int(rng.integers(1, 4))))
        rep = is_no_signaling_finite(bin_behaviour(bhv, t), tol=1e-12)
        assert rep.ok


def test_binned_local_chsh_bound(rng):
    for _ in range(500):
        bhv = random_local_behaviour(rng)
        ta, tb = rng.uniform(-3, 3, 2)
        assert abs(chsh(bin_behaviour(bhv, [ta], [tb]))) <= 2 + 1e-9


def test_chsh_algebraic_bound(rng):
    for _ in range(200):
        bhv = random_ns_atomic_mixture(rng) if rng.random() < 0.5 else random_ns_gaussian_mixture(rng)
        assert abs(chsh(bin_behaviour(bhv, [rng.uniform(-1, 1)]))) <= 4 + 1e-12


# -- probe functions --------------------------------------------------------

def test_cos_at_origin():
    assert integral(Measure.dirac(0, 0), "cos(a+b)") == 1


@pytest.mark.parametrize("n", [1, 3, 10, 50])
def test_cos_difference_on_diagonal_is_one(n):
    assert integral(appendix_c_sequence(n)[0, 1], "cos(a-b)") == pytest.approx(1.0, abs=1e-15)


def test_sequence_integral_limit():
    err = lambda n: abs(integral(appendix_c_sequence(n)[0, 0], "cos(a+b)") - math.sin(2) / 2)
    assert err(1000) < 1e-3 and err(1000) < err(100)


def test_unknown_probe():
    with pytest.raises(MeasureError):
        probe("sin:1")


def _axis_expectation(g, c, s):
    """E g(X), X ~ N(c, s^2), by adaptive quadrature over +-12 widths."""
    re, _ = integrate.quad(lambda t: np.real(g(t)) * norm.pdf(t, c, s), c - 12 * s, c + 12 * s,
                           points=[c], epsabs=1e-13, limit=200)
    im, _ = integrate.quad(lambda t: np.imag(g(t)) * norm.pdf(t, c, s), c - 12 * s, c + 12 * s,
                           points=[c], epsabs=1e-13, limit=200)
    return re + 1j * im


def probe_oracle(f_id, ca, cb, s):
    """Every library probe factorizes over the two axes (cos via exp(i.))."""
    f = probe(f_id)
    if f.kind == "cos":
        al, be = f.params
        return float(np.real(_axis_expectation(lambda t: np.exp(1j * al * t), ca, s)
                             * _axis_expectation(lambda t: np.exp(1j * be * t), cb, s)))
    if f.kind == "gauss":
        (w,) = f.params
        g = lambda t: np.exp(-t * t / (2 * w * w)) + 0j
    else:
        (c,) = f.params
        g = lambda t: np.clip(t, -c, c) + 0j
    return float(np.real(_axis_expectation(g, ca, s) * _axis_expectation(g, cb, s)))


@pytest.mark.parametrize("f_id", ["cos:1,1", "cos:0.7,-1.3", "gauss:1", "gauss:0.4", "clamp:1", "clamp:0.3"])
@pytest.mark.parametrize("ca, cb, s", [(0.2, -0.5, 0.4), (1.5, 1.0, 1.2), (-0.1, 0.0, 0.05)])
def test_probe_closed_form_matches_quadrature(f_id, ca, cb, s):
    assert integral(Measure.gaussian(ca, cb, s), f_id) == pytest.approx(probe_oracle(f_id, ca, cb, s), abs=1e-9)


def test_probe_on_atoms_is_pointwise():
    m = Measure([0.3, 0.7], [0.5, -2.0], [1.0, 0.25])
    f = probe("clamp:1")
    assert integral(m, "clamp:1") == pytest.approx(0.3 * f(0.5, 1.0) + 0.7 * f(-2.0, 0.25))


# -- convergence reports ----------------------------------------------------

def test_grid_aligned_atoms_have_zero_gaps():
    centres = Grid(2, 4).centers
    bhv = cv_pr_box(2, centres[[0, 2]], centres[[1, 3]])
    (rep,) = convergence_report(bhv, 2, [4])
    assert rep.moment_gaps.max() <= 1e-12
    assert all(g.max() <= 1e-12 for g in rep.probe_gaps.values())


def test_report_mass_gap_zero(rng):
    for rep in convergence_report(random_ns_gaussian_mixture(rng), 3, [5, 20]):
        assert np.all(rep.moment_gaps[:, :, 0, 0] <= 1e-12)
        assert np.all(rep.moment_gaps >= 0)


def test_gaussian_box_gaps_shrink():
    bhv = gaussian_pr_box(2, [1, -1], [1, -1], [0.3, 0.3])
    first, last = convergence_report(bhv, 3, [20, 200])
    assert gaps_shrink(first, last) == []


def test_report_csv_columns():
    reps = convergence_report(PR2, 2, [2, 4], M=1, probes=["cos:1,1"])
    lines = reports_to_csv(reps).splitlines()
    assert lines[0] == "cell_x,cell_y,kind,order_or_id,n,gap"
    assert len(lines) == 1 + 2 * 4 * (4 + 1)


def test_report_escape_propagates():
    with pytest.raises(DomainError):
        convergence_report(gaussian_pr_box(2, [1, -1], [1, -1], [0.5, 0.5]), 1, [4])
