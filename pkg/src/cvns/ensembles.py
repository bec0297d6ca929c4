"""Seeded random families of behaviours for property tests and experiments."""
from __future__ import annotations

import numpy as np

from .boxes import HVTerm, cv_pr_box, gaussian_pr_box, local_hv_behaviour
from .measures import Behaviour, Measure, mix_behaviours


def random_hv_terms(rng: np.random.Generator, max_terms: int = 8, bound: float = 5.0) -> list[HVTerm]:
    n = int(rng.integers(1, max_terms + 1))
    w = rng.dirichlet(np.ones(n))
    w /= w.sum()
    A = rng.uniform(-bound, bound, (n, 2))
    B = rng.uniform(-bound, bound, (n, 2))
    return [HVTerm(float(w[i]), tuple(A[i]), tuple(B[i])) for i in range(n)]


def random_local_behaviour(rng: np.random.Generator, max_terms: int = 8, bound: float = 5.0) -> Behaviour:
    return local_hv_behaviour(random_hv_terms(rng, max_terms, bound))


def random_cv_pr_box(rng: np.random.Generator, k: int, bound: float = 3.0) -> Behaviour:
    while True:
        a, b = rng.uniform(-bound, bound, (2, k))
        if len(set(a)) == k and len(set(b)) == k:
            return cv_pr_box(k, a, b)


def random_measure(rng: np.random.Generator, max_components: int = 4, bound: float = 3.0) -> Measure:
    """Random mixture of Diracs and Gaussians (not tied to any behaviour)."""
    n = int(rng.integers(1, max_components + 1))
    w = rng.dirichlet(np.ones(n))
    is_gauss = rng.random(n) < 0.5
    c = rng.uniform(-bound, bound, (n, 2))
    s = rng.uniform(0.1, 1.0, n)
    g = is_gauss
    return Measure(w[~g], c[~g, 0], c[~g, 1], w[g], c[g, 0], c[g, 1], s[g])


def random_ns_gaussian_mixture(rng: np.random.Generator, max_boxes: int = 3, max_k: int = 3,
                               center_bound: float = 1.5, sigma_range=(0.1, 0.2)) -> Behaviour:
    """Convex mixture of Gaussian PR boxes, each with one common width.

    Defaults keep essentially all mass inside [-3, 3]^2: centres within
    +-1.5 and widths below 0.2 put the edge at least 7.5 widths away,
    so the escaping mass stays below 1e-13.
    """
    n = int(rng.integers(1, max_boxes + 1))
    parts = []
    for _ in range(n):
        k = int(rng.integers(1, max_k + 1))
        while True:
            a, b = rng.uniform(-center_bound, center_bound, (2, k))
            if len(set(a)) == k and len(set(b)) == k:
                break
        sigma = rng.uniform(*sigma_range)
        parts.append(gaussian_pr_box(k, a, b, np.full(k, sigma)))
    w = rng.dirichlet(np.ones(n))
    return mix_behaviours(parts, w / w.sum())


def random_ns_atomic_mixture(rng: np.random.Generator, max_boxes: int = 3, max_k: int = 3,
                             bound: float = 3.0) -> Behaviour:
    """Convex mixture of CV PR boxes (local boxes included as k = 1)."""
    n = int(rng.integers(1, max_boxes + 1))
    parts = [random_cv_pr_box(rng, int(rng.integers(1, max_k + 1)), bound) for _ in range(n)]
    w = rng.dirichlet(np.ones(n))
    return mix_behaviours(parts, w / w.sum())
