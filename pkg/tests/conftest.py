import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cvns.measures import Measure

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

coord = st.floats(-4, 4, allow_nan=False, allow_infinity=False)
width = st.floats(0.05, 2.0)


@st.composite
def measures(draw, max_components=5, gaussians=True):
    """Random finite mixtures with weights normalized to 1."""
    n = draw(st.integers(1, max_components))
    raw_w = draw(st.lists(st.floats(0.05, 1.0), min_size=n, max_size=n))
    kinds = draw(st.lists(st.booleans() if gaussians else st.just(False), min_size=n, max_size=n))
    pts = draw(st.lists(st.tuples(coord, coord, width), min_size=n, max_size=n))
    w = np.array(raw_w) / sum(raw_w)
    d = [(wi, a, b) for wi, g, (a, b, _) in zip(w, kinds, pts) if not g]
    gs = [(wi, a, b, s) for wi, g, (a, b, s) in zip(w, kinds, pts) if g]
    d = np.array(d).reshape(-1, 3)
    gs = np.array(gs).reshape(-1, 4)
    return Measure(*d.T, *gs.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)
