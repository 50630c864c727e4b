import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saferadius.errors import ConfigError, InputError
from saferadius.metrics import (
    L0,
    L1,
    L2,
    LINF,
    Metric,
    distance,
    grid_cell_radius,
    in_neighborhood,
)

ALL_METRICS = [L0, L1, L2, LINF]


def test_distance_identity():
    a = np.array([0.3, 0.7, 0.1])
    for m in ALL_METRICS:
        assert distance(m, a, a) == 0.0


def test_distance_formulas():
    a = np.array([0.2, 0.2, 0.2])
    b = np.array([0.3, 0.3, 0.3])
    assert distance(L1, a, b) == pytest.approx(0.3, abs=1e-12)
    assert distance(L2, a, b) == pytest.approx(math.sqrt(0.03), abs=1e-12)
    assert distance(LINF, a, b) == pytest.approx(0.1, abs=1e-12)


def test_distance_l0_counts_changed_dims():
    assert distance(L0, np.array([0.0, 0.0, 0.0]), np.array([0.0, 0.5, 0.0])) == 1.0


def test_distance_shape_mismatch():
    with pytest.raises(InputError):
        distance(L1, np.zeros(2), np.zeros(3))


def test_metric_parsing():
    assert Metric.from_name("Linf").k == math.inf
    assert Metric.from_name("L2").name == "L2"
    assert not Metric.from_name("L0").guarantee_capable
    with pytest.raises(ConfigError):
        Metric.from_name("L3")
    with pytest.raises(ConfigError):
        Metric(0.5)


def test_in_neighborhood_examples():
    center = np.zeros(2)
    assert in_neighborhood(L2, center, center, 0.0)
    assert not in_neighborhood(LINF, center, np.array([0.3, 0.1]), 0.2)
    assert in_neighborhood(L1, center, np.array([0.1, 0.1]), 0.2)
    with pytest.raises(InputError):
        in_neighborhood(L1, center, center, -0.1)


def test_grid_cell_radius():
    assert grid_cell_radius(LINF, 1000, 0.05) == 0.05
    assert grid_cell_radius(L1, 4, 0.5) == pytest.approx(2.0)
    assert grid_cell_radius(L2, 4, 0.5) == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        grid_cell_radius(L0, 4, 0.5)
    with pytest.raises(InputError):
        grid_cell_radius(L2, 4, 0.0)


vectors = st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=1, max_size=6)


@given(vectors, vectors, vectors)
def test_metric_axioms(a, b, c):
    n = min(len(a), len(b), len(c))
    a, b, c = np.array(a[:n]), np.array(b[:n]), np.array(c[:n])
    for m in ALL_METRICS:
        dab = distance(m, a, b)
        assert dab >= 0.0
        assert dab == pytest.approx(distance(m, b, a), abs=1e-12)
        assert distance(m, a, c) <= dab + distance(m, b, c) + 1e-12
    for m in (L1, L2, LINF):
        # identity of indiscernibles at float precision: squaring can underflow
        if distance(m, a, b) == 0.0:
            assert np.abs(a - b).max(initial=0.0) <= 1e-12


@given(
    st.integers(1, 5),
    st.floats(0.05, 0.5),
    st.integers(0, 2),
    st.integers(0, 10_000),
)
def test_cover_property(n_dims, tau, metric_idx, seed):
    """Any point in the ball is within half a cell diameter of its grid rounding."""
    m = (L1, L2, LINF)[metric_idx]
    rng = np.random.default_rng(seed)
    base = rng.uniform(0.2, 0.8, size=n_dims)
    d = 2.5 * tau
    x = np.clip(base + rng.uniform(-d, d, size=n_dims), 0.0, 1.0)
    if not in_neighborhood(m, base, x, d):
        return
    offsets = np.round((x - base) / tau)
    g = np.clip(base + offsets * tau, 0.0, 1.0)
    assert distance(m, x, g) <= 0.5 * grid_cell_radius(m, n_dims, tau) + 1e-12
