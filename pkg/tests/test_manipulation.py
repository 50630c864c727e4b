import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from saferadius.errors import InputError
from saferadius.manipulation import (
    AtomicManipulation,
    ManipulationState,
    apply,
    apply_set,
    is_in_budget,
    is_noop,
)
from saferadius.metrics import L1, LINF


def state(base, tau):
    return ManipulationState(np.asarray(base, dtype=np.float64), tau)


def test_apply_basic_step():
    s = apply(state([0.5, 0.5], 0.25), AtomicManipulation(0, +1))
    assert s.values[0] == 0.75
    assert s.offsets.tolist() == [1, 0]


def test_apply_clamps_to_bound():
    s = apply(state([0.9, 0.5], 0.25), AtomicManipulation(0, +1))
    assert s.values[0] == 1.0
    assert s.offsets[0] == 1  # canonical count survives clamping


def test_apply_then_inverse_restores_state():
    s0 = state([0.5, 0.5], 0.25)
    s = apply(apply(s0, AtomicManipulation(1, +1)), AtomicManipulation(1, -1))
    assert s == s0
    assert s.values.tolist() == s0.values.tolist()


def test_apply_rejects_bad_dim():
    with pytest.raises(InputError):
        apply(state([0.5], 0.25), AtomicManipulation(3, +1))
    with pytest.raises(InputError):
        AtomicManipulation(0, 2)


def test_apply_set_empty_is_identity():
    s0 = state([0.1, 0.2], 0.1)
    assert apply_set(s0, set(), {}) == s0


def test_apply_set_elementwise():
    s = apply_set(state([0.1, 0.2], 0.1), {0, 1}, {0: +1, 1: +1})
    np.testing.assert_allclose(s.values, [0.2, 0.3], atol=1e-12)


def test_apply_set_equals_sequential_atomics():
    s0 = state([0.4, 0.6, 0.5], 0.125)
    combined = apply_set(s0, {0, 2}, {0: +1, 2: -1})
    sequential = apply(apply(s0, AtomicManipulation(0, +1)), AtomicManipulation(2, -1))
    assert combined == sequential


def test_is_in_budget_examples():
    assert is_in_budget(state([0.5, 0.5], 0.3), LINF, 0.0)
    s = apply(state([0.5, 0.5], 0.3), AtomicManipulation(0, +1))
    assert not is_in_budget(s, LINF, 0.25)
    s2 = apply_set(state([0.5, 0.5], 0.1), {0, 1}, {0: +1, 1: +1})
    assert is_in_budget(s2, L1, 0.2)


def test_is_noop_at_saturation():
    s = state([1.0, 0.5], 0.25)
    assert is_noop(s, AtomicManipulation(0, +1))
    assert not is_noop(s, AtomicManipulation(0, -1))
    near = state([0.9, 0.5], 0.25)
    stepped = apply(near, AtomicManipulation(0, +1))  # clamped to 1.0
    assert is_noop(stepped, AtomicManipulation(0, +1))


def test_state_is_immutable():
    s = state([0.5], 0.25)
    with pytest.raises(AttributeError):
        s.tau = 0.5
    with pytest.raises(ValueError):
        s.offsets[0] = 3


moves = st.lists(
    st.tuples(st.integers(0, 3), st.sampled_from([-1, 1])), min_size=0, max_size=8
)


@given(moves, st.randoms(use_true_random=False))
def test_order_independence(seq, shuffler):
    """Different orderings of one move multiset land on the same canonical state."""
    base = np.full(4, 0.5)
    s0 = ManipulationState(base, 1 / 16)  # small dyadic tau: no clamping possible here
    a = s0
    for dim, sign in seq:
        a = apply(a, AtomicManipulation(dim, sign))
    shuffled = list(seq)
    shuffler.shuffle(shuffled)
    b = s0
    for dim, sign in shuffled:
        b = apply(b, AtomicManipulation(dim, sign))
    assert a == b
    assert hash(a) == hash(b)


@given(st.integers(-8, 8), st.integers(0, 15))
def test_exact_grid_membership_without_clamping(k, sixteenth):
    """Unclamped reconstructions sit exactly on the dyadic grid."""
    base = np.array([sixteenth / 16.0])
    tau = 1 / 16
    s = ManipulationState(base, tau, np.array([k]))
    value = base[0] + k * tau
    if 0.0 <= value <= 1.0:
        assert abs(s.values[0] - base[0]) == abs(k) * tau


def test_apply_never_mutates_parent():
    s0 = state([0.5, 0.5], 0.25)
    before = s0.offsets.copy()
    apply(s0, AtomicManipulation(0, +1))
    np.testing.assert_array_equal(s0.offsets, before)
