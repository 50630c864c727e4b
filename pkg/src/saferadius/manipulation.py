"""Atomic grid manipulations and canonical offset bookkeeping.

A manipulation state is identified by its integer offset vector: dimension i
currently holds clamp(base[i] + offsets[i] * tau, 0, 1). Saturated dimensions
keep their offset count, so state identity is stable under clamping, and the
move generators elsewhere refuse moves that would not change any value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .metrics import Metric, in_neighborhood


@dataclass(frozen=True)
class AtomicManipulation:
    """A single-dimension step of +tau or -tau."""

    dim: int
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise InputError(f"sign must be -1 or +1, got {self.sign}")


class ManipulationState:
    """Immutable grid point relative to a base input.

    Equality and hashing use only the canonical offset vector; states are only
    ever compared within a single (base, tau) instance.
    """

    __slots__ = ("base", "tau", "offsets", "_values", "_key")

    def __init__(self, base: np.ndarray, tau: float, offsets: np.ndarray | None = None):
        base = np.asarray(base, dtype=np.float64).ravel()
        if tau <= 0 or tau > 1:
            raise InputError(f"tau must lie in (0, 1], got {tau}")
        if offsets is None:
            offsets = np.zeros(base.size, dtype=np.int64)
        else:
            offsets = np.asarray(offsets, dtype=np.int64)
            if offsets.shape != base.shape:
                raise InputError("offsets shape does not match the base input")
        base.setflags(write=False)
        offsets.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "tau", float(tau))
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "_values", None)
        object.__setattr__(self, "_key", None)

    def __setattr__(self, name, value):  # pragma: no cover - guards misuse
        raise AttributeError("ManipulationState is immutable")

    @property
    def n_dims(self) -> int:
        return self.base.size

    @property
    def values(self) -> np.ndarray:
        """Reconstructed input values, clamped to [0, 1]."""
        if self._values is None:
            vals = np.clip(self.base + self.offsets * self.tau, 0.0, 1.0)
            vals.setflags(write=False)
            object.__setattr__(self, "_values", vals)
        return self._values

    @property
    def key(self) -> bytes:
        """Canonical identity of the grid point."""
        if self._key is None:
            object.__setattr__(self, "_key", self.offsets.tobytes())
        return self._key

    @property
    def depth(self) -> int:
        """Number of atomic manipulations this state is away from the base."""
        return int(np.abs(self.offsets).sum())

    def __eq__(self, other):
        return isinstance(other, ManipulationState) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"ManipulationState(offsets={self.offsets.tolist()}, tau={self.tau})"


def apply(state: ManipulationState, move: AtomicManipulation) -> ManipulationState:
    """New state with one atomic step applied; the argument is untouched."""
    if not 0 <= move.dim < state.n_dims:
        raise InputError(f"dimension {move.dim} out of range for {state.n_dims} dims")
    offsets = state.offsets.copy()
    offsets[move.dim] += move.sign
    return ManipulationState(state.base, state.tau, offsets)


def apply_set(state: ManipulationState, dims, psi) -> ManipulationState:
    """Apply one step on every dim in dims, signs taken from the psi mapping.

    Equals sequential application of the atomic steps in ascending dim order.
    """
    offsets = state.offsets.copy()
    for dim in sorted(dims):
        if not 0 <= dim < state.n_dims:
            raise InputError(f"dimension {dim} out of range for {state.n_dims} dims")
        sign = psi[dim] if not callable(psi) else psi(dim)
        if sign not in (-1, 1):
            raise InputError(f"psi must map dims to -1 or +1, got {sign}")
        offsets[dim] += sign
    return ManipulationState(state.base, state.tau, offsets)


def is_noop(state: ManipulationState, move: AtomicManipulation) -> bool:
    """True when clamping makes the move leave the reconstructed value unchanged."""
    if not 0 <= move.dim < state.n_dims:
        raise InputError(f"dimension {move.dim} out of range for {state.n_dims} dims")
    base = float(state.base[move.dim])
    before = min(1.0, max(0.0, base + state.offsets[move.dim] * state.tau))
    after = min(1.0, max(0.0, base + (state.offsets[move.dim] + move.sign) * state.tau))
    return before == after


def is_in_budget(state: ManipulationState, m: Metric, d: float) -> bool:
    """Whether the reconstructed input still lies in the radius-d ball."""
    return in_neighborhood(m, state.base, state.values, d)
