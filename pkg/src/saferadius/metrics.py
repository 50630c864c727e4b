"""L_k distances, neighborhood membership, and the grid-cell diameter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InputError

# Absolute slack used for membership tests so that points sitting exactly on
# the radius survive float round-off.
NEIGHBORHOOD_SLACK = 1e-12

_NAME_TO_K = {"L0": 0.0, "L1": 1.0, "L2": 2.0, "Linf": math.inf}


@dataclass(frozen=True)
class Metric:
    """An L_k metric. k=0 is supported for reporting only, never for guarantees."""

    k: float

    def __post_init__(self):
        if self.k not in (0.0, 1.0, 2.0, math.inf):
            raise ConfigError(f"unsupported metric order k={self.k!r}")
        object.__setattr__(self, "k", float(self.k))

    @classmethod
    def from_name(cls, name: str) -> "Metric":
        try:
            return cls(_NAME_TO_K[name])
        except KeyError:
            raise ConfigError(f"unknown metric {name!r}; expected one of {sorted(_NAME_TO_K)}")

    @property
    def name(self) -> str:
        for n, k in _NAME_TO_K.items():
            if k == self.k:
                return n
        raise AssertionError(self.k)

    @property
    def guarantee_capable(self) -> bool:
        return self.k != 0.0


L0 = Metric(0.0)
L1 = Metric(1.0)
L2 = Metric(2.0)
LINF = Metric(math.inf)


def distance(m: Metric, a: np.ndarray, b: np.ndarray) -> float:
    """L_k distance between two same-shape arrays (L0 counts differing dims)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = (a - b).ravel()
    if m.k == 0.0:
        return float(np.count_nonzero(diff))
    if m.k == 1.0:
        return float(np.abs(diff).sum())
    if m.k == 2.0:
        return float(math.sqrt(float(np.square(diff).sum())))
    return float(np.abs(diff).max()) if diff.size else 0.0


def in_neighborhood(m: Metric, center: np.ndarray, x: np.ndarray, d: float) -> bool:
    """Whether x lies in the radius-d ball around center (with float slack)."""
    if d < 0:
        raise InputError(f"negative radius {d}")
    return distance(m, center, x) <= d + NEIGHBORHOOD_SLACK


def grid_cell_radius(m: Metric, n_dims: int, tau: float) -> float:
    """Diameter (n * tau^k)^(1/k) of one grid cell; half of it is the error bound."""
    if not m.guarantee_capable:
        raise ConfigError("grid-cell radius is undefined for L0")
    if tau <= 0:
        raise InputError(f"tau must be positive, got {tau}")
    if n_dims < 1:
        raise InputError(f"n_dims must be positive, got {n_dims}")
    if m.k == 1.0:
        return n_dims * tau
    if m.k == 2.0:
        return math.sqrt(n_dims) * tau
    return tau
