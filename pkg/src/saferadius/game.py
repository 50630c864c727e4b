"""The two-player turn-based game over grid manipulations.

Player one picks a feature, player two applies an atomic step inside it. In
cooperative mode both players chase the nearest class change; in competitive
mode player one commits to a single feature at the root and play then stays
inside that feature, so the game value is the most robust feature's minimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering

import numpy as np

from .errors import ConfigError, InputError, NonterminationError
from .features import FeaturePartition
from .manipulation import AtomicManipulation, ManipulationState, apply, is_noop
from .metrics import Metric, distance, in_neighborhood
from .nn import LipschitzConstants, Network, forward, margin_from_probs

COOPERATIVE = "cooperative"
COMPETITIVE = "competitive"


@total_ordering
class ExceedsBudget:
    """Sentinel for "no adversarial example within radius d"; above every real."""

    __slots__ = ("budget",)

    def __init__(self, budget: float):
        self.budget = float(budget)

    def __eq__(self, other):
        return isinstance(other, ExceedsBudget) and other.budget == self.budget

    def __lt__(self, other):
        if isinstance(other, ExceedsBudget):
            return self.budget < other.budget
        if isinstance(other, (int, float)):
            return False
        return NotImplemented

    def __gt__(self, other):
        if isinstance(other, ExceedsBudget):
            return self.budget > other.budget
        if isinstance(other, (int, float)):
            return True
        return NotImplemented

    def __hash__(self):
        return hash(("ExceedsBudget", self.budget))

    def __repr__(self):
        return f"ExceedsBudget({self.budget})"


BoundValue = float | ExceedsBudget


def format_bound(value: BoundValue | None) -> str:
    if value is None:
        return "none"
    if isinstance(value, ExceedsBudget):
        return f"> {value.budget:g}"
    return f"{value:.12g}"


def bounds_close(a: BoundValue, b: BoundValue, tol: float = 1e-9) -> bool:
    if isinstance(a, ExceedsBudget) or isinstance(b, ExceedsBudget):
        return a == b
    return abs(a - b) <= tol


@dataclass(frozen=True)
class GameConfig:
    """Everything that fixes one verification game instance except the input."""

    metric: Metric
    radius: float
    tau: float
    mode: str = COOPERATIVE
    target_class: int | None = None  # None means untargeted
    lipschitz: LipschitzConstants | None = None

    def __post_init__(self):
        if not self.metric.guarantee_capable:
            raise ConfigError("games need a guarantee-capable metric; L0 is report-only")
        if self.radius <= 0:
            raise ConfigError(f"radius must be positive, got {self.radius}")
        if not 0 < self.tau <= 1:
            raise ConfigError(f"tau must lie in (0, 1], got {self.tau}")
        if self.mode not in (COOPERATIVE, COMPETITIVE):
            raise ConfigError(f"unknown mode {self.mode!r}")

    @property
    def targeted(self) -> bool:
        return self.target_class is not None


@dataclass(frozen=True)
class GameState:
    """A game position: player one to move unless a feature is selected."""

    manip: ManipulationState
    selected_feature: int | None = None

    @property
    def player(self) -> int:
        return 1 if self.selected_feature is None else 2


def is_adversarial(
    net: Network,
    cfg: GameConfig,
    base: np.ndarray,
    x: np.ndarray,
    base_class: int | None = None,
) -> bool:
    """Whether x flips the classification inside the radius-d neighborhood."""
    if base_class is None:
        base_class = int(np.argmax(forward(net, base)))
    if not in_neighborhood(cfg.metric, np.ravel(base), np.ravel(x), cfg.radius):
        return False
    cls = int(np.argmax(forward(net, x)))
    if cls == base_class:
        return False
    return cls == cfg.target_class if cfg.targeted else True


def player1_moves(
    cfg: GameConfig, partition: FeaturePartition, locked_feature: int | None = None
) -> list[int]:
    """Feature choices available to player one."""
    if cfg.mode == COMPETITIVE and locked_feature is not None:
        return [locked_feature]
    return list(range(len(partition)))


def player2_moves(
    state: ManipulationState, partition: FeaturePartition, feature: int
) -> list[AtomicManipulation]:
    """Atomic steps within the selected feature, minus clamped no-ops."""
    moves = []
    for dim in partition.features[feature]:
        for sign in (1, -1):
            move = AtomicManipulation(dim, sign)
            if not is_noop(state, move):
                moves.append(move)
    return moves


def is_terminal(
    net: Network,
    cfg: GameConfig,
    base: np.ndarray,
    state: ManipulationState,
    base_class: int | None = None,
) -> bool:
    """A player-one state ends play when adversarial or out of budget."""
    if not in_neighborhood(cfg.metric, state.base, state.values, cfg.radius):
        return True
    return is_adversarial(net, cfg, base, state.values, base_class=base_class)


def evaluate_profile(
    net: Network,
    cfg: GameConfig,
    partition: FeaturePartition,
    base: np.ndarray,
    sigma1,
    sigma2,
    depth_cap: int,
) -> float:
    """Reward of the single path induced by two deterministic strategies.

    sigma1 maps a ManipulationState to a feature id; sigma2 maps (state,
    feature) to an AtomicManipulation. Returns the distance from the base at
    the first terminal state; raises after depth_cap steps without one.
    """
    flat = np.asarray(base, dtype=np.float64).ravel()
    base_class = int(np.argmax(forward(net, base)))
    state = ManipulationState(flat, cfg.tau)
    steps = 0
    while True:
        if is_terminal(net, cfg, base, state, base_class=base_class):
            return distance(cfg.metric, flat, state.values)
        if steps >= depth_cap:
            raise NonterminationError(f"no terminal state within {depth_cap} steps")
        feature = sigma1(state)
        if not 0 <= feature < len(partition):
            raise InputError(f"strategy selected feature {feature} of {len(partition)}")
        move = sigma2(state, feature)
        if move.dim not in partition.features[feature]:
            raise InputError(f"dimension {move.dim} is not in feature {feature}")
        state = apply(state, move)
        steps += 1


class GameInstance:
    """One verification problem with memoized per-grid-point evaluations.

    Bundles the network, configuration, partition and base input that the
    searches share, and caches class and margin per canonical grid point so
    repeated visits cost one dictionary lookup instead of a forward pass.
    """

    def __init__(
        self,
        net: Network,
        cfg: GameConfig,
        partition: FeaturePartition,
        base: np.ndarray,
    ):
        if partition.n_dims != net.n_dims:
            raise ConfigError("partition does not cover the network input dimensions")
        self.net = net
        self.cfg = cfg
        self.partition = partition
        self.base_flat = np.asarray(base, dtype=np.float64).ravel()
        if self.base_flat.size != net.n_dims:
            raise InputError("base input does not match the network input shape")
        self.base_probs = forward(net, base)
        self.base_class = int(np.argmax(self.base_probs))
        if cfg.targeted and not 0 <= cfg.target_class < net.num_classes:
            raise ConfigError(f"target class {cfg.target_class} out of range")
        self._cache: dict[bytes, tuple[int, float]] = {}

    def root(self) -> ManipulationState:
        return ManipulationState(self.base_flat, self.cfg.tau)

    def class_and_margin(self, state: ManipulationState) -> tuple[int, float]:
        hit = self._cache.get(state.key)
        if hit is None:
            probs = forward(self.net, state.values)
            cls = int(np.argmax(probs))
            hit = (cls, margin_from_probs(probs, cls))
            self._cache[state.key] = hit
        return hit

    def distance_from_base(self, state: ManipulationState) -> float:
        return distance(self.cfg.metric, self.base_flat, state.values)

    def in_budget(self, state: ManipulationState) -> bool:
        return in_neighborhood(self.cfg.metric, self.base_flat, state.values, self.cfg.radius)

    def is_adversarial_state(self, state: ManipulationState) -> bool:
        if not self.in_budget(state):
            return False
        cls, _ = self.class_and_margin(state)
        if cls == self.base_class:
            return False
        return cls == self.cfg.target_class if self.cfg.targeted else True

    def is_terminal_state(self, state: ManipulationState) -> bool:
        return not self.in_budget(state) or self.is_adversarial_state(state)

    def terminal_value(self, state: ManipulationState) -> BoundValue:
        """Distance for adversarial terminals, the budget sentinel otherwise."""
        if self.is_adversarial_state(state):
            return self.distance_from_base(state)
        return ExceedsBudget(self.cfg.radius)

    def moves_in_feature(self, state: ManipulationState, feature: int):
        return player2_moves(state, self.partition, feature)

    def degenerate_value(self) -> BoundValue | None:
        """0 when the base input already satisfies the targeted goal."""
        if self.cfg.targeted and self.base_class == self.cfg.target_class:
            return 0.0
        return None
