"""Anytime upper bounds via Monte Carlo tree search.

Child selection samples from normalized distance-weighted UCB scores, every
freshly expanded child is simulated once by uniformly random play, and each
node keeps the best terminal input seen in its subtree. The root's best value
is emitted after every iteration and can only improve: minimizing nodes keep
their minimum, and the competitive root recomputes the maximum over feature
children whose own values are non-increasing.
"""

from __future__ import annotations

import math
import time

import numpy as np

from .errors import ConfigError
from .game import (
    COMPETITIVE,
    BoundValue,
    ExceedsBudget,
    GameInstance,
    player1_moves,
)
from .manipulation import apply
from .report import BoundReport, TerminationRule, TraceEntry


def ucb_weight(parent_n: int, child_r: float, child_n: int, d: float) -> float:
    """Selection weight d*n'/r' + sqrt(2 ln n / n'); infinity forces exploration."""
    if parent_n < 1:
        raise ConfigError("parent visit count must be at least 1")
    if child_n == 0 or child_r == 0.0:
        return math.inf
    return d * child_n / child_r + math.sqrt(2.0 * math.log(parent_n) / child_n)


class _Node:
    __slots__ = (
        "state",
        "feature",
        "locked",
        "parent",
        "children",
        "r",
        "n",
        "best_value",
        "best_witness",
        "terminal",
    )

    def __init__(self, state, feature, locked, parent, terminal):
        self.state = state
        self.feature = feature  # None: player one to move; int: player two inside it
        self.locked = locked  # competitive subtrees stay inside one feature
        self.parent = parent
        self.children = None
        self.r = 0.0
        self.n = 0
        self.best_value: BoundValue | None = None
        self.best_witness = None
        self.terminal = terminal

    @property
    def is_max_node(self) -> bool:
        return self.feature is None and self.locked is None


class MctsSearch:
    """Single game-tree search; deterministic for a fixed seed."""

    def __init__(self, instance: GameInstance, seed: int = 0):
        self.instance = instance
        self.rng = np.random.default_rng(seed)
        self.iterations = 0
        cfg = instance.cfg
        self._competitive = cfg.mode == COMPETITIVE
        self._sim_cap = math.ceil(cfg.radius / cfg.tau) * instance.net.n_dims + 1
        root_state = instance.root()
        self.root = _Node(root_state, None, None, None, instance.is_terminal_state(root_state))

    # -- tree phases --------------------------------------------------------

    def _allowed_features(self, node: _Node) -> list[int]:
        locked = node.locked if self._competitive else None
        return player1_moves(self.instance.cfg, self.instance.partition, locked)

    def _sample_child(self, node: _Node) -> _Node:
        children = node.children
        unvisited = [c for c in children if c.n == 0]
        if unvisited:
            return unvisited[int(self.rng.integers(len(unvisited)))]
        weights = [
            ucb_weight(node.n, c.r, c.n, self.instance.cfg.radius) for c in children
        ]
        best = [i for i, w in enumerate(weights) if math.isinf(w)]
        if best:
            return children[best[int(self.rng.integers(len(best)))]]
        probs = np.asarray(weights)
        probs /= probs.sum()
        return children[int(self.rng.choice(len(children), p=probs))]

    def _expand(self, node: _Node) -> list[_Node]:
        inst = self.instance
        children: list[_Node] = []
        if node.feature is None:
            for fid in self._allowed_features(node):
                if inst.moves_in_feature(node.state, fid):
                    lock = fid if self._competitive else None
                    children.append(_Node(node.state, fid, lock, node, False))
        else:
            for move in inst.moves_in_feature(node.state, node.feature):
                state = apply(node.state, move)
                children.append(
                    _Node(state, None, node.locked, node, inst.is_terminal_state(state))
                )
        node.children = children
        return children

    def _simulate(self, node: _Node):
        """Random play to a terminal state; returns (value, raw_reward, witness)."""
        inst = self.instance
        rng = self.rng
        state = node.state
        pending_feature = node.feature
        locked = node.locked if self._competitive else None
        steps = 0
        while True:
            if pending_feature is None:
                if inst.is_terminal_state(state):
                    dist = inst.distance_from_base(state)
                    value = inst.terminal_value(state)
                    witness = state.values if not isinstance(value, ExceedsBudget) else None
                    return value, dist, witness
                candidates = [
                    fid
                    for fid in player1_moves(inst.cfg, inst.partition, locked)
                    if inst.moves_in_feature(state, fid)
                ]
                if not candidates:
                    # Saturated dead end: nothing reachable, report the budget sentinel.
                    return ExceedsBudget(inst.cfg.radius), inst.distance_from_base(state), None
                pending_feature = candidates[int(rng.integers(len(candidates)))]
            else:
                moves = inst.moves_in_feature(state, pending_feature)
                if steps >= self._sim_cap:
                    # Past the cap, only move away from the base so the play must exit.
                    moves = [m for m in moves if m.sign * state.offsets[m.dim] >= 0]
                if not moves:
                    return ExceedsBudget(inst.cfg.radius), inst.distance_from_base(state), None
                move = moves[int(rng.integers(len(moves)))]
                state = apply(state, move)
                pending_feature = None
                steps += 1

    def _backprop(self, node: _Node, value: BoundValue, reward: float, witness) -> None:
        while node is not None:
            node.r += reward
            node.n += 1
            if self._competitive and node.is_max_node and node.children:
                best_v, best_w = None, None
                for child in node.children:
                    if child.best_value is None:
                        continue
                    if best_v is None or child.best_value > best_v:
                        best_v, best_w = child.best_value, child.best_witness
                if best_v is not None:
                    node.best_value, node.best_witness = best_v, best_w
            elif node.best_value is None or value < node.best_value:
                node.best_value = value
                node.best_witness = witness
            node = node.parent

    def iteration(self) -> tuple[BoundValue, np.ndarray | None]:
        """One selection/expansion/simulation/backpropagation round."""
        node = self.root
        while node.children:
            if node.feature is None and node.terminal:
                break
            node = self._sample_child(node)
        if node.feature is None and node.terminal:
            value = self.instance.terminal_value(node.state)
            witness = node.state.values if not isinstance(value, ExceedsBudget) else None
            self._backprop(node, value, self.instance.distance_from_base(node.state), witness)
        else:
            children = self._expand(node)
            if not children:
                value = ExceedsBudget(self.instance.cfg.radius)
                self._backprop(node, value, self.instance.distance_from_base(node.state), None)
            else:
                for child in children:
                    value, reward, witness = self._simulate(child)
                    self._backprop(child, value, reward, witness)
        self.iterations += 1
        value = self.root.best_value
        if value is None:
            value = ExceedsBudget(self.instance.cfg.radius)
        return value, self.root.best_witness


def mcts_run(net, cfg, partition, base, tc: TerminationRule, seed: int = 0) -> BoundReport:
    """Anytime upper bounds for either game mode; trace is seed-deterministic."""
    instance = GameInstance(net, cfg, partition, base)
    report = BoundReport(problem="FR" if cfg.mode == COMPETITIVE else "MSR")
    degenerate = instance.degenerate_value()
    if degenerate is not None:
        report.upper = degenerate
        report.witness = instance.base_flat.copy()
        report.trace.append(TraceEntry("upper", 0, 0.0, degenerate, report.witness))
        return report
    search = MctsSearch(instance, seed)
    start = time.perf_counter()
    best: BoundValue | None = None
    since_improve = 0
    while True:
        value, witness = search.iteration()
        elapsed = time.perf_counter() - start
        report.trace.append(TraceEntry("upper", search.iterations, elapsed, value, witness))
        if best is None or value < best:
            best, since_improve = value, 0
            report.witness = witness
        else:
            since_improve += 1
        if tc.triggered(search.iterations, elapsed, since_improve):
            break
    report.upper = best
    report.elapsed = time.perf_counter() - start
    return report
