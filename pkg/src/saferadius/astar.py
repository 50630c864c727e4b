"""Best-first search over canonical grid states for the cooperative game.

With an admissible heuristic the search emits anytime lower bounds and, on
convergence, the exact grid optimum. Ordering follows the classic estimate
(distance so far plus heuristic); convergence is decided against a separate
per-metric floor, because for L2 and Linf the plain sum of a path distance and
a heuristic does not bound the distance of goals below a frontier state. A
state is admitted once, keyed by its canonical offsets: the distance from the
base depends only on the offsets, so re-expansion can never improve anything.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time

import numpy as np

from .errors import ConfigError
from .game import COOPERATIVE, BoundValue, ExceedsBudget, GameInstance
from .manipulation import AtomicManipulation, ManipulationState, apply
from .metrics import distance as metric_distance
from .nn import LipschitzConstants, classify, confidence_margin
from .report import BoundReport, TerminationRule, TraceEntry

_GATE_SLACK = 1e-12


def admissible_heuristic(net, x: np.ndarray, lip: LipschitzConstants) -> float:
    """Margin over summed rate bounds: a floor on the distance to a class change."""
    if lip is None:
        raise ConfigError("the admissible heuristic needs Lipschitz constants")
    cls = classify(net, x)
    margin = confidence_margin(net, x, cls)
    if margin <= 0.0:
        return 0.0
    return margin / lip.max_pair_sum(cls, net.num_classes)


def estimate(m, base: np.ndarray, x: np.ndarray, h: float) -> float:
    """Search ordering key: distance travelled so far plus heuristic."""
    return metric_distance(m, base, x) + h


class AstarSearch:
    """Stepwise best-first search; shared by the verifier and the alpha-beta inner loop.

    heuristic_factor of exactly 1 runs in admissible mode (sound lower bounds,
    exact convergence); any larger factor turns the search into an
    adversarial-example hunt whose results are upper bounds only.
    """

    def __init__(
        self,
        instance: GameInstance,
        lip: LipschitzConstants | None = None,
        heuristic_factor: float = 1.0,
        allowed_dims=None,
        collect_expanded: bool = False,
        clock=None,
    ):
        if heuristic_factor < 1.0:
            raise ConfigError("heuristic factor must be at least 1")
        self.instance = instance
        self.lip = lip
        self.factor = float(heuristic_factor)
        self.admissible = heuristic_factor == 1.0
        if lip is not None:
            lip.require_classes(instance.net.num_classes)
        allowed = None if allowed_dims is None else set(allowed_dims)
        self._feature_dims = []
        for dims in instance.partition.features:
            kept = tuple(d for d in dims if allowed is None or d in allowed)
            if kept:
                self._feature_dims.append(kept)
        self._counter = itertools.count()
        self._main: list = []  # (ordering estimate, tiebreak, state)
        self._dist_heap: list = []  # (distance, tiebreak, key)
        self._floor_heap: list = []  # (per-metric floor, tiebreak, key)
        self._seen: set[bytes] = set()
        self._expanded: set[bytes] = set()
        self._pending: dict[int, int] = {}
        self._phase = 1
        self.best_goal: tuple[float, ManipulationState] | None = None
        self.expansions = 0
        self.done = False
        self.pruned = False
        self.converged_value: BoundValue | None = None
        self.trace: list[TraceEntry] = []
        self.expanded_states: list[ManipulationState] | None = (
            [] if collect_expanded else None
        )
        self.prune_threshold: float | None = None
        self._clock = clock or (lambda: 0.0)
        self._push(instance.root())
        if self.admissible:
            self.trace.append(TraceEntry("lower", 0, self._clock(), 0.0))

    # -- frontier bookkeeping -------------------------------------------------

    def _heuristic(self, state: ManipulationState) -> float:
        if self.lip is None:
            return 0.0
        cls, margin = self.instance.class_and_margin(state)
        if cls != self.instance.base_class or margin <= 0.0:
            return 0.0
        return margin / self.lip.max_pair_sum(cls, self.instance.net.num_classes)

    def _floor(self, dist: float, h: float) -> float:
        k = self.instance.cfg.metric.k
        if k == 1.0:
            return dist + h
        if k == 2.0:
            return math.hypot(dist, h)
        return max(dist, h)

    def _push(self, state: ManipulationState) -> None:
        self._seen.add(state.key)
        dist = self.instance.distance_from_base(state)
        h = self._heuristic(state)
        tie = next(self._counter)
        heapq.heappush(self._main, (dist + self.factor * h, tie, state))
        heapq.heappush(self._dist_heap, (dist, tie, state.key))
        if self.admissible:
            heapq.heappush(self._floor_heap, (self._floor(dist, h), tie, state.key))
        self._pending[state.depth] = self._pending.get(state.depth, 0) + 1

    def _peek(self, heap) -> float | None:
        while heap and heap[0][2] in self._expanded:
            heapq.heappop(heap)
        return heap[0][0] if heap else None

    def frontier_min_distance(self) -> float | None:
        return self._peek(self._dist_heap)

    def frontier_min_floor(self) -> float | None:
        return self._peek(self._floor_heap)

    def current_lower_bound(self) -> float:
        """Sound at any time: no grid adversary sits below this value."""
        candidates = []
        fmin = self.frontier_min_distance()
        if fmin is not None:
            candidates.append(fmin)
        if self.best_goal is not None:
            candidates.append(self.best_goal[0])
        return min(candidates) if candidates else 0.0

    # -- search ----------------------------------------------------------------

    def _record_goal(self, dist: float, state: ManipulationState) -> None:
        if self.best_goal is None or dist < self.best_goal[0]:
            self.best_goal = (dist, state)
            if not self.admissible:
                self.trace.append(
                    TraceEntry("upper", self.expansions, self._clock(), dist, state.values)
                )

    def _converge(self, value: BoundValue, witness: ManipulationState | None) -> None:
        self.converged_value = value
        self.done = True
        if self.admissible:
            self.trace.append(
                TraceEntry(
                    "lower",
                    self._phase,
                    self._clock(),
                    value,
                    witness.values if witness is not None else None,
                    converged=True,
                )
            )

    def _close_phases(self) -> None:
        if not self.admissible:
            return
        while True:
            if any(c > 0 and d <= self._phase for d, c in self._pending.items()):
                return
            if not any(c > 0 for c in self._pending.values()):
                return  # frontier ran dry; the exhaustion path emits instead
            self.trace.append(
                TraceEntry("lower", self._phase, self._clock(), self.current_lower_bound())
            )
            self._phase += 1

    def step(self, n_expansions: int = 1) -> bool:
        """Expand up to n states; returns False once the search is finished."""
        inst = self.instance
        for _ in range(n_expansions):
            if self.done:
                return False
            state = None
            while self._main:
                _, _, candidate = heapq.heappop(self._main)
                if candidate.key not in self._expanded:
                    state = candidate
                    break
            if state is None:
                if self.best_goal is not None:
                    self._converge(self.best_goal[0], self.best_goal[1])
                else:
                    self._converge(ExceedsBudget(inst.cfg.radius), None)
                return False
            self._expanded.add(state.key)
            self._pending[state.depth] -= 1
            self.expansions += 1
            if self.expanded_states is not None:
                self.expanded_states.append(state)
            for dims in self._feature_dims:
                for dim in dims:
                    value_before = state.values[dim]
                    for sign in (1, -1):
                        child = apply(state, AtomicManipulation(dim, sign))
                        if child.values[dim] == value_before:
                            continue  # clamped no-op
                        if child.key in self._seen:
                            continue
                        dist = inst.distance_from_base(child)
                        if not inst.in_budget(child):
                            continue  # terminal by budget; contributes no goal
                        if inst.is_adversarial_state(child):
                            self._seen.add(child.key)
                            self._record_goal(dist, child)
                        else:
                            self._push(child)
            if self.best_goal is not None:
                goal_dist = self.best_goal[0]
                if self.prune_threshold is not None and goal_dist <= self.prune_threshold:
                    self.pruned = True
                    self.done = True
                    return False
                if self.admissible:
                    floor = self.frontier_min_floor()
                    if floor is None or goal_dist <= floor + _GATE_SLACK:
                        self._converge(goal_dist, self.best_goal[1])
                        return False
            self._close_phases()
        return not self.done


def astar_run(
    net,
    cfg,
    partition,
    base,
    tc: TerminationRule,
    inadmissible_factor: float = 1.0,
    lip: LipschitzConstants | None = None,
    step_size: int = 64,
) -> BoundReport:
    """Lower bounds (admissible mode) or adversarial search (factor > 1)."""
    if cfg.mode != COOPERATIVE:
        raise ConfigError("best-first search solves the cooperative game only")
    constants = lip if lip is not None else cfg.lipschitz
    admissible = inadmissible_factor == 1.0
    if admissible and constants is None:
        raise ConfigError("admissible mode needs Lipschitz constants")
    instance = GameInstance(net, cfg, partition, base)
    report = BoundReport(problem="MSR" if admissible else "ATTACK")
    degenerate = instance.degenerate_value()
    if degenerate is not None:
        report.lower = report.upper = degenerate
        report.witness = instance.base_flat.copy()
        report.converged = True
        report.trace.append(
            TraceEntry("lower" if admissible else "upper", 0, 0.0, degenerate, report.witness)
        )
        return report
    start = time.perf_counter()
    search = AstarSearch(
        instance,
        lip=constants,
        heuristic_factor=inadmissible_factor,
        clock=lambda: time.perf_counter() - start,
    )
    emitted = len(search.trace)
    since_improve = 0
    while search.step(step_size):
        elapsed = time.perf_counter() - start
        if len(search.trace) > emitted:
            emitted = len(search.trace)
            since_improve = 0
        else:
            since_improve += step_size
        if tc.triggered(search.expansions, elapsed, since_improve):
            break
    report.trace = search.trace
    report.elapsed = time.perf_counter() - start
    if admissible:
        if search.converged_value is not None:
            report.converged = True
            report.lower = report.upper = search.converged_value
            if search.best_goal is not None and not isinstance(
                search.converged_value, ExceedsBudget
            ):
                report.witness = search.best_goal[1].values
        else:
            report.lower = search.current_lower_bound()
    elif search.best_goal is not None:
        report.upper = search.best_goal[0]
        report.witness = search.best_goal[1].values
    return report
