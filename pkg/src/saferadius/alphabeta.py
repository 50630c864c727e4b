"""Lower bounds on feature robustness via two-level max-min search with cutoffs.

Each feature's inner minimization is the cooperative game restricted to the
feature's dimensions, solved exactly by the uniform-cost variant of the
best-first search. A feature is abandoned as soon as it yields an adversary at
or below the running maximum, which cannot change the overall maximum. Under
truncation an unfinished feature contributes its current sound lower bound, so
the running maximum stays a certified lower bound of the game value.
"""

from __future__ import annotations

import time

from .astar import AstarSearch
from .errors import ConfigError, OracleTooLargeError
from .game import COMPETITIVE, BoundValue, ExceedsBudget, GameInstance
from .manipulation import apply
from .report import BoundReport, TerminationRule, TraceEntry


class AlphaBetaSearch:
    """Stepwise feature-by-feature search; features run in partition order."""

    def __init__(self, instance: GameInstance, clock=None):
        if instance.cfg.mode != COMPETITIVE:
            raise ConfigError("alpha-beta search solves the competitive game only")
        self.instance = instance
        self._clock = clock or (lambda: 0.0)
        self.alpha: BoundValue | None = None
        self.alpha_witness = None
        self.trace: list[TraceEntry] = []
        self.feature_rows: list[dict] = []
        self.expansions = 0
        self.done = False
        self.truncated = False
        self._fid = 0
        self._inner: AstarSearch | None = None

    def _open_next_feature(self) -> bool:
        if self._fid >= len(self.instance.partition) or isinstance(self.alpha, ExceedsBudget):
            self.done = True
            return False
        inner = AstarSearch(
            self.instance,
            lip=None,
            allowed_dims=self.instance.partition.features[self._fid],
            clock=self._clock,
        )
        inner.trace.clear()  # per-feature emissions fold into feature rows
        if self.alpha is not None and not isinstance(self.alpha, ExceedsBudget):
            inner.prune_threshold = self.alpha
        self._inner = inner
        return True

    def _finish_feature(self, truncated: bool) -> None:
        inner = self._inner
        if truncated and not inner.done:
            beta: BoundValue = inner.current_lower_bound()
            witness, exact = None, False
        elif inner.pruned:
            beta = inner.best_goal[0]
            witness, exact = inner.best_goal[1], False
        else:
            beta = inner.converged_value
            witness = inner.best_goal[1] if inner.best_goal is not None else None
            exact = True
        if self.alpha is None or beta > self.alpha:
            self.alpha = beta
            self.alpha_witness = witness
        self.trace.append(
            TraceEntry(
                "lower",
                self._fid,
                self._clock(),
                self.alpha,
                witness.values if witness is not None else None,
                detail={"feature_beta": beta, "exact": exact},
            )
        )
        self.feature_rows.append(
            {"feature": self._fid, "beta": beta, "exact": exact, "witness": witness}
        )
        self.expansions += inner.expansions
        self._inner = None
        self._fid += 1

    @property
    def live_expansions(self) -> int:
        return self.expansions + (self._inner.expansions if self._inner else 0)

    def step(self, n_expansions: int = 64) -> bool:
        """Advance the current feature; returns False once every feature is done."""
        if self.done:
            return False
        if self._inner is None and not self._open_next_feature():
            return False
        if not self._inner.step(n_expansions):
            self._finish_feature(truncated=False)
            if self._fid >= len(self.instance.partition):
                self.done = True
        return not self.done

    def truncate(self) -> None:
        """Stop now; an unfinished feature contributes its sound lower bound."""
        if self._inner is not None:
            self._finish_feature(truncated=True)
        self.done = True
        self.truncated = True


def alphabeta_run(
    net,
    cfg,
    partition,
    base,
    tc: TerminationRule,
    step_size: int = 64,
) -> BoundReport:
    """Anytime lower bounds on the competitive game value, one feature at a time."""
    instance = GameInstance(net, cfg, partition, base)
    report = BoundReport(problem="FR")
    degenerate = instance.degenerate_value()
    if degenerate is not None:
        report.lower = report.upper = degenerate
        report.witness = instance.base_flat.copy()
        report.converged = True
        report.trace.append(TraceEntry("lower", 0, 0.0, degenerate, report.witness))
        return report
    start = time.perf_counter()
    search = AlphaBetaSearch(instance, clock=lambda: time.perf_counter() - start)
    while search.step(step_size):
        if tc.triggered(search.live_expansions, time.perf_counter() - start, 0):
            search.truncate()
            break
    return finish_alphabeta_report(report, search, time.perf_counter() - start)


def finish_alphabeta_report(
    report: BoundReport, search: AlphaBetaSearch, elapsed: float
) -> BoundReport:
    report.trace.extend(search.trace)
    report.lower = search.alpha
    report.converged = not search.truncated
    if report.converged:
        report.upper = search.alpha
    if search.alpha_witness is not None:
        report.witness = search.alpha_witness.values
    report.config["feature_rows"] = [
        {
            "feature": r["feature"],
            "beta": r["beta"] if isinstance(r["beta"], float) else f"> {r['beta'].budget:g}",
            "exact": r["exact"],
        }
        for r in search.feature_rows
    ]
    report.elapsed = elapsed
    report.validate()
    return report


def minimax_reference(net, cfg, partition, base, state_budget: int = 200_000) -> BoundValue:
    """Unpruned max-min reference value for the competitive game.

    Exhausts, per feature, every grid state reachable through non-terminal
    states; the feature value is the minimum terminal value (budget sentinel
    when no adversary exists) and the game value is the maximum over features.
    The reward of a play depends only on its final state, so a visited set is
    exact deduplication, not pruning.
    """
    if cfg.mode != COMPETITIVE:
        raise ConfigError("the max-min reference applies to the competitive game")
    instance = GameInstance(net, cfg, partition, base)
    degenerate = instance.degenerate_value()
    if degenerate is not None:
        return degenerate
    best: BoundValue | None = None
    visited_total = 0
    for fid in range(len(partition)):
        feature_value: BoundValue | None = None
        root = instance.root()
        seen = {root.key}
        stack = [root]
        while stack:
            state = stack.pop()
            visited_total += 1
            if visited_total > state_budget:
                raise OracleTooLargeError(
                    f"reference recursion exceeded {state_budget} states"
                )
            if instance.is_terminal_state(state):
                value = instance.terminal_value(state)
                if feature_value is None or value < feature_value:
                    feature_value = value
                continue
            for move in instance.moves_in_feature(state, fid):
                child = apply(state, move)
                if child.key not in seen:
                    seen.add(child.key)
                    stack.append(child)
        if feature_value is None:
            feature_value = ExceedsBudget(cfg.radius)
        if best is None or feature_value > best:
            best = feature_value
    return best if best is not None else ExceedsBudget(cfg.radius)
