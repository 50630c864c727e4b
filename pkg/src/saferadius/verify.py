"""Orchestration: grid-condition certification and combined bound runs.

run_msr interleaves the sampling search (upper bounds) with the best-first
search (lower bounds); run_fr pairs it with the feature max-min search. Both
attach the half-cell error bound to the report when the grid condition
certifies, and otherwise present the grid bounds without the continuum claim.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .alphabeta import AlphaBetaSearch, finish_alphabeta_report
from .astar import AstarSearch
from .errors import ConfigError
from .features import FeaturePartition
from .game import (
    COMPETITIVE,
    COOPERATIVE,
    BoundValue,
    ExceedsBudget,
    GameConfig,
    GameInstance,
)
from .mcts import MctsSearch
from .metrics import grid_cell_radius, in_neighborhood
from .nn import LipschitzConstants, Network, forward_batch, lipschitz_violation
from .report import BoundReport, TerminationRule, TraceEntry, Verdict

CERTIFIED = "certified"
VIOLATED = "violated"
EXHAUSTED = "exhausted"


@dataclass
class GridCheckResult:
    status: str  # certified | violated | exhausted
    witness: np.ndarray | None
    checked: int


def _single_feature_partition(n_dims: int) -> FeaturePartition:
    return FeaturePartition((tuple(range(n_dims)),), "blocks")


def _offset_ranges(base_flat: np.ndarray, tau: float, radius: float):
    """Per-dimension canonical offset ranges with distinct reconstructed values."""
    steps = math.ceil(radius / tau) + 1
    ranges = []
    for v in base_flat:
        lo = -min(math.ceil(v / tau), steps)
        hi = min(math.ceil((1.0 - v) / tau), steps)
        ranges.append(range(lo, hi + 1))
    return ranges


def iter_grid_points(base_flat: np.ndarray, cfg: GameConfig):
    """All in-budget grid values around the base, as (offsets, values) pairs."""
    base = np.asarray(base_flat, dtype=np.float64).ravel()
    for combo in itertools.product(*_offset_ranges(base, cfg.tau, cfg.radius)):
        offsets = np.asarray(combo, dtype=np.int64)
        values = np.clip(base + offsets * cfg.tau, 0.0, 1.0)
        if in_neighborhood(cfg.metric, base, values, cfg.radius):
            yield offsets, values


def _first_condition_violation(
    net: Network,
    lip: LipschitzConstants,
    cell_diameter: float,
    points: np.ndarray,
) -> int | None:
    """Index of the first point whose margin is too small for the cell size."""
    probs = forward_batch(net, points)
    classes = np.argmax(probs, axis=1)
    order = np.sort(probs, axis=1)
    margins = order[:, -1] - order[:, -2]
    pair_sums = np.asarray(
        [lip.max_pair_sum(c, net.num_classes) for c in range(net.num_classes)]
    )
    allowed = 2.0 * margins / pair_sums[classes]
    bad = np.nonzero(cell_diameter > allowed + 1e-12)[0]
    return int(bad[0]) if bad.size else None


def check_grid_condition(
    net: Network,
    cfg: GameConfig,
    base: np.ndarray,
    lip: LipschitzConstants,
    sample_budget: int,
    seed: int = 0,
) -> GridCheckResult:
    """Certify the half-cell error bound by checking every grid point's margin.

    Exhaustive while the grid fits in the sample budget; otherwise checks a
    uniform sample, which can only report a violation or "exhausted".
    """
    if lip is None:
        raise ConfigError("grid certification needs Lipschitz constants")
    lip.require_classes(net.num_classes)
    base_flat = np.asarray(base, dtype=np.float64).ravel()
    diameter = grid_cell_radius(cfg.metric, net.n_dims, cfg.tau)
    collected = []
    exhaustive = True
    for i, (offsets, values) in enumerate(iter_grid_points(base_flat, cfg)):
        if i >= sample_budget:
            exhaustive = False
            break
        if not offsets.any():
            collected.insert(0, values)  # check the base point first
        else:
            collected.append(values)
    if exhaustive:
        if not collected:
            return GridCheckResult(CERTIFIED, None, 0)
        points = np.stack(collected)
        bad = _first_condition_violation(net, lip, diameter, points)
        if bad is None:
            return GridCheckResult(CERTIFIED, None, len(points))
        return GridCheckResult(VIOLATED, points[bad], len(points))
    if sample_budget <= 0:
        return GridCheckResult(EXHAUSTED, None, 0)
    rng = np.random.default_rng(seed)
    ranges = _offset_ranges(base_flat, cfg.tau, cfg.radius)
    lows = np.asarray([r.start for r in ranges])
    highs = np.asarray([r.stop for r in ranges])
    samples = []
    attempts = 0
    while len(samples) < sample_budget and attempts < 50 * sample_budget:
        attempts += 1
        offsets = rng.integers(lows, highs)
        values = np.clip(base_flat + offsets * cfg.tau, 0.0, 1.0)
        if in_neighborhood(cfg.metric, base_flat, values, cfg.radius):
            samples.append(values)
    if not samples:
        return GridCheckResult(EXHAUSTED, None, 0)
    points = np.stack(samples)
    bad = _first_condition_violation(net, lip, diameter, points)
    if bad is None:
        return GridCheckResult(EXHAUSTED, None, len(points))
    return GridCheckResult(VIOLATED, points[bad], len(points))


def _sanity_check_constants(instance: GameInstance, lip: LipschitzConstants, seed: int):
    violation = lipschitz_violation(
        instance.net,
        instance.cfg.metric,
        lip,
        instance.base_flat,
        instance.cfg.radius,
        n_pairs=64,
        rng=np.random.default_rng(seed ^ 0x5EED),
    )
    if violation is not None:
        _, _, cls, observed, allowed = violation
        raise ConfigError(
            f"Lipschitz constants too small: class {cls} confidence moved {observed:.3g} "
            f"where at most {allowed:.3g} is allowed"
        )


def _degenerate_report(problem: str, instance: GameInstance) -> BoundReport:
    report = BoundReport(problem=problem)
    report.lower = report.upper = 0.0
    report.witness = instance.base_flat.copy()
    report.converged = True
    report.trace.append(TraceEntry("lower", 0, 0.0, 0.0, report.witness))
    report.trace.append(TraceEntry("upper", 0, 0.0, 0.0, report.witness))
    return report


def _certify(report: BoundReport, net, cfg, base, seed, sample_budget) -> None:
    lip = cfg.lipschitz
    if lip is None:
        report.notes.append("no Lipschitz constants: no grid certification")
        return
    grid = check_grid_condition(net, cfg, base, lip, sample_budget, seed)
    report.certified = grid.status
    if grid.status == CERTIFIED:
        report.error_bound = 0.5 * grid_cell_radius(cfg.metric, net.n_dims, cfg.tau)
    else:
        report.notes.append("grid condition not certified; bounds hold on the grid only")


def run_msr(
    net: Network,
    cfg: GameConfig,
    partition: FeaturePartition,
    base: np.ndarray,
    tc: TerminationRule,
    seed: int = 0,
    grid_sample_budget: int = 4096,
    slice_expansions: int = 64,
) -> BoundReport:
    """Interleaved upper/lower bound computation for the cooperative game."""
    if cfg.mode != COOPERATIVE:
        raise ConfigError("run_msr needs a cooperative configuration")
    instance = GameInstance(net, cfg, partition, base)
    if instance.degenerate_value() is not None:
        return _degenerate_report("MSR", instance)
    lip = cfg.lipschitz
    report = BoundReport(problem="MSR")
    if lip is not None:
        _sanity_check_constants(instance, lip, seed)
    _certify(report, net, cfg, base, seed, grid_sample_budget)
    if lip is None:
        report.notes.append("lower-bound search disabled without Lipschitz constants")
    start = time.perf_counter()
    clock = lambda: time.perf_counter() - start  # noqa: E731
    mcts = MctsSearch(instance, seed)
    astar = AstarSearch(instance, lip=lip, clock=clock) if lip is not None else None
    best_upper: BoundValue | None = None
    since_improve = 0
    while True:
        if astar is not None and not astar.done:
            astar.step(slice_expansions)
        value, witness = mcts.iteration()
        report.trace.append(TraceEntry("upper", mcts.iterations, clock(), value, witness))
        if best_upper is None or value < best_upper:
            best_upper, since_improve = value, 0
            report.witness = witness
        else:
            since_improve += 1
        if astar is not None and astar.done:
            break
        if tc.triggered(mcts.iterations, clock(), since_improve):
            break
    if astar is not None:
        report.trace.extend(astar.trace)
        if astar.converged_value is not None:
            report.converged = True
            report.lower = report.upper = astar.converged_value
            if astar.best_goal is not None and not isinstance(
                astar.converged_value, ExceedsBudget
            ):
                report.witness = astar.best_goal[1].values
        else:
            report.lower = astar.current_lower_bound()
            report.upper = best_upper
    else:
        report.upper = best_upper
    report.elapsed = clock()
    report.validate()
    return report


def run_fr(
    net: Network,
    cfg: GameConfig,
    partition: FeaturePartition,
    base: np.ndarray,
    tc: TerminationRule,
    seed: int = 0,
    budget: float | None = None,
    grid_sample_budget: int = 4096,
    slice_expansions: int = 64,
) -> BoundReport:
    """Feature-robustness bounds plus the budget verdict when one is supplied."""
    if cfg.mode != COMPETITIVE:
        raise ConfigError("run_fr needs a competitive configuration")
    instance = GameInstance(net, cfg, partition, base)
    if instance.degenerate_value() is not None:
        report = _degenerate_report("FR", instance)
        report.verdict = Verdict("all_features_fragile", 0.0, 0.0, False, budget)
        return report
    report = BoundReport(problem="FR")
    if cfg.lipschitz is not None:
        _sanity_check_constants(instance, cfg.lipschitz, seed)
    _certify(report, net, cfg, base, seed, grid_sample_budget)
    start = time.perf_counter()
    clock = lambda: time.perf_counter() - start  # noqa: E731
    mcts = MctsSearch(instance, seed)
    ab = AlphaBetaSearch(instance, clock=clock)
    best_upper: BoundValue | None = None
    since_improve = 0
    while True:
        if not ab.done:
            ab.step(slice_expansions)
        value, witness = mcts.iteration()
        report.trace.append(TraceEntry("upper", mcts.iterations, clock(), value, witness))
        if best_upper is None or value < best_upper:
            best_upper, since_improve = value, 0
            report.witness = witness
        else:
            since_improve += 1
        if ab.done:
            break
        if tc.triggered(mcts.iterations, clock(), since_improve):
            if not ab.done:
                ab.truncate()
            break
    lower_report = finish_alphabeta_report(BoundReport(problem="FR"), ab, clock())
    report.trace.extend(lower_report.trace)
    report.lower = lower_report.lower
    report.converged = lower_report.converged
    if report.converged and lower_report.upper is not None:
        report.upper = lower_report.upper
        if lower_report.witness is not None:
            report.witness = lower_report.witness
    else:
        report.upper = best_upper
    report.config["feature_rows"] = lower_report.config.get("feature_rows", [])
    report.verdict = _budget_verdict(cfg, ab, report.upper, budget)
    report.elapsed = clock()
    report.validate()
    return report


def _budget_verdict(
    cfg: GameConfig,
    search: AlphaBetaSearch,
    upper: BoundValue | None,
    budget: float | None,
) -> Verdict:
    """Three-way budget analysis, phrased only in terms of certified bounds."""
    fr_lower = search.alpha
    exact_betas = [
        row["beta"]
        for row in search.feature_rows
        if row["exact"] and isinstance(row["beta"], float)
    ]
    # Any single feature's adversary is also a whole-input adversary.
    msr_upper = min(exact_betas) if exact_betas else None
    if isinstance(fr_lower, ExceedsBudget):
        case = "exceeds_budget"
    elif budget is None:
        case = "undetermined"
    elif (
        upper is not None
        and not isinstance(upper, ExceedsBudget)
        and upper <= budget <= cfg.radius
    ):
        case = "all_features_fragile"
    elif (
        fr_lower is not None
        and budget < fr_lower
        and msr_upper is not None
        and msr_upper <= budget
    ):
        case = "controllable"
    else:
        case = "undetermined"
    controllable = None
    if budget is not None:
        controllable = (
            msr_upper is not None
            and msr_upper <= budget
            and fr_lower is not None
            and (isinstance(fr_lower, ExceedsBudget) or budget < fr_lower)
        )
    return Verdict(
        case=case,
        safe_radius_certified=fr_lower,
        nearest_adversarial_distance=upper,
        controllable=controllable,
        budget=budget,
    )
