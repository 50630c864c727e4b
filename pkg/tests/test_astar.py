import math

import numpy as np
import pytest

from bruteforce import brute_fmsr, misclassified_grid_values, nearest_distance
from conftest import dyadic_base, halves_partition, random_dense_net
from lipbounds import certified_constants
from saferadius.astar import AstarSearch, admissible_heuristic, astar_run, estimate
from saferadius.errors import ConfigError
from saferadius.game import COMPETITIVE, ExceedsBudget, GameConfig, GameInstance
from saferadius.metrics import L1, L2, LINF, distance
from saferadius.nn import LipschitzConstants
from saferadius.report import TerminationRule

UNBOUNDED = TerminationRule(max_iters=10_000_000)


def _instances(count, metrics=(LINF, L1, L2)):
    """Small seeded problems whose grids the oracle can enumerate."""
    out = []
    for i in range(count):
        rng = np.random.default_rng(5000 + i)
        n = int(rng.integers(3, 6))
        net = random_dense_net(rng, n, 2 + (i % 2), hidden=4 if i % 3 == 0 else None)
        base = dyadic_base(rng, n)
        metric = metrics[i % len(metrics)]
        tau = 0.25 if i % 2 else 0.5
        radius = {1.0: 2.2 * tau, 2.0: 1.6 * tau, math.inf: 2.0 * tau}[metric.k]
        cfg = GameConfig(metric, radius, tau, lipschitz=certified_constants(net, metric.k))
        out.append((net, cfg, halves_partition(n), base))
    return out


def test_admissible_heuristic_examples():
    from conftest import bias_net

    net = bias_net([0.75, 0.25])  # margin 0.5 everywhere
    lip = LipschitzConstants({0: 1.0, 1: 1.0})
    x = np.array([0.5])
    assert admissible_heuristic(net, x, lip) == pytest.approx(0.25)
    looser = LipschitzConstants({0: 10.0, 1: 10.0})
    assert admissible_heuristic(net, x, looser) == pytest.approx(0.025)
    tie = bias_net([0.5, 0.5])  # zero margin: heuristic floors at 0
    assert admissible_heuristic(tie, x, lip) == 0.0
    with pytest.raises(ConfigError):
        admissible_heuristic(net, x, None)


def test_estimate_is_distance_plus_heuristic():
    base = np.zeros(2)
    x = np.array([0.3, 0.0])
    assert estimate(L2, base, base, 0.1) == pytest.approx(0.1)
    assert estimate(L2, base, x, 0.25) == pytest.approx(0.55)
    assert estimate(L2, base, x, 0.0) == pytest.approx(0.3)


@pytest.mark.parametrize("idx", range(10))
def test_convergence_matches_brute_force(idx):
    net, cfg, part, base = _instances(10)[idx]
    expected = brute_fmsr(net, base, cfg.tau, cfg.metric, cfg.radius)
    report = astar_run(net, cfg, part, base, UNBOUNDED)
    assert report.converged
    if isinstance(expected, ExceedsBudget):
        assert report.lower == expected
    else:
        assert report.lower == pytest.approx(expected, abs=1e-9)
        assert report.witness is not None
        assert distance(cfg.metric, base, report.witness) == pytest.approx(
            expected, abs=1e-9
        )


@pytest.mark.parametrize("idx", range(6))
def test_lower_trace_monotone_and_sound(idx):
    net, cfg, part, base = _instances(6)[idx]
    expected = brute_fmsr(net, base, cfg.tau, cfg.metric, cfg.radius)
    report = astar_run(net, cfg, part, base, UNBOUNDED)
    values = [e.value for e in report.trace if e.kind == "lower"]
    for prev, cur in zip(values, values[1:]):
        if isinstance(cur, ExceedsBudget):
            continue
        assert prev <= cur + 1e-12
    for v in values:
        if isinstance(v, float) and isinstance(expected, float):
            assert v <= expected + 1e-12


def test_truncated_run_reports_sound_lower_bound():
    net, cfg, part, base = _instances(4)[3]
    expected = brute_fmsr(net, base, cfg.tau, cfg.metric, cfg.radius)
    report = astar_run(net, cfg, part, base, TerminationRule(max_iters=3), step_size=1)
    assert not report.converged or report.lower == expected
    if isinstance(report.lower, float) and isinstance(expected, float):
        assert report.lower <= expected + 1e-12


def test_looser_constants_same_value_more_work():
    net, cfg, part, base = _instances(3)[0]
    lip = cfg.lipschitz
    loose = LipschitzConstants({c: 100.0 * h for c, h in lip.per_class.items()})
    inst = GameInstance(net, cfg, part, base)
    tight_search = AstarSearch(inst, lip=lip)
    while tight_search.step(32):
        pass
    inst2 = GameInstance(net, cfg, part, base)
    loose_search = AstarSearch(inst2, lip=loose)
    while loose_search.step(32):
        pass
    assert loose_search.converged_value == tight_search.converged_value or (
        isinstance(loose_search.converged_value, float)
        and abs(loose_search.converged_value - tight_search.converged_value) <= 1e-9
    )
    assert loose_search.expansions >= tight_search.expansions


def test_heuristic_admissible_on_expanded_states():
    net, cfg, part, base = _instances(5)[1]
    inst = GameInstance(net, cfg, part, base)
    search = AstarSearch(inst, lip=cfg.lipschitz, collect_expanded=True)
    while search.step(64):
        pass
    wrong = misclassified_grid_values(net, base, cfg.tau, cfg.metric, cfg.radius)
    checked = 0
    for state in search.expanded_states:
        h = search._heuristic(state)
        nearest = nearest_distance(cfg.metric, state.values, wrong)
        if nearest is not None:
            assert h <= nearest + 1e-12
            checked += 1
    assert checked > 0


def test_mode_and_config_errors():
    net, cfg, part, base = _instances(1)[0]
    comp = GameConfig(cfg.metric, cfg.radius, cfg.tau, mode=COMPETITIVE)
    with pytest.raises(ConfigError):
        astar_run(net, comp, part, base, UNBOUNDED)
    plain = GameConfig(cfg.metric, cfg.radius, cfg.tau)
    with pytest.raises(ConfigError):
        astar_run(net, plain, part, base, UNBOUNDED)  # admissible without constants


def test_attack_mode_finds_witness():
    net, cfg, part, base = _instances(2)[0]
    expected = brute_fmsr(net, base, cfg.tau, cfg.metric, cfg.radius)
    report = astar_run(net, cfg, part, base, UNBOUNDED, inadmissible_factor=2.0)
    if isinstance(expected, ExceedsBudget):
        assert report.upper is None
    else:
        assert report.upper is not None
        assert report.upper >= expected - 1e-12
        assert report.witness is not None
        uppers = [e.value for e in report.trace if e.kind == "upper"]
        assert all(b <= a + 1e-12 for a, b in zip(uppers, uppers[1:]))


def test_degenerate_targeted_base():
    net, cfg, part, base = _instances(1)[0]
    from saferadius.nn import classify

    cls = classify(net, base)
    cfg2 = GameConfig(cfg.metric, cfg.radius, cfg.tau, target_class=cls, lipschitz=cfg.lipschitz)
    report = astar_run(net, cfg2, part, base, UNBOUNDED)
    assert report.lower == report.upper == 0.0
    assert report.converged


@pytest.mark.parametrize("seed", range(5))
def test_targeted_convergence_matches_brute_force(seed):
    from saferadius.nn import classify

    rng = np.random.default_rng(40_000 + seed)
    net = random_dense_net(rng, 4, 3, scale=1.8)
    base = dyadic_base(rng, 4)
    metric = (LINF, L1, L2)[seed % 3]
    tau = 0.25
    radius = 0.5 if metric.k != 1.0 else 0.6
    target = (classify(net, base) + 1 + seed % 2) % 3
    cfg = GameConfig(
        metric, radius, tau, target_class=target, lipschitz=certified_constants(net, metric.k)
    )
    expected = brute_fmsr(net, base, tau, metric, radius, target_class=target)
    report = astar_run(net, cfg, halves_partition(4), base, UNBOUNDED)
    assert report.converged
    if isinstance(expected, ExceedsBudget):
        assert report.lower == expected
    else:
        assert report.lower == pytest.approx(expected, abs=1e-9)
        assert classify(net, report.witness) == target
