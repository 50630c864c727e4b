#!/usr/bin/env python3
"""Feature robustness of a tiny image classifier under three distance budgets.

A 4x4 single-channel classifier is partitioned into blocks; the competitive
search then ranks the blocks by how much perturbation each one withstands and
the budget verdict is printed for a few values of the budget.
"""

import argparse

import numpy as np

from saferadius import (
    COMPETITIVE,
    Conv2D,
    Dense,
    Flatten,
    GameConfig,
    Network,
    ReLU,
    Softmax,
    TerminationRule,
    block_partition,
    format_bound,
    run_fr,
)
from saferadius.metrics import L1


def tiny_conv_net(seed: int) -> Network:
    rng = np.random.default_rng(seed)
    return Network(
        [
            Conv2D(rng.normal(0, 1.5, size=(2, 2, 1, 3)), rng.normal(0, 0.2, 3)),
            ReLU(),
            Flatten(),
            Dense(rng.normal(0, 1.5, size=(2, 27)), rng.normal(0, 0.2, 2)),
            Softmax(),
        ],
        input_shape=(4, 4, 1),
        num_classes=2,
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=8)
    parser.add_argument("--tau", type=float, default=0.5)
    parser.add_argument("--radius", type=float, default=2.0)
    args = parser.parse_args()

    net = tiny_conv_net(args.seed)
    rng = np.random.default_rng(args.seed + 1)
    base = (rng.integers(5, 12, size=(4, 4, 1)) / 16.0).astype(float)
    partition = block_partition((4, 4, 1), 4)
    cfg = GameConfig(L1, args.radius, args.tau, mode=COMPETITIVE)

    for budget in (None, args.radius * 0.9, args.radius * 0.3):
        report = run_fr(
            net,
            cfg,
            partition,
            base,
            TerminationRule(max_iters=150),
            seed=args.seed,
            budget=budget,
        )
        print(f"budget d' = {budget if budget is not None else '(none)'}")
        for row in report.config["feature_rows"]:
            exact = "" if row["exact"] else " (bound)"
            print(f"  feature {row['feature']}: minimum distance {row['beta']}{exact}")
        print(f"  feature robustness: lower {format_bound(report.lower)}, "
              f"upper {format_bound(report.upper)}")
        if report.verdict is not None:
            print(f"  verdict: {report.verdict.case}")
        print()


if __name__ == "__main__":
    main()
