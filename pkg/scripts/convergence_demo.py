#!/usr/bin/env python3
"""Converging upper/lower bounds on the maximum safe radius of a demo classifier.

Builds a small seeded dense classifier over an 8-dimensional input, derives
sound Lipschitz constants for it, and prints the interleaved bound trace until
the searches meet. Pass --out to keep the report, traces, and witnesses.
"""

import argparse

import numpy as np

from saferadius import (
    Dense,
    GameConfig,
    LipschitzConstants,
    Network,
    ReLU,
    Softmax,
    TerminationRule,
    format_bound,
    run_msr,
    saliency_partition,
)


def demo_network(seed: int) -> Network:
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0.0, 1.1, size=(6, 8))
    w2 = rng.normal(0.0, 1.1, size=(2, 6))
    return Network(
        [Dense(w1, rng.normal(0, 0.2, 6)), ReLU(), Dense(w2, rng.normal(0, 0.2, 2)), Softmax()],
        input_shape=(8,),
        num_classes=2,
    )


def sound_constants(net: Network) -> LipschitzConstants:
    # Dense chains: softmax gradient 1-norm (<= 1/2) times the layer spectral norms.
    bound = 0.5
    for layer in net.layers:
        if isinstance(layer, Dense):
            bound *= float(np.linalg.svd(layer.weights, compute_uv=False)[0])
    return LipschitzConstants({c: bound for c in range(net.num_classes)})


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--tau", type=float, default=0.25)
    parser.add_argument("--radius", type=float, default=0.45)
    parser.add_argument("--max-iters", type=int, default=400)
    args = parser.parse_args()

    net = demo_network(args.seed)
    rng = np.random.default_rng(args.seed + 1)
    base = rng.integers(5, 12, size=8) / 16.0
    from saferadius.metrics import L2

    cfg = GameConfig(L2, args.radius, args.tau, lipschitz=sound_constants(net))
    partition = saliency_partition(net, base, feature_count=4, probe=args.tau)
    report = run_msr(
        net, cfg, partition, base, TerminationRule(max_iters=args.max_iters), seed=args.seed
    )

    print("trace (kind, step, value):")
    for e in report.trace:
        print(f"  {e.kind:>5}  {e.index:>4}  {format_bound(e.value)}")
    print(f"\nlower bound: {format_bound(report.lower)}")
    print(f"upper bound: {format_bound(report.upper)}")
    print(f"converged:   {report.converged}")
    print(f"certified:   {report.certified}", end="")
    if report.error_bound:
        print(f" (continuum error bound {report.error_bound:.6g})", end="")
    print()
    if report.witness is not None:
        print(f"nearest adversarial input: {np.round(report.witness, 4).tolist()}")


if __name__ == "__main__":
    main()
