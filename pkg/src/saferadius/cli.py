"""Command-line entry point.

Subcommands: msr, fr, attack, partition, check-grid. Exit codes: 0 completed,
2 input or configuration error, 3 guarantee requested but not certifiable,
4 attack found no adversarial example within its budgets.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .astar import astar_run
from .dataio import load_input, save_witness
from .errors import ConfigError, InputError, NumericError
from .features import block_partition, partition_to_csv, saliency_partition
from .game import COMPETITIVE, COOPERATIVE, ExceedsBudget, GameConfig, format_bound
from .metrics import Metric
from .nn import LipschitzConstants, load_model
from .report import (
    BoundReport,
    TerminationRule,
    dump_json,
    feature_trace_csv,
    lower_trace_csv,
    upper_trace_csv,
)
from .verify import CERTIFIED, check_grid_condition, run_fr, run_msr


def _add_common(p: argparse.ArgumentParser, needs_metric: bool = True) -> None:
    p.add_argument("--model", required=True, help="portable model JSON file")
    p.add_argument("--input", required=True, help="input tensor (.csv, .pgm, .ppm)")
    if needs_metric:
        p.add_argument("--metric", choices=["L1", "L2", "Linf"], default="L2")
        p.add_argument("--radius", type=float, required=True, help="neighborhood radius d")
        p.add_argument("--tau", type=float, required=True, help="manipulation magnitude")
    p.add_argument("--features", type=int, default=10, help="feature count K")
    p.add_argument(
        "--partition", choices=["saliency", "blocks"], default="saliency", dest="partition_method"
    )
    p.add_argument("--mode", default="untargeted", help="'untargeted' or 'targeted:<class>'")
    p.add_argument("--lipschitz", help="JSON file mapping class to Lipschitz constant")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--max-seconds", type=float)
    p.add_argument("--epsilon", type=float, help="stop after ceil(1/eps) stale iterations")
    p.add_argument("--out", help="output directory for report, traces, witnesses")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="saferadius",
        description="Anytime bounds on the maximum safe radius and feature robustness "
        "of small classifiers",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    msr = sub.add_parser("msr", help="converging bounds on the maximum safe radius")
    _add_common(msr)

    fr = sub.add_parser("fr", help="converging bounds on feature robustness")
    _add_common(fr)
    fr.add_argument("--budget", type=float, help="distance budget d' for the verdict")

    attack = sub.add_parser("attack", help="adversarial-example search (no guarantees)")
    _add_common(attack)
    attack.add_argument(
        "--heuristic-factor",
        type=float,
        default=2.0,
        help="inflation of the heuristic; larger chases class changes more greedily",
    )

    part = sub.add_parser("partition", help="dump the feature partition as CSV")
    _add_common(part, needs_metric=False)
    part.add_argument("--tau", type=float, default=0.05, help="probe magnitude for saliency")

    grid = sub.add_parser("check-grid", help="certify the half-cell error bound")
    _add_common(grid)
    grid.add_argument("--sample-budget", type=int, default=4096)
    return parser


def _parse_mode(mode: str) -> int | None:
    if mode == "untargeted":
        return None
    if mode.startswith("targeted:"):
        try:
            return int(mode.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad targeted class in {mode!r}")
    raise ConfigError(f"mode must be 'untargeted' or 'targeted:<class>', got {mode!r}")


def _make_partition(args, net, x):
    if args.partition_method == "blocks":
        shape = x.shape if x.ndim == 3 else net.input_shape
        if len(shape) < 2:
            raise ConfigError("block partition needs an image-shaped input")
        return block_partition(shape, args.features)
    return saliency_partition(net, x, args.features, probe=args.tau)


def _make_tc(args) -> TerminationRule:
    if args.max_iters is None and args.max_seconds is None and args.epsilon is None:
        return TerminationRule(max_iters=200)
    return TerminationRule(args.max_iters, args.max_seconds, args.epsilon)


def _runspec(args) -> dict:
    spec = {k: v for k, v in sorted(vars(args).items()) if k != "out"}
    return spec


def _write_outputs(report: BoundReport, args, out_dir: str | None) -> None:
    if out_dir is None:
        return
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    uppers = [e for e in report.trace if e.kind == "upper"]
    lowers = [e for e in report.trace if e.kind == "lower"]
    witness_paths: dict[int, str] = {}
    written: list[str] = []
    counter = 0
    best = None
    current_path = ""
    for e in uppers:
        if e.witness is not None and not isinstance(e.value, ExceedsBudget):
            if best is None or e.value < best:  # a new witness per improvement
                best = e.value
                counter += 1
                paths = save_witness(
                    _shaped(e.witness, args, report), out / f"witness_{counter:04d}"
                )
                current_path = paths[0]
                written.extend(paths)
            witness_paths[id(e)] = current_path
    traces = {}
    upper_csv = out / "upper_trace.csv"
    upper_csv.write_text(upper_trace_csv(uppers, witness_paths))
    traces["upper"] = str(upper_csv)
    if lowers:
        lower_csv = out / "lower_trace.csv"
        if report.problem == "FR":
            lower_csv.write_text(feature_trace_csv(lowers))
        else:
            lower_csv.write_text(lower_trace_csv(lowers))
        traces["lower"] = str(lower_csv)
    if report.witness is not None:
        written.extend(save_witness(_shaped(report.witness, args, report), out / "best_witness"))
    (out / "report.json").write_text(dump_json(report.to_json(traces, written)))


def _shaped(flat: np.ndarray, args, report) -> np.ndarray:
    shape = report.config.get("input_shape")
    if shape and int(np.prod(shape)) == flat.size:
        return np.asarray(flat).reshape(shape)
    return np.asarray(flat)


def _summary(report: BoundReport) -> str:
    lines = [
        f"problem: {report.problem}",
        f"lower bound: {format_bound(report.lower)}",
        f"upper bound: {format_bound(report.upper)}",
        f"converged: {report.converged}",
        f"certified: {report.certified}"
        + (f" (error bound {report.error_bound:.6g})" if report.error_bound else ""),
    ]
    if report.verdict is not None:
        lines.append(f"verdict: {report.verdict.case}")
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except (InputError, ConfigError, NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    net = load_model(args.model)
    x = load_input(args.input)
    if args.command == "partition":
        partition = _make_partition(args, net, x)
        csv = partition_to_csv(partition)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / "partition.csv").write_text(csv)
        else:
            sys.stdout.write(csv)
        return 0

    metric = Metric.from_name(args.metric)
    lip = LipschitzConstants.from_json_file(args.lipschitz) if args.lipschitz else None
    target = _parse_mode(args.mode)

    if args.command == "check-grid":
        if lip is None:
            raise ConfigError("check-grid needs --lipschitz")
        cfg = GameConfig(metric, args.radius, args.tau, COOPERATIVE, target, lip)
        result = check_grid_condition(net, cfg, x, lip, args.sample_budget, args.seed)
        print(f"grid condition: {result.status} ({result.checked} grid points checked)")
        return 0 if result.status == CERTIFIED else 3

    tc = _make_tc(args)
    partition = _make_partition(args, net, x)

    if args.command == "attack":
        cfg = GameConfig(metric, args.radius, args.tau, COOPERATIVE, target, lip)
        report = astar_run(
            net, cfg, partition, x, tc, inadmissible_factor=args.heuristic_factor, lip=lip
        )
        report.config = {"runspec": _runspec(args), "input_shape": list(x.shape)}
        _write_outputs(report, args, args.out)
        if report.upper is None:
            print("no adversarial example found within the budgets")
            return 4
        print(f"adversarial example at {args.metric} distance {format_bound(report.upper)}")
        if args.out is None:
            paths = save_witness(_shaped(report.witness, args, report), Path("witness"))
            print("witness written to " + ", ".join(paths))
        return 0

    if args.command == "msr":
        cfg = GameConfig(metric, args.radius, args.tau, COOPERATIVE, target, lip)
        report = run_msr(net, cfg, partition, x, tc, seed=args.seed)
    else:
        cfg = GameConfig(metric, args.radius, args.tau, COMPETITIVE, target, lip)
        report = run_fr(net, cfg, partition, x, tc, seed=args.seed, budget=args.budget)
    report.config = {
        "runspec": _runspec(args),
        "input_shape": list(x.shape),
        "feature_rows": report.config.get("feature_rows", []),
    }
    _write_outputs(report, args, args.out)
    print(_summary(report))
    return 0


if __name__ == "__main__":
    sys.exit(main())
