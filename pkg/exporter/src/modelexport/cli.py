"""Command line: `modelexport export --in SRC --out PATH` and `oracle --name SPEC --out PATH`."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .catalog import make_oracle_net, oracle_names
from .convert import export
from .errors import UnknownOracleError, UnsupportedLayerError


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modelexport", description="Produce portable model files for the verifier"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    exp = sub.add_parser("export", help="convert a trained classifier")
    exp.add_argument("--in", dest="source", required=True, help="joblib/pickle of a classifier")
    exp.add_argument("--out", required=True, help="portable model file to write")
    orc = sub.add_parser("oracle", help="emit a catalogued test network")
    orc.add_argument("--name", required=True, help=f"one of {', '.join(oracle_names())}")
    orc.add_argument("--out", required=True)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "export":
            import joblib

            source = joblib.load(Path(args.source))
            manifest = export(source, args.out)
        else:
            manifest = make_oracle_net(args.name, args.out)
    except (UnsupportedLayerError, UnknownOracleError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(manifest.to_json(), indent=1, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
