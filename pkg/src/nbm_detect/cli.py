"""``nbm-detect`` command line.

Failures print one JSON line ``{"error": <category>, "message": ...}`` on
stderr and exit with the category's status (config 2, data 3, model/training 4,
alarm/fault 5, stats/evaluation 6, io 7).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import load_config
from .errors import NbmError

IO_EXIT = 7


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run configuration (defaults used when omitted)")
    common.add_argument("--out", help="output directory (overrides out_dir)")
    common.add_argument("--seed", type=_seed, help="master seed (overrides master_seed)")
    common.add_argument("--jobs", type=int, help="worker threads for grid evaluation")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="nbm-detect", description="Gear-bearing fault detection with "
                                     "single- and multi-target normal-behaviour MLPs.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic SCADA CSV")
    sub.add_parser("train", parents=[common], help="train both presets and write model files")
    sub.add_parser("evaluate", parents=[common], help="run the fault-injection grid and write the report")
    sub.add_parser("report", parents=[common], help="render summary tables from report.json")
    return parser


def _fail(category: str, message: str, code: int) -> int:
    print(json.dumps({"error": category, "message": message}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, seed=args.seed, out_dir=args.out, jobs=args.jobs)
        if args.command == "synth":
            print(pipeline.cmd_synth(cfg))
        elif args.command == "train":
            metrics = pipeline.cmd_train(cfg)
            for kind, m in metrics["models"].items():
                gear = m["held_out_error"]["gear_bearing_temp"]
                print(f"{kind}: gear RMSE {gear['rmse']:.4f}  MAE {gear['mae']:.4f}")
        elif args.command == "evaluate":
            report = pipeline.cmd_evaluate(cfg)
            for key, acc in report.accounting().items():
                print(f"{key}: {acc['detected']}/{acc['cases']} detected")
        elif args.command == "report":
            sys.stdout.write(pipeline.cmd_report(cfg))
    except NbmError as exc:
        return _fail(exc.category, str(exc), exc.exit_code)
    except OSError as exc:
        return _fail("io", str(exc), IO_EXIT)
    return 0


if __name__ == "__main__":
    sys.exit(main())
