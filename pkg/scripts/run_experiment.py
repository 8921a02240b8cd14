"""Run synth -> train -> evaluate -> report for one config and print stage timings.

    python3 scripts/run_experiment.py configs/default.toml --out runs/default
"""

import argparse
import logging
import time

from nbm_detect import pipeline
from nbm_detect.config import load_config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--out")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int)
    ap.add_argument("--skip-train", action="store_true", help="reuse models already in the output directory")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config, seed=args.seed, out_dir=args.out, jobs=args.jobs)
    stages = [("synth", pipeline.cmd_synth)] if cfg.data_source == "synthetic" else []
    if not args.skip_train:
        stages.append(("train", pipeline.cmd_train))
    stages += [("evaluate", pipeline.cmd_evaluate), ("report", pipeline.cmd_report)]
    for name, fn in stages:
        t0 = time.perf_counter()
        result = fn(cfg)
        logging.info("%s done in %.1f s", name, time.perf_counter() - t0)
    print(result, end="")


if __name__ == "__main__":
    main()
