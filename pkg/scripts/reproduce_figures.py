"""Run every preset sweep and write one CSV plus metadata sidecar per preset.

    python3 scripts/reproduce_figures.py --out results --trials 10000
    python3 scripts/reproduce_figures.py --presets sweep_d,sweep_K --full-fidelity
"""
from __future__ import annotations

import argparse
import sys
import time

from hybrid_ebf.cli import main as hebf_main
from hybrid_ebf.experiments import FULL_TRIALS, PRESET_NAMES


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int, default=None, help="Monte Carlo trials per sweep value")
    ap.add_argument("--full-fidelity", action="store_true", help=f"use {FULL_TRIALS} trials")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--presets", default=",".join(PRESET_NAMES), help="comma-separated preset names")
    return ap.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    trials = FULL_TRIALS if args.full_fidelity else args.trials
    names = [n.strip() for n in args.presets.split(",") if n.strip()]
    unknown = sorted(set(names) - set(PRESET_NAMES))
    if unknown:
        print(f"unknown presets: {', '.join(unknown)}", file=sys.stderr)
        return 2
    for name in names:
        cmd = ["run", "--preset", name, "--out", args.out, "--seed", str(args.seed), "--workers", str(args.workers)]
        if trials is not None:
            cmd += ["--trials", str(trials)]
        start = time.perf_counter()
        status = hebf_main(cmd)
        if status != 0:
            return status
        print(f"  {name}: {time.perf_counter() - start:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
