"""Run every sweep config in scripts/configs through the CLI.

Usage: python scripts/run_experiments.py [--only NAME] [--samples N] [--workers K]
CSV files and manifests land under results/ (relative to the working directory).
"""

import argparse
import sys
import time
from pathlib import Path

from barren_lab import cli

CONFIGS = Path(__file__).resolve().parent / "configs"


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--only", help="config stem, e.g. variance_sweep")
    p.add_argument("--samples", type=int)
    p.add_argument("--workers", type=int, default=1)
    args = p.parse_args()
    paths = sorted(CONFIGS.glob("*.json"))
    if args.only:
        paths = [q for q in paths if q.stem == args.only]
        if not paths:
            print(f"no config named {args.only}", file=sys.stderr)
            return 2
    for path in paths:
        argv = ["sweep", "--config", str(path), "--workers", str(args.workers), "-q"]
        if args.samples:
            argv += ["--samples", str(args.samples)]
        t0 = time.perf_counter()
        code = cli.main(argv)
        print(f"{path.stem}: exit {code} in {time.perf_counter() - t0:.1f}s")
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
