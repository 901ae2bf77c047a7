#!/usr/bin/env python3
"""Produce the CSV data behind all six result figures.

Default is the full paper-scale run (40 trials, 300/500 s), which takes a
while on a small machine; --quick cuts it to a few short trials for a fast
end-to-end pass. Figures are rendered separately (see the figures package).
"""

import argparse
import sys
import time

from spsbench import cli
from spsbench.harness import FIGURE_IDS


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--jobs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--quick", action="store_true",
                        help="4 trials, 60 s (smoke-scale data)")
    parser.add_argument("--figures", nargs="*", default=list(FIGURE_IDS),
                        help="subset of figure ids to run")
    args = parser.parse_args()

    for fig in args.figures:
        extra = []
        if args.out:
            extra += ["--out", args.out]
        if args.jobs:
            extra += ["--jobs", str(args.jobs)]
        if args.seed is not None:
            extra += ["--seed", str(args.seed)]
        if args.quick:
            extra += ["--trials", "4", "--duration", "60"]
        started = time.time()
        code = cli.main(["reproduce", fig] + extra)
        print(f"figure {fig}: exit {code} in {time.time() - started:.0f}s", file=sys.stderr)
        if code != 0:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
