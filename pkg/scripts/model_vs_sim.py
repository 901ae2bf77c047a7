#!/usr/bin/env python3
"""Print a model-vs-simulation agreement table for the fully connected grid.

Runs the table grid at a configurable scale and reports pooled simulated PRR
next to the analytic fixed point, plus the absolute gap.
"""

import argparse
import os

from spsbench.analytic import SpsConfig, prr_fcn
from spsbench.harness import run_trials
from spsbench.metrics import pooled_prr
from spsbench.simcore import FullyConnected


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--trials", type=int, default=10)
    parser.add_argument("--duration", type=float, default=300.0)
    parser.add_argument("--jobs", type=int, default=os.cpu_count())
    parser.add_argument("--seed", type=int, default=42_000)
    args = parser.parse_args()

    print(f"{'p_k':>4} {'N_sen':>6} {'sim PRR':>9} {'model PRR':>10} {'diff':>8}")
    for p_k in (0.0, 0.8):
        cfg = SpsConfig(p_k=p_k, n_s=5, tau=10.0)
        for n_sen in (100, 200, 300, 400):
            trials = run_trials(
                FullyConnected(n_sen + 1), cfg, trials=args.trials,
                duration_s=args.duration, warmup_s=10.0,
                base_seed=args.seed, jobs=args.jobs,
            )
            sim = pooled_prr(trials)
            ana = prr_fcn(cfg, n_sen)
            print(f"{p_k:>4} {n_sen:>6} {sim:>9.4f} {ana:>10.4f} {sim - ana:>+8.4f}")


if __name__ == "__main__":
    main()
