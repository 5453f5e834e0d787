#!/usr/bin/env python3
"""Stability and reception metrics across a batch of seeds.

Usage: python scripts/seed_study.py [num_seeds] [horizon]
"""

import sys

import numpy as np

from ehctrl.config import default_config
from ehctrl.sim import run


def main() -> int:
    num_seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 11
    horizon = int(sys.argv[2]) if len(sys.argv) > 2 else 10_000

    print(f"{'seed':>4}  ctrl_1  ctrl_2   p_rx_1  p_rx_2   bal_1   bal_2")
    rows = []
    for seed in range(1, num_seeds + 1):
        result = run(default_config(seed=seed, horizon=horizon))
        n1, n2 = result.summary.nodes[0], result.summary.nodes[-1]
        rows.append([n1.ctrl_perf, n2.ctrl_perf, n1.p_rx_analytic,
                     n2.p_rx_analytic, n1.energy_balance, n2.energy_balance])
        print(f"{seed:>4}  {rows[-1][0]:6.3f}  {rows[-1][1]:6.3f}   "
              f"{rows[-1][2]:6.4f}  {rows[-1][3]:6.4f}  {rows[-1][4]:6.4f}  {rows[-1][5]:6.4f}")
    arr = np.array(rows)
    print(f"worst ctrl_perf: {arr[:, :2].max():.3f} (bound 5.0)")
    print(f"reception floor: {arr[:, 2].min():.4f} / {arr[:, 3].min():.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
