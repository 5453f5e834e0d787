#!/usr/bin/env python3
"""Effect of dual-exchange asynchrony: piggyback sharing at several
staleness bounds versus the synchronous baseline.

Usage: python scripts/asynchrony_study.py [seed]
"""

import sys

from ehctrl.config import build_config, read_raw
from ehctrl.sim import run


def main() -> int:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1

    def row(label, raw):
        result = run(build_config(raw, seed=seed))
        cells = " ".join(
            f"ctrl_{e.node + 1}={e.ctrl_perf:6.3f} p_rx_{e.node + 1}={e.p_rx_analytic:.4f}"
            for e in result.summary.nodes
        )
        print(f"{label:<22} {cells}")

    row("always-on", read_raw(None))
    for bound in (5, 20, 50):
        raw = read_raw(None)
        raw["availability"] = {"mode": "piggyback", "prob": 0.5, "staleness_bound": bound}
        row(f"piggyback B={bound}", raw)
    raw = read_raw(None)
    raw["availability"] = {"mode": "random", "prob": 0.5, "staleness_bound": 10}
    row("random p=0.5 B=10", raw)
    return 0


if __name__ == "__main__":
    sys.exit(main())
