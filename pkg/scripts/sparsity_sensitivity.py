"""Energy and efficiency of one dataflow as the spike rate s_s varies.

The other two factors stay at their configured fixed values; latency does
not depend on sparsity, so only energy, power and TFLOPS/W move.

    python3 scripts/sparsity_sensitivity.py [--dataflow OS_C] [--points 11]
"""

import argparse
import dataclasses

import numpy as np

from stsim.config import RunConfig, SparsityConfig
from stsim.mapping import dataflow_names
from stsim.report import run_simulate


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dataflow", default="OS_C", choices=dataflow_names())
    ap.add_argument("--points", type=int, default=11)
    args = ap.parse_args()

    base = RunConfig()
    print(f"{'s_s':>6}{'total J':>10}{'FP MM J':>10}{'W':>8}{'TFLOPS/W':>10}")
    for s in np.linspace(0.0, 1.0, args.points):
        sp = SparsityConfig(mode="fixed", s_s=float(s))
        r = run_simulate(dataclasses.replace(base, sparsity=sp), args.dataflow)
        print(f"{s:>6.2f}{r.energy.grand_total:>10.4f}{r.energy.cells['FP']['MM'].total:>10.4f}"
              f"{r.watts:>8.3f}{r.tflops_per_watt:>10.3f}")


if __name__ == "__main__":
    main()
