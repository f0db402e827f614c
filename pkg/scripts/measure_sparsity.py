"""Run the desk-scale block forward/backward and report measured sparsity
for a few seeds and firing thresholds.

    python3 scripts/measure_sparsity.py [--seeds 5]
"""

import argparse
import dataclasses

from stsim.config import ModelConfig, SparsityConfig
from stsim.kernel.block import probe_block
from stsim.kernel.sparsity import measure_sparsity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=5)
    args = ap.parse_args()
    p = SparsityConfig()
    print(f"{'th_f':>6}{'seed':>6}{'s_s':>9}{'s_smg':>9}{'s_pg':>9}")
    for th in (0.5, 1.0, 1.5):
        model = dataclasses.replace(ModelConfig(), th_f=th, th_r=th + 1.0)
        for seed in range(args.seeds):
            tr = probe_block(model, p.probe_BS, p.probe_P, p.probe_d_model, p.probe_h, seed)
            s = measure_sparsity(list(tr.lif.values()), list(tr.grad.values()))
            print(f"{th:>6.2f}{seed:>6}{s.s_s:>9.4f}{s.s_smg:>9.4f}{s.s_pg:>9.4f}")


if __name__ == "__main__":
    main()
