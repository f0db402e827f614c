"""Sweep all nine dataflows and print per-phase energy, latency and efficiency.

    python3 scripts/sweep_dataflows.py [--config cfg.json] [--csv out.csv]
"""

import argparse

from stsim.config import RunConfig, load_config
from stsim.report import emit_report, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--csv", help="also write the long-form CSV here")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    cfg = load_config(args.config) if args.config else RunConfig()
    sw = run_sweep(cfg, args.seed)

    s = sw.reports[0].sparsity
    print(f"sparsity: s_s={s.s_s:.4f} s_smg={s.s_smg:.4f} s_pg={s.s_pg:.4f}")
    print(f"{'dataflow':<9}{'FP J':>9}{'BP J':>9}{'WG J':>9}{'total J':>10}"
          f"{'Mcycles':>10}{'util':>8}{'W':>8}{'TFLOPS':>8}{'TFLOPS/W':>10}")
    for r in sw.reports:
        e = r.energy.phase_totals
        print(f"{r.dataflow:<9}{e['FP']:>9.4f}{e['BP']:>9.4f}{e['WG']:>9.4f}{r.energy.grand_total:>10.4f}"
              f"{r.latency.total_cycles / 1e6:>10.1f}{r.utilization:>8.3f}{r.watts:>8.3f}"
              f"{r.tflops:>8.3f}{r.tflops_per_watt:>10.3f}")
    print("energy ranking: " + " < ".join(n for n, _ in sw.energy_ranking))
    print("latency ranking: " + " <= ".join(n for n, _ in sw.latency_ranking))
    if args.csv:
        emit_report(sw, "csv", args.csv)


if __name__ == "__main__":
    main()
