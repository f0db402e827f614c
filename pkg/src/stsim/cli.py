"""Command line entry point: simulate, sweep, gradcheck, print-config."""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, RunConfig, config_from_dict, load_config
from .gradcheck import run_gradcheck
from .mapping import dataflow_names
from .report import emit_report, run_simulate, run_sweep

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_GRADCHECK = 4
EXIT_OUTPUT = 5


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, output=True):
        sp.add_argument("--config", help="JSON config file; omitted fields take defaults")
        sp.add_argument("--seed", type=int, default=None,
                        help="seed for the sparsity probe / gradcheck instances")
        if output:
            sp.add_argument("--output", "-o", default=None, help="write here instead of stdout")
            sp.add_argument("--format", choices=("json", "csv"), default="json")

    sim = sub.add_parser("simulate", help="cost report for one dataflow")
    common(sim)
    sim.add_argument("--dataflow", choices=dataflow_names(), default=None)

    sweep = sub.add_parser("sweep", help="cost reports and rankings for all nine dataflows")
    common(sweep)

    gc = sub.add_parser("gradcheck", help="check kernels against independent oracles")
    common(gc, output=False)
    gc.add_argument("--corrupt", action="store_true",
                    help="perturb analytic gradients (negative control, must fail)")

    pc = sub.add_parser("print-config", help="print the effective configuration")
    common(pc, output=False)
    pc.add_argument("--dataflow", choices=dataflow_names(), default=None)
    return p


def _load(path: str | None) -> RunConfig:
    if path is None:
        return config_from_dict({})
    return load_config(path)


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "print-config":
        d = cfg.to_dict()
        if args.dataflow:
            d["dataflow"] = args.dataflow
        print(json.dumps(d, indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "gradcheck":
        seed = cfg.sparsity.seed if args.seed is None else args.seed
        summary = run_gradcheck(cfg, seed, corrupt=args.corrupt)
        for line in summary.lines():
            print(line)
        return EXIT_OK if summary.passed else EXIT_GRADCHECK

    try:
        if args.command == "simulate":
            result = run_simulate(cfg, args.dataflow, args.seed)
        else:
            result = run_sweep(cfg, args.seed)
    except (ValueError, ArithmeticError) as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION

    try:
        text = emit_report(result, args.format, args.output)
    except OSError as exc:
        print(f"cannot write report: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    _write(text, args.output)
    if args.command == "sweep":
        print("rank  by energy (J)          by latency (cycles)", file=sys.stderr)
        for i, ((en, ev), (ln, lv)) in enumerate(zip(result.energy_ranking, result.latency_ranking), 1):
            print(f"{i:>4}  {en:<5} {ev:<16.6g}  {ln:<5} {lv}", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
