"""Run orchestration and report emission."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from .config import RunConfig
from .energy import (CLASS_OF_KIND, EnergyReport, assemble_energy, compute_energy,
                     derive_power_efficiency, memory_energy)
from .kernel.block import probe_block
from .kernel.sparsity import SparsityStats, measure_sparsity
from .latency import LatencyReport, aggregate, stage_cycles, stage_key
from .mapping import Dataflow, dataflow_names, enumerate_dataflows, map_stage
from .workload import build_training_graph

CSV_HEADER = ("dataflow", "phase", "stage_label", "operator_class", "metric", "value")
STAGE_METRICS = ("compute_energy_j", "memory_energy_j", "cycles")
SUMMARY_METRICS = ("total_energy_j", "total_cycles", "wall_seconds", "utilization",
                   "mm_utilization", "watts", "tflops", "tflops_per_watt")


@dataclass
class StageRecord:
    key: str
    phase: str
    label: str
    operator_class: str
    compute_energy_j: float
    memory_energy_j: float
    cycles: int


@dataclass
class CostReport:
    dataflow: str
    config_digest: str
    config: dict
    sparsity: SparsityStats
    energy: EnergyReport
    latency: LatencyReport
    utilization: float
    mm_utilization: float
    watts: float
    tflops: float
    tflops_per_watt: float
    stages: list[StageRecord]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SweepResult:
    reports: list[CostReport]
    energy_ranking: list[tuple[str, float]]
    latency_ranking: list[tuple[str, int]]

    def report(self, name: str) -> CostReport:
        for r in self.reports:
            if r.dataflow == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "reports": [r.to_dict() for r in self.reports],
            "ranking": {
                "energy": [list(x) for x in self.energy_ranking],
                "latency": [list(x) for x in self.latency_ranking],
            },
        }


def resolve_sparsity(cfg: RunConfig, seed: int | None = None) -> SparsityStats:
    sp = cfg.sparsity
    if sp.mode == "fixed":
        return SparsityStats(sp.s_s, sp.s_smg, sp.s_pg)
    trace = probe_block(cfg.model, sp.probe_BS, sp.probe_P, sp.probe_d_model, sp.probe_h,
                        sp.seed if seed is None else seed)
    return measure_sparsity(list(trace.lif.values()), list(trace.grad.values()))


def evaluate(cfg: RunConfig, df: Dataflow, stats: SparsityStats) -> CostReport:
    graph = build_training_graph(cfg.model, cfg.sim.mask_gated_bp)
    cycles = stage_cycles(graph, df, cfg.array, cfg.sim)
    lat = aggregate(cycles, cfg.array)
    triples = []
    records = []
    for stage, cyc in cycles:
        plan = map_stage(stage, df, cfg.array) if stage.is_mm else None
        e_c = compute_energy(stage, stats, cfg.coefficients)
        e_m = memory_energy(stage, plan, cfg.memory, stats)
        triples.append((stage, e_c, e_m))
        records.append(StageRecord(stage_key(stage), stage.phase, stage.label,
                                   CLASS_OF_KIND[stage.kind], e_c, e_m, cyc))
    energy = assemble_energy(triples)
    watts, tflops, eff = derive_power_efficiency(energy, lat)
    return CostReport(
        dataflow=df.name,
        config_digest=cfg.digest(),
        config=cfg.to_dict(),
        sparsity=stats,
        energy=energy,
        latency=lat,
        utilization=lat.utilization,
        mm_utilization=lat.mm_utilization,
        watts=watts,
        tflops=tflops,
        tflops_per_watt=eff,
        stages=records,
    )


def run_simulate(cfg: RunConfig, dataflow: str | None = None,
                 seed: int | None = None) -> CostReport:
    cfg.validate()
    df = Dataflow.parse(dataflow or cfg.dataflow)
    return evaluate(cfg, df, resolve_sparsity(cfg, seed))


def run_sweep(cfg: RunConfig, seed: int | None = None, workers: int = 9) -> SweepResult:
    """All nine dataflows, evaluated concurrently; results keep enumeration order."""
    cfg.validate()
    stats = resolve_sparsity(cfg, seed)
    dfs = enumerate_dataflows()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(lambda df: evaluate(cfg, df, stats), dfs))
    return SweepResult(reports, *rank(reports))


def rank(reports: list[CostReport]):
    """Ascending by total; ties go to the canonical dataflow order."""
    order = dataflow_names()

    def key(x):
        return (x[1], order.index(x[0]))

    by_energy = sorted(((r.dataflow, r.energy.grand_total) for r in reports), key=key)
    by_latency = sorted(((r.dataflow, r.latency.total_cycles) for r in reports), key=key)
    return by_energy, by_latency


def csv_rows(report: CostReport) -> list[tuple]:
    rows = []
    for s in report.stages:
        for metric in STAGE_METRICS:
            rows.append((report.dataflow, s.phase, s.key, s.operator_class, metric, getattr(s, metric)))
    summary = {
        "total_energy_j": report.energy.grand_total,
        "total_cycles": report.latency.total_cycles,
        "wall_seconds": report.latency.wall_seconds,
        "utilization": report.utilization,
        "mm_utilization": report.mm_utilization,
        "watts": report.watts,
        "tflops": report.tflops,
        "tflops_per_watt": report.tflops_per_watt,
    }
    for metric in SUMMARY_METRICS:
        rows.append((report.dataflow, "ALL", "ALL", "ALL", metric, summary[metric]))
    return rows


def emit_report(report: CostReport | SweepResult, fmt: str, path: str | Path | None) -> str:
    """Serialize to JSON or long-form CSV; writes to ``path`` unless it is None."""
    reports = report.reports if isinstance(report, SweepResult) else [report]
    if fmt == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        # str() of a float is its shortest round-trip repr
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in reports:
            writer.writerows(csv_rows(r))
        text = buf.getvalue()
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))
