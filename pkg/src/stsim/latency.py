"""Cycle counts and array utilization.

MM stages use the systolic fill/stream/drain model: one spatial tile takes
2*D_row + D_col + T_stream - 2 cycles, where T_stream is the extent of the
matrix dimension that is not spatially mapped. Element-wise stages run on
their own units (BN units, and the shared SOMA/GRAD/RES unit).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil

from .config import ArrayConfig, SimConfig
from .mapping import Dataflow, TilingPlan, map_stage
from .workload import PHASES, StageGraph, StageSpec

# register stages counted along the datapaths of each unit
PIPELINE_DEPTH = {
    ("BN", "FP"): 13,
    ("BN", "BP"): 16,
    ("SOMA", "FP"): 4,
    ("GRAD", "BP"): 4,
    ("RES", "FP"): 1,
    ("RES", "BP"): 1,
}


def systolic_cycles(D_row: int, D_col: int, t_stream: int) -> int:
    return 2 * D_row + D_col + t_stream - 2


def tile_latency(plan: TilingPlan, arr: ArrayConfig) -> int:
    return systolic_cycles(arr.D_row, arr.D_col, plan.stream_extent)


def stage_latency(plan: TilingPlan, arr: ArrayConfig) -> int:
    return tile_latency(plan, arr) * plan.tiles_row * plan.tiles_col * plan.stage.instances


def stage_utilization(plan: TilingPlan, arr: ArrayConfig) -> float:
    return plan.stage.macs / (stage_latency(plan, arr) * arr.D_row * arr.D_col)


def elementwise_cycles(kind: str, phase: str, elements: int, lanes: int) -> int:
    return ceil(elements / lanes) + PIPELINE_DEPTH[(kind, phase)]


def elementwise_latency(stage: StageSpec, lanes: int) -> int:
    if stage.is_mm:
        raise ValueError(f"{stage.label} is an MM stage")
    return elementwise_cycles(stage.kind, stage.phase, stage.elements, lanes)


def stage_key(stage: StageSpec) -> str:
    return f"{stage.phase}/b{stage.block}/{stage.label}"


@dataclass
class LatencyReport:
    per_stage_cycles: dict[str, int]
    per_phase_cycles: dict[str, int]
    total_cycles: int
    mm_cycles: int
    macs: int
    utilization: float  # over all cycles
    mm_utilization: float  # over MM cycles only
    wall_seconds: float
    per_phase_macs: dict[str, int] = field(default_factory=dict)


def aggregate(results: list[tuple[StageSpec, int]], arr: ArrayConfig) -> LatencyReport:
    """Sequential composition: stages in order within a phase, phases FP -> BP -> WG."""
    per_stage: dict[str, int] = {}
    per_phase = {p: 0 for p in PHASES}
    per_phase_macs = {p: 0 for p in PHASES}
    mm_cycles = 0
    macs = 0
    for stage, cyc in results:
        per_stage[stage_key(stage)] = cyc
        per_phase[stage.phase] += cyc
        per_phase_macs[stage.phase] += stage.macs
        if stage.is_mm:
            mm_cycles += cyc
            macs += stage.macs
    total = sum(per_phase.values())
    pe = arr.D_row * arr.D_col
    return LatencyReport(
        per_stage_cycles=per_stage,
        per_phase_cycles=per_phase,
        total_cycles=total,
        mm_cycles=mm_cycles,
        macs=macs,
        utilization=macs / (total * pe) if total else 0.0,
        mm_utilization=macs / (mm_cycles * pe) if mm_cycles else 0.0,
        wall_seconds=total / arr.freq_hz,
        per_phase_macs=per_phase_macs,
    )


def stage_cycles(graph: StageGraph, df: Dataflow, arr: ArrayConfig,
                 sim: SimConfig | None = None) -> list[tuple[StageSpec, int]]:
    """Cycles charged to each stage.

    In ``overlap`` mode an element-wise stage hides behind the most recent MM
    stage of its phase; the BN unit and the SOMA/GRAD/RES unit each get that
    MM's cycle count as a budget, and only the overflow plus the pipeline
    depth is exposed. ``serial`` charges every element-wise stage in full.
    """
    sim = sim or SimConfig()
    lanes = sim.lanes or arr.D_col
    out: list[tuple[StageSpec, int]] = []
    for phase in PHASES:
        budget = {"bn": 0, "reuse": 0}
        for stage in graph.phase(phase):
            if stage.is_mm:
                cyc = stage_latency(map_stage(stage, df, arr), arr)
                budget = {"bn": cyc, "reuse": cyc}
            else:
                stream = ceil(stage.elements / lanes)
                depth = PIPELINE_DEPTH[(stage.kind, stage.phase)]
                if sim.elementwise_mode == "serial":
                    cyc = stream + depth
                else:
                    unit = "bn" if stage.kind == "BN" else "reuse"
                    hidden = min(stream, budget[unit])
                    budget[unit] -= hidden
                    cyc = stream - hidden + depth
            out.append((stage, cyc))
    return out


def evaluate_latency(graph: StageGraph, df: Dataflow, arr: ArrayConfig,
                     sim: SimConfig | None = None) -> LatencyReport:
    return aggregate(stage_cycles(graph, df, arr, sim), arr)
