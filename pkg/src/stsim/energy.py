"""Computation and memory-access energy per stage, operator class and phase.

Compute energy counts primitive operations per stage and multiplies by the
per-primitive coefficients, gated by the sparsity factor bound to the stage.
Memory energy counts bits moved at each level of the DRAM / SRAM / register
hierarchy. MM stages own all DRAM traffic: their operands and outputs are the
tensors that spill off-chip when they exceed an SRAM bank. Element-wise units
stream through SRAM banks only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import EnergyCoefficients, MemoryConfig, MemoryLevel
from .kernel.sparsity import SparsityStats
from .latency import LatencyReport
from .mapping import TilingPlan
from .workload import PHASES, StageSpec

PJ = 1e-12

OP_CLASSES = ("MM", "BN", "LIF", "RES")
CLASS_OF_KIND = {"MM": "MM", "BN": "BN", "SOMA": "LIF", "GRAD": "LIF", "RES": "RES"}

# Primitive counts (per element, per feature) of the BN units.
# FP roster per sample path: 4 ADD, 3 MUL, 2 DIV, 2 SUB, 1 SQRT, split between
# work done for every element and work done once per feature.
BN_FP_PER_ELEMENT = {"E_ADD": 3, "E_MUL": 2, "E_SUB": 1, "E_DIV": 1}
BN_FP_PER_FEATURE = {"E_ADD": 1, "E_MUL": 1, "E_SUB": 1, "E_DIV": 1, "E_SQRT": 1}
# BP: M = gamma*g/sqrt (2 MUL, 1 DIV); S_N, S_M, S_MN, sum(g) accumulations
# (4 ADD, 1 MUL); input gradient (3 MUL, 2 reciprocal MUL, 1 ADD, 2 SUB).
BN_BP_PER_ELEMENT = {"E_MUL": 8, "E_DIV": 1, "E_ADD": 5, "E_SUB": 2}
# dgamma division, two reciprocals, S_M/m; squares and products feeding them
BN_BP_PER_FEATURE = {"E_DIV": 4, "E_MUL": 3}
SOMA_PER_ELEMENT = {"E_MUL": 1, "E_ADD": 1, "E_MUX": 2, "E_SUB": 2}
# GRAD splits into the part driven by grad(U_{t+1}) and a fixed part
GRAD_RECURRENT = {"E_MUL": 2, "E_ADD": 1}
GRAD_FIXED = {"E_ADD": 1, "E_MUX": 1}


def _ops(coeffs: EnergyCoefficients, counts: dict[str, int]) -> float:
    return sum(n * getattr(coeffs, name) for name, n in counts.items())


def _gate(stage: StageSpec, stats: SparsityStats) -> float:
    if stage.sparsity_binding == "none":
        return 1.0
    return getattr(stats, stage.sparsity_binding)


def compute_energy(stage: StageSpec, stats: SparsityStats, coeffs: EnergyCoefficients) -> float:
    """Computation energy of one stage in joules."""
    E = stage.elements
    if stage.kind == "MM":
        if stage.phase == "BP":
            pj = stage.macs * _gate(stage, stats) * coeffs.E_MAC
        else:
            # spike operand: each MAC collapses to an add, skipped when no spike
            pj = stage.macs * stats.s_s * coeffs.E_ADD
    elif stage.kind == "SOMA":
        pj = E * _ops(coeffs, SOMA_PER_ELEMENT)
    elif stage.kind == "GRAD":
        pj = E * (stats.s_pg * _ops(coeffs, GRAD_RECURRENT) + _ops(coeffs, GRAD_FIXED))
    elif stage.kind == "BN":
        if stage.phase == "FP":
            per_e, per_f = BN_FP_PER_ELEMENT, BN_FP_PER_FEATURE
        else:
            per_e, per_f = BN_BP_PER_ELEMENT, BN_BP_PER_FEATURE
        pj = E * _ops(coeffs, per_e) + stage.features * _ops(coeffs, per_f)
    elif stage.kind == "RES":
        pj = E * coeffs.E_ADD
    else:
        raise ValueError(f"unknown stage kind {stage.kind!r}")
    return pj * PJ


@dataclass
class Traffic:
    """Bits read and written per memory level."""

    reads: dict[str, float] = field(default_factory=dict)
    writes: dict[str, float] = field(default_factory=dict)

    def read(self, level: MemoryLevel, bits: float) -> None:
        self.reads[level.name] = self.reads.get(level.name, 0.0) + bits

    def write(self, level: MemoryLevel, bits: float) -> None:
        self.writes[level.name] = self.writes.get(level.name, 0.0) + bits

    def energy(self, mem: MemoryConfig) -> float:
        pj = sum(bits * mem.level(n).read_pj_per_bit for n, bits in self.reads.items())
        pj += sum(bits * mem.level(n).write_pj_per_bit for n, bits in self.writes.items())
        return pj * PJ


def _operand_banks(stage: StageSpec, mem: MemoryConfig):
    x = mem.bank("spike" if stage.input_precision == 1 else "act16")
    if stage.weight_precision == 1:
        w = mem.bank("spike")
    else:
        w = mem.bank("grad" if stage.phase == "WG" else "weight")
    y = mem.bank("wgrad" if stage.phase == "WG" else "output")
    return x, w, y


def mm_traffic(stage: StageSpec, plan: TilingPlan, mem: MemoryConfig,
               stats: SparsityStats) -> Traffic:
    """Access counts of an MM stage under its tiling plan.

    The operand pinned in the array is read once; a streamed operand is
    re-read once per tile along the axis it lacks; partial sums make a
    read-modify-write trip to SRAM for every tile along the reduction axis
    after the first. A tensor that exceeds its bank lives in DRAM and is
    fetched once per pass, and again on every outer-loop trip whose axis
    does not index it.
    """
    B, C, K = stage.dims
    n = stage.instances
    xb, wb, yb = stage.input_precision, stage.weight_precision, stage.output_precision
    x_bank, w_bank, y_bank = _operand_banks(stage, mem)
    tiles = plan.tiles_along
    t = Traffic()

    x_elems, w_elems, y_elems = B * C * n, C * K * n, B * K * n
    event_driven = xb == 1 and stage.phase in ("FP", "WG")
    x_gate = stats.s_s if event_driven else 1.0

    t.read(x_bank, x_elems * tiles("K") * xb * x_gate)
    t.read(w_bank, w_elems * tiles("B") * wb)
    rtiles = tiles("C")
    t.write(y_bank, y_elems * rtiles * yb)
    t.read(y_bank, y_elems * (rtiles - 1) * yb)

    # DRAM
    outer = plan.dataflow.outer_dim
    trips = plan.outer_trips
    for bank, elems, bits, axes, is_out in (
        (x_bank, x_elems, xb, "BC", False),
        (w_bank, w_elems, wb, "CK", False),
        (y_bank, y_elems, yb, "BK", True),
    ):
        unique = elems * bits
        if unique <= bank.volume_bits:
            continue
        dram = mem.dram
        passes = 1 if outer in axes else trips
        if is_out:
            t.write(dram, unique * passes)
            t.read(dram, unique * (passes - 1))
            t.read(bank, unique * passes)
            t.write(bank, unique * (passes - 1))
        else:
            t.read(dram, unique * passes)
            t.write(bank, unique * passes)

    # registers: operand reads and a psum read+write per active MAC
    active = stage.macs * (stats.s_s if stage.phase != "BP" else _gate(stage, stats))
    t.read(mem.register(xb), active * xb)
    t.read(mem.register(wb), active * wb)
    t.read(mem.register(yb), active * yb)
    t.write(mem.register(yb), active * yb)
    return t


# Element-wise accesses: (direction, bank role, bits per element).
_EW_ACCESS = {
    ("SOMA", "FP"): [("r", "bn", 16), ("r", "potential", 16), ("r", "mask", 1),
                     ("w", "potential", 16), ("w", "mask", 1), ("w", "mask", 1)],
    ("BN", "FP"): [("r", "output", 16), ("w", "bn", 16), ("w", "bn", 16)],
    ("RES", "FP"): [("r", "bn", 16), ("r", "output", 16), ("w", "output", 16)],
    ("GRAD", "BP"): [("r", "output", 16), ("r", "potential", 16), ("r", "mask", 1),
                     ("r", "mask", 1), ("r", "grad", 16), ("w", "grad", 16)],
    ("BN", "BP"): [("r", "grad", 16), ("r", "bn", 16), ("w", "grad", 16)],
    ("RES", "BP"): [("r", "grad", 16), ("r", "grad", 16), ("w", "grad", 16)],
}
# per-feature BN statistics: FP stores mu and sqrt_d, BP reads them back
# and writes dgamma, dbeta
_BN_FEATURE_ACCESS = {
    "FP": [("w", "bn", 16), ("w", "bn", 16)],
    "BP": [("r", "bn", 16), ("r", "bn", 16), ("w", "wgrad", 16), ("w", "wgrad", 16)],
}


def elementwise_traffic(stage: StageSpec, mem: MemoryConfig) -> Traffic:
    t = Traffic()
    accesses = [(d, r, b * stage.elements) for d, r, b in _EW_ACCESS[(stage.kind, stage.phase)]]
    if stage.kind == "BN":
        accesses += [(d, r, b * stage.features) for d, r, b in _BN_FEATURE_ACCESS[stage.phase]]
    for direction, role, bits in accesses:
        bank = mem.bank(role)
        if direction == "r":
            t.read(bank, bits)
        else:
            t.write(bank, bits)
    return t


def memory_energy(stage: StageSpec, plan: TilingPlan | None, mem: MemoryConfig,
                  stats: SparsityStats) -> float:
    if stage.is_mm:
        if plan is None:
            raise ValueError(f"{stage.label}: MM stage needs a tiling plan")
        if plan.stage is not stage and plan.stage != stage:
            raise ValueError(f"{stage.label}: plan belongs to {plan.stage.label}")
        return mm_traffic(stage, plan, mem, stats).energy(mem)
    return elementwise_traffic(stage, mem).energy(mem)


@dataclass(frozen=True)
class Cell:
    compute: float
    memory: float
    total: float


@dataclass
class EnergyReport:
    cells: dict[str, dict[str, Cell]]  # phase -> operator class -> cell
    phase_totals: dict[str, float]
    class_totals: dict[str, float]
    grand_total: float


def assemble_energy(results: list[tuple[StageSpec, float, float]]) -> EnergyReport:
    """Group (stage, E_C, E_M) triples by phase and operator class.

    Sums use math.fsum, so every total is exactly rounded and does not depend
    on the order stages were evaluated in.
    """
    comp: dict[tuple[str, str], list[float]] = {(p, c): [] for p in PHASES for c in OP_CLASSES}
    memo: dict[tuple[str, str], list[float]] = {(p, c): [] for p in PHASES for c in OP_CLASSES}
    for stage, e_c, e_m in results:
        key = (stage.phase, CLASS_OF_KIND[stage.kind])
        comp[key].append(e_c)
        memo[key].append(e_m)
    cells: dict[str, dict[str, Cell]] = {}
    for p in PHASES:
        cells[p] = {}
        for c in OP_CLASSES:
            e_c = math.fsum(comp[(p, c)])
            e_m = math.fsum(memo[(p, c)])
            cells[p][c] = Cell(e_c, e_m, e_c + e_m)
    phase_totals = {p: math.fsum(cells[p][c].total for c in OP_CLASSES) for p in PHASES}
    class_totals = {c: math.fsum(cells[p][c].total for p in PHASES) for c in OP_CLASSES}
    grand = math.fsum(cells[p][c].total for p in PHASES for c in OP_CLASSES)
    return EnergyReport(cells, phase_totals, class_totals, grand)


def derive_power_efficiency(e: EnergyReport, lat: LatencyReport) -> tuple[float, float, float]:
    """(watts, effective TFLOPS, TFLOPS per watt) with 2 ops per MAC."""
    if lat.wall_seconds <= 0:
        raise ValueError("latency must be positive")
    watts = e.grand_total / lat.wall_seconds
    tflops = 2.0 * lat.macs / lat.wall_seconds / 1e12
    return watts, tflops, tflops / watts
