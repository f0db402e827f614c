"""Run configuration: model, array, memory hierarchy, energy coefficients.

Everything is plain dataclasses so configs round-trip through JSON. Energies
are written in picojoules in the file and converted to joules by the energy
model; memory volumes are in bits.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any


class ConfigError(ValueError):
    """Raised when a configuration file is malformed or violates a constraint."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


def _require(cond: bool, field_name: str, message: str) -> None:
    if not cond:
        raise ConfigError(field_name, message)


@dataclass(frozen=True)
class ModelConfig:
    """Spiking Transformer hyperparameters.

    Defaults follow the SpikingFormer-8-512 setting: 8 heads, 14x14 patches,
    512 features, 4 timesteps, batch 16, FP16 datapath.
    """

    h: int = 8
    P: int = 14
    d_model: int = 512
    T: int = 4
    BS: int = 16
    b: int = 16
    L: int = 8
    mlp_ratio: int = 4
    s_scale: float = 0.125
    alpha: float = 0.5
    th_f: float = 1.0
    th_r: float = 2.0
    eps: float = 1e-5

    def validate(self) -> None:
        for name in ("h", "P", "d_model", "T", "BS", "b", "L", "mlp_ratio"):
            v = getattr(self, name)
            _require(isinstance(v, int) and not isinstance(v, bool) and v >= 1,
                     f"model.{name}", f"must be an integer >= 1, got {v!r}")
        _require(self.d_model % self.h == 0, "model.d_model",
                 f"d_model={self.d_model} must be divisible by h={self.h}")
        for name in ("s_scale", "alpha", "th_f", "th_r", "eps"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and math.isfinite(v),
                     f"model.{name}", f"must be a finite number, got {v!r}")
        _require(self.th_r > self.th_f, "model.th_r",
                 f"th_r={self.th_r} must exceed th_f={self.th_f}")
        _require(0 < self.alpha <= 1, "model.alpha", f"must lie in (0, 1], got {self.alpha}")
        _require(self.eps > 0, "model.eps", f"must be > 0, got {self.eps}")


@dataclass(frozen=True)
class ArrayConfig:
    D_row: int = 64
    D_col: int = 64
    freq_hz: float = 500e6

    def validate(self) -> None:
        for name in ("D_row", "D_col"):
            v = getattr(self, name)
            _require(isinstance(v, int) and not isinstance(v, bool) and v >= 1,
                     f"array.{name}", f"must be an integer >= 1, got {v!r}")
        _require(isinstance(self.freq_hz, (int, float)) and self.freq_hz > 0,
                 "array.freq_hz", f"must be > 0, got {self.freq_hz!r}")

    @property
    def peak_flops(self) -> float:
        # 2 ops per MAC
        return 2.0 * self.D_row * self.D_col * self.freq_hz


@dataclass(frozen=True)
class EnergyCoefficients:
    """Per-primitive compute energies in pJ per operation at the datapath width.

    The defaults are 28nm-class FP16 estimates chosen for plausibility only;
    they are not calibrated against any silicon.
    """

    process: str = "28nm"
    E_MAC: float = 1.2
    E_ADD: float = 0.4
    E_SUB: float = 0.4
    E_MUL: float = 0.8
    E_MUX: float = 0.05
    E_SQRT: float = 3.0
    E_DIV: float = 3.0

    def validate(self) -> None:
        for f in fields(self):
            if f.name == "process":
                continue
            v = getattr(self, f.name)
            _require(isinstance(v, (int, float)) and math.isfinite(v) and v > 0,
                     f"coefficients.{f.name}", f"must be > 0, got {v!r}")


MEMORY_KINDS = ("DRAM", "SRAM", "REGISTER")

# What each SRAM bank holds. The energy model looks banks up by role.
MEMORY_ROLES = (
    "spike",      # 1-bit spike operands of MM stages
    "weight",     # FP16 weights and other right-hand MM operands
    "act16",      # FP16 left-hand MM operands (BP gradients)
    "output",     # MM outputs and partial sums
    "potential",  # membrane potentials kept from FP for BP
    "bn",         # BN outputs, centered inputs and statistics
    "mask",       # spikes and spike-gradient masks kept from FP for BP
    "grad",       # potential/spike gradients
    "wgrad",      # weight gradients
)


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    kind: str
    width: int
    read_pj_per_bit: float
    write_pj_per_bit: float
    # None means unlimited (DRAM, registers)
    volume_bits: int | None = None

    def validate(self, where: str) -> None:
        _require(self.kind in MEMORY_KINDS, f"{where}.kind",
                 f"must be one of {MEMORY_KINDS}, got {self.kind!r}")
        _require(isinstance(self.width, int) and self.width >= 1, f"{where}.width",
                 f"must be >= 1, got {self.width!r}")
        for name in ("read_pj_per_bit", "write_pj_per_bit"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and math.isfinite(v) and v > 0,
                     f"{where}.{name}", f"must be > 0, got {v!r}")
        if self.kind == "SRAM":
            _require(isinstance(self.volume_bits, int) and self.volume_bits > 0,
                     f"{where}.volume_bits", "SRAM levels need a positive volume")


def _default_levels() -> tuple[MemoryLevel, ...]:
    mbit = 1 << 20
    return (
        MemoryLevel("dram", "DRAM", 16, 8.0, 8.0),
        MemoryLevel("sram_spike", "SRAM", 1, 0.05, 0.06, 4 * mbit),
        MemoryLevel("sram_weight", "SRAM", 16, 0.08, 0.09, 2 * mbit),
        MemoryLevel("sram_act16", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("sram_output", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("sram_potential", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("sram_bn", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("sram_mask", "SRAM", 1, 0.05, 0.06, 4 * mbit),
        MemoryLevel("sram_grad", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("sram_wgrad", "SRAM", 16, 0.08, 0.09, 4 * mbit),
        MemoryLevel("reg1", "REGISTER", 1, 0.005, 0.006),
        MemoryLevel("reg16", "REGISTER", 16, 0.005, 0.006),
    )


def _default_roles() -> dict[str, str]:
    return {role: f"sram_{role}" for role in MEMORY_ROLES}


@dataclass(frozen=True)
class MemoryConfig:
    """Three-level hierarchy: one DRAM, 1-bit and 16-bit SRAM banks, registers."""

    levels: tuple[MemoryLevel, ...] = field(default_factory=_default_levels)
    roles: dict[str, str] = field(default_factory=_default_roles)

    def validate(self) -> None:
        names = [lv.name for lv in self.levels]
        _require(len(set(names)) == len(names), "memory.levels", "level names must be unique")
        for i, lv in enumerate(self.levels):
            lv.validate(f"memory.levels[{i}]")
        kinds = [lv.kind for lv in self.levels]
        _require(kinds.count("DRAM") == 1, "memory.levels", "exactly one DRAM level required")
        _require("SRAM" in kinds, "memory.levels", "at least one SRAM level required")
        reg_widths = {lv.width for lv in self.levels if lv.kind == "REGISTER"}
        _require({1, 16} <= reg_widths, "memory.levels",
                 "need a 1-bit and a 16-bit register level")
        for role in MEMORY_ROLES:
            _require(role in self.roles, f"memory.roles.{role}", "missing role binding")
            target = self.roles[role]
            _require(target in names, f"memory.roles.{role}", f"unknown level {target!r}")
            _require(self.level(target).kind == "SRAM", f"memory.roles.{role}",
                     f"{target!r} is not an SRAM level")
        _require(set(self.roles) <= set(MEMORY_ROLES), "memory.roles",
                 f"unknown roles {sorted(set(self.roles) - set(MEMORY_ROLES))}")

    def level(self, name: str) -> MemoryLevel:
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise KeyError(name)

    def bank(self, role: str) -> MemoryLevel:
        return self.level(self.roles[role])

    @property
    def dram(self) -> MemoryLevel:
        for lv in self.levels:
            if lv.kind == "DRAM":
                return lv
        raise ValueError("no DRAM level to spill to")

    def register(self, bits: int) -> MemoryLevel:
        regs = [lv for lv in self.levels if lv.kind == "REGISTER"]
        want = 1 if bits == 1 else 16
        return next(lv for lv in regs if lv.width == want)


SPARSITY_MODES = ("measured", "fixed")


@dataclass(frozen=True)
class SparsityConfig:
    """How s_s, s_smg and s_pg are obtained.

    ``measured`` runs the functional kernel once on a reduced block with a
    fixed seed; ``fixed`` takes the three values below verbatim.
    """

    mode: str = "measured"
    s_s: float = 0.2
    s_smg: float = 0.2
    s_pg: float = 0.3
    seed: int = 0
    # reduced dimensions for the measurement pass
    probe_BS: int = 2
    probe_P: int = 4
    probe_d_model: int = 64
    probe_h: int = 4

    def validate(self) -> None:
        _require(self.mode in SPARSITY_MODES, "sparsity.mode",
                 f"must be one of {SPARSITY_MODES}, got {self.mode!r}")
        for name in ("s_s", "s_smg", "s_pg"):
            v = getattr(self, name)
            _require(isinstance(v, (int, float)) and 0.0 <= v <= 1.0,
                     f"sparsity.{name}", f"must lie in [0, 1], got {v!r}")
        _require(isinstance(self.seed, int), "sparsity.seed", "must be an integer")
        for name in ("probe_BS", "probe_P", "probe_d_model", "probe_h"):
            v = getattr(self, name)
            _require(isinstance(v, int) and v >= 1, f"sparsity.{name}", "must be an integer >= 1")
        _require(self.probe_d_model % self.probe_h == 0, "sparsity.probe_d_model",
                 "must be divisible by probe_h")
        _require(self.probe_BS * self.probe_P ** 2 >= 2, "sparsity.probe_BS",
                 "probe batch needs at least 2 BN samples per timestep")


ELEMENTWISE_MODES = ("overlap", "serial")

# BP MM stages whose left operand passes through the spike-gradient mask
DEFAULT_MASK_GATED = ("dB", "dA", "dZ", "dQ_proj", "dK_proj", "dV_proj")


@dataclass(frozen=True)
class SimConfig:
    """Knobs of the latency/energy models that are not hardware parameters."""

    elementwise_mode: str = "overlap"
    # lanes for element-wise units; None means D_col
    lanes: int | None = None
    mask_gated_bp: tuple[str, ...] = DEFAULT_MASK_GATED

    def validate(self) -> None:
        _require(self.elementwise_mode in ELEMENTWISE_MODES, "sim.elementwise_mode",
                 f"must be one of {ELEMENTWISE_MODES}, got {self.elementwise_mode!r}")
        _require(self.lanes is None or (isinstance(self.lanes, int) and self.lanes >= 1),
                 "sim.lanes", "must be null or an integer >= 1")


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    array: ArrayConfig = field(default_factory=ArrayConfig)
    memory: MemoryConfig = field(default_factory=MemoryConfig)
    coefficients: EnergyCoefficients = field(default_factory=EnergyCoefficients)
    sparsity: SparsityConfig = field(default_factory=SparsityConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    dataflow: str = "OS_C"

    def validate(self) -> None:
        self.model.validate()
        self.array.validate()
        self.memory.validate()
        self.coefficients.validate()
        self.sparsity.validate()
        self.sim.validate()
        from .mapping import dataflow_names

        _require(self.dataflow in dataflow_names(), "dataflow",
                 f"unknown dataflow {self.dataflow!r}")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["memory"]["levels"] = [asdict(lv) for lv in self.memory.levels]
        d["sim"]["mask_gated_bp"] = list(self.sim.mask_gated_bp)
        return d

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _build(cls, data: Any, where: str, **overrides):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(where, f"expected an object, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(where, f"unknown field(s) {sorted(unknown)}")
    kwargs = dict(data)
    kwargs.update(overrides)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(where, str(exc)) from None


def config_from_dict(data: dict[str, Any]) -> RunConfig:
    """Build and validate a RunConfig; omitted sections and fields take defaults."""
    if not isinstance(data, dict):
        raise ConfigError("<root>", "top level must be a JSON object")
    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError("<root>", f"unknown section(s) {sorted(unknown)}")

    mem = data.get("memory") or {}
    if not isinstance(mem, dict):
        raise ConfigError("memory", "expected an object")
    mem_kwargs: dict[str, Any] = {}
    if "levels" in mem:
        if not isinstance(mem["levels"], list):
            raise ConfigError("memory.levels", "expected a list")
        mem_kwargs["levels"] = tuple(
            _build(MemoryLevel, lv, f"memory.levels[{i}]") for i, lv in enumerate(mem["levels"])
        )
    if "roles" in mem:
        roles = _default_roles()
        roles.update(mem["roles"])
        mem_kwargs["roles"] = roles
    extra = set(mem) - {"levels", "roles"}
    if extra:
        raise ConfigError("memory", f"unknown field(s) {sorted(extra)}")

    sim = dict(data.get("sim") or {})
    if "mask_gated_bp" in sim:
        sim["mask_gated_bp"] = tuple(sim["mask_gated_bp"])

    cfg = RunConfig(
        model=_build(ModelConfig, data.get("model"), "model"),
        array=_build(ArrayConfig, data.get("array"), "array"),
        memory=MemoryConfig(**mem_kwargs),
        coefficients=_build(EnergyCoefficients, data.get("coefficients"), "coefficients"),
        sparsity=_build(SparsityConfig, data.get("sparsity"), "sparsity"),
        sim=_build(SimConfig, sim, "sim"),
        dataflow=data.get("dataflow", "OS_C"),
    )
    cfg.validate()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"malformed JSON in {path}: {exc}") from None
    return config_from_dict(data)


def dump_config(cfg: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
