"""Stage graphs for one training step of a SpikingFormer-style block stack.

Each MM stage computes an (B, C) x (C, K) product: B output rows, C the
reduction length, K output columns. For BP and WG stages the local axes carry
different forward-pass meanings; ``roles`` records which forward-pass label
(B, C or K) each local axis carries so the dataflow rules, which are phrased in
forward-pass labels, can be applied to every phase.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .config import DEFAULT_MASK_GATED, ConfigError, ModelConfig

PHASES = ("FP", "BP", "WG")
KINDS = ("MM", "BN", "SOMA", "GRAD", "RES")
BINDINGS = ("s_s", "s_smg", "s_pg", "none")

# forward-pass label carried by the local (B, C, K) axes
PHASE_ROLES = {
    "FP": ("B", "C", "K"),
    "BP": ("B", "K", "C"),  # dX = dY (B,K) x W^T (K,C)
    "WG": ("C", "B", "K"),  # dW = X^T (C,B) x dY (B,K)
}

FP_STEPS = ("QKV", "SSA", "Z", "A", "B")
BP_STEPS = (
    "dB_linear", "GRAD_B", "dA_linear", "GRAD_A", "dZ_linear", "GRAD_attnout",
    "dV", "dQKt", "dQ", "dK", "dQ_proj", "dK_proj", "dV_proj",
)
WG_STEPS = ("W_B", "W_A", "W_O", "W_QKV")


@dataclass(frozen=True)
class DerivedDims:
    d_h: int
    N: int
    S: int


def derive_dims(cfg: ModelConfig) -> DerivedDims:
    if cfg.d_model % cfg.h:
        raise ConfigError("model.d_model", f"d_model={cfg.d_model} must be divisible by h={cfg.h}")
    N = cfg.P * cfg.P
    return DerivedDims(d_h=cfg.d_model // cfg.h, N=N, S=cfg.BS * cfg.T * N)


@dataclass(frozen=True)
class StageSpec:
    phase: str
    kind: str
    label: str
    step: int  # 1-based numbered stage within the phase
    block: int
    input_precision: int
    weight_precision: int
    output_precision: int
    dims: tuple[int, int, int] | None = None
    elements: int = 0
    instances: int = 1
    features: int = 0  # BN only: number of normalized features
    sparsity_binding: str = "none"
    weight_name: str | None = None  # set on MMs that touch a learnable weight

    def __post_init__(self):
        if self.phase not in PHASES or self.kind not in KINDS:
            raise ValueError(f"bad stage {self.phase}/{self.kind}")
        if self.sparsity_binding not in BINDINGS:
            raise ValueError(f"bad sparsity binding {self.sparsity_binding!r}")
        if self.kind == "MM":
            if self.dims is None or min(self.dims) < 1 or self.instances < 1:
                raise ValueError(f"MM stage {self.label} needs positive dims")
        elif self.elements < 1:
            raise ValueError(f"element-wise stage {self.label} needs elements >= 1")

    @property
    def is_mm(self) -> bool:
        return self.kind == "MM"

    @property
    def roles(self) -> tuple[str, str, str]:
        return PHASE_ROLES[self.phase]

    @property
    def macs(self) -> int:
        if not self.is_mm:
            return 0
        B, C, K = self.dims
        return B * C * K * self.instances

    @property
    def step_name(self) -> str:
        return {"FP": FP_STEPS, "BP": BP_STEPS, "WG": WG_STEPS}[self.phase][self.step - 1]


@dataclass(frozen=True)
class StageGraph:
    stages: tuple[StageSpec, ...]

    def __iter__(self) -> Iterator[StageSpec]:
        return iter(self.stages)

    def __len__(self) -> int:
        return len(self.stages)

    def __add__(self, other: "StageGraph") -> "StageGraph":
        return StageGraph(self.stages + other.stages)

    def mm_stages(self) -> list[StageSpec]:
        return [s for s in self.stages if s.is_mm]

    def phase(self, phase: str) -> "StageGraph":
        return StageGraph(tuple(s for s in self.stages if s.phase == phase))

    def block(self, block: int) -> "StageGraph":
        return StageGraph(tuple(s for s in self.stages if s.block == block))

    @property
    def total_macs(self) -> int:
        return sum(s.macs for s in self.stages)


def _mm(phase, label, step, block, dims, inp, wt, out, binding, instances=1, weight_name=None):
    return StageSpec(phase=phase, kind="MM", label=label, step=step, block=block,
                     dims=tuple(dims), instances=instances, input_precision=inp,
                     weight_precision=wt, output_precision=out,
                     sparsity_binding=binding, weight_name=weight_name)


def _ew(phase, kind, label, step, block, elements, b, features=0, binding="none"):
    out = 1 if kind == "SOMA" else b
    return StageSpec(phase=phase, kind=kind, label=label, step=step, block=block,
                     elements=elements, features=features, input_precision=b,
                     weight_precision=b, output_precision=out, sparsity_binding=binding)


def _fp_block(cfg: ModelConfig, dims: DerivedDims, blk: int) -> list[StageSpec]:
    S, d, b = dims.S, cfg.d_model, cfg.b
    r = cfg.mlp_ratio * d
    heads = cfg.BS * cfg.T * cfg.h
    N, dh = dims.N, dims.d_h
    st: list[StageSpec] = [_ew("FP", "SOMA", "in_soma", 1, blk, S * d, b)]
    for p in "QKV":
        st += [
            _mm("FP", f"{p}_linear", 1, blk, (S, d, d), 1, b, b, "s_s", weight_name=f"W_{p}"),
            _ew("FP", "BN", f"{p}_bn", 1, blk, S * d, b, features=d),
            _ew("FP", "SOMA", f"{p}_soma", 1, blk, S * d, b),
        ]
    st += [
        _mm("FP", "attn_qk", 2, blk, (N, dh, N), 1, 1, b, "s_s", instances=heads),
        _mm("FP", "attn_v", 2, blk, (N, N, dh), 1, 1, b, "s_s", instances=heads),
        _ew("FP", "SOMA", "attn_soma", 2, blk, S * d, b),
        _mm("FP", "Z_linear", 3, blk, (S, d, d), 1, b, b, "s_s", weight_name="W_O"),
        _ew("FP", "BN", "Z_bn", 3, blk, S * d, b, features=d),
        _ew("FP", "RES", "Z_res", 3, blk, S * d, b),
        _ew("FP", "SOMA", "mlp_in_soma", 3, blk, S * d, b),
        _mm("FP", "A_linear", 4, blk, (S, d, r), 1, b, b, "s_s", weight_name="W_A"),
        _ew("FP", "BN", "A_bn", 4, blk, S * r, b, features=r),
        _ew("FP", "SOMA", "A_soma", 4, blk, S * r, b),
        _mm("FP", "B_linear", 5, blk, (S, r, d), 1, b, b, "s_s", weight_name="W_B"),
        _ew("FP", "BN", "B_bn", 5, blk, S * d, b, features=d),
        _ew("FP", "RES", "B_res", 5, blk, S * d, b),
    ]
    return st


def _bp_block(cfg: ModelConfig, dims: DerivedDims, blk: int, gated) -> list[StageSpec]:
    S, d, b = dims.S, cfg.d_model, cfg.b
    r = cfg.mlp_ratio * d
    heads = cfg.BS * cfg.T * cfg.h
    N, dh = dims.N, dims.d_h

    def g(label):
        return "s_smg" if label in gated else "none"

    st: list[StageSpec] = [
        _ew("BP", "BN", "B_bn_bp", 1, blk, S * d, b, features=d),
        _mm("BP", "dB", 1, blk, (S, d, r), b, b, b, g("dB"), weight_name="W_B"),
        _ew("BP", "GRAD", "A_grad", 2, blk, S * r, b, binding="s_pg"),
        _ew("BP", "BN", "A_bn_bp", 2, blk, S * r, b, features=r),
        _mm("BP", "dA", 3, blk, (S, r, d), b, b, b, g("dA"), weight_name="W_A"),
        _ew("BP", "GRAD", "mlp_in_grad", 4, blk, S * d, b, binding="s_pg"),
        _ew("BP", "RES", "B_res_bp", 4, blk, S * d, b),
        _ew("BP", "BN", "Z_bn_bp", 4, blk, S * d, b, features=d),
        _mm("BP", "dZ", 5, blk, (S, d, d), b, b, b, g("dZ"), weight_name="W_O"),
        _ew("BP", "GRAD", "attn_grad", 6, blk, S * d, b, binding="s_pg"),
        # V first: dV and the score gradient both need dO
        _mm("BP", "dV", 7, blk, (N, N, dh), b, b, b, g("dV"), instances=heads),
        _mm("BP", "dQKt", 8, blk, (N, dh, N), b, 1, b, g("dQKt"), instances=heads),
        _mm("BP", "dQ", 9, blk, (N, N, dh), b, 1, b, g("dQ"), instances=heads),
        _mm("BP", "dK", 10, blk, (N, N, dh), b, 1, b, g("dK"), instances=heads),
    ]
    for i, p in enumerate("QKV"):
        step = 11 + i
        st += [
            _ew("BP", "GRAD", f"{p}_grad", step, blk, S * d, b, binding="s_pg"),
            _ew("BP", "BN", f"{p}_bn_bp", step, blk, S * d, b, features=d),
            _mm("BP", f"d{p}_proj", step, blk, (S, d, d), b, b, b, g(f"d{p}_proj"),
                weight_name=f"W_{p}"),
        ]
    st += [
        _ew("BP", "GRAD", "in_grad", 13, blk, S * d, b, binding="s_pg"),
        _ew("BP", "RES", "Z_res_bp", 13, blk, S * d, b),
    ]
    return st


def _wg_block(cfg: ModelConfig, dims: DerivedDims, blk: int) -> list[StageSpec]:
    S, d, b = dims.S, cfg.d_model, cfg.b
    r = cfg.mlp_ratio * d
    st = [
        _mm("WG", "W_B", 1, blk, (r, S, d), 1, b, b, "s_s", weight_name="W_B"),
        _mm("WG", "W_A", 2, blk, (d, S, r), 1, b, b, "s_s", weight_name="W_A"),
        _mm("WG", "W_O", 3, blk, (d, S, d), 1, b, b, "s_s", weight_name="W_O"),
    ]
    st += [_mm("WG", f"W_{p}", 4, blk, (d, S, d), 1, b, b, "s_s", weight_name=f"W_{p}")
           for p in "QKV"]
    return st


def build_fp_stages(cfg: ModelConfig, dims: DerivedDims) -> StageGraph:
    """Forward pass, blocks in execution order."""
    stages: list[StageSpec] = []
    for blk in range(cfg.L):
        stages += _fp_block(cfg, dims, blk)
    return StageGraph(tuple(stages))


def build_bp_stages(cfg: ModelConfig, dims: DerivedDims,
                    mask_gated: tuple[str, ...] = DEFAULT_MASK_GATED) -> StageGraph:
    """Backward pass, last block first. 13 numbered stages per block."""
    stages: list[StageSpec] = []
    for blk in reversed(range(cfg.L)):
        stages += _bp_block(cfg, dims, blk, set(mask_gated))
    return StageGraph(tuple(stages))


def build_wg_stages(cfg: ModelConfig, dims: DerivedDims) -> StageGraph:
    stages: list[StageSpec] = []
    for blk in reversed(range(cfg.L)):
        stages += _wg_block(cfg, dims, blk)
    return StageGraph(tuple(stages))


def build_training_graph(cfg: ModelConfig,
                         mask_gated: tuple[str, ...] = DEFAULT_MASK_GATED) -> StageGraph:
    dims = derive_dims(cfg)
    return (build_fp_stages(cfg, dims) + build_bp_stages(cfg, dims, mask_gated)
            + build_wg_stages(cfg, dims))
