import pytest

from stsim.config import ConfigError, ModelConfig
from stsim.workload import (BP_STEPS, StageSpec, build_bp_stages, build_fp_stages,
                            build_training_graph, build_wg_stages, derive_dims)


def test_derived_dims_defaults():
    d = derive_dims(ModelConfig())
    assert (d.d_h, d.N, d.S) == (64, 196, 12544)


def test_derived_dims_unit_scale():
    d = derive_dims(ModelConfig(BS=1, T=1, P=1))
    assert (d.S, d.N) == (1, 1)


def test_derive_dims_rejects_indivisible_heads():
    with pytest.raises(ConfigError, match="divisible"):
        derive_dims(ModelConfig(d_model=500, h=8))


def _mm(graph, label, block=0):
    return next(s for s in graph if s.is_mm and s.label == label and s.block == block)


def test_fp_dims():
    cfg = ModelConfig()
    fp = build_fp_stages(cfg, derive_dims(cfg))
    for p in "QKV":
        assert _mm(fp, f"{p}_linear").dims == (12544, 512, 512)
    qk = _mm(fp, "attn_qk")
    assert qk.dims == (196, 64, 196) and qk.instances == 512
    assert (qk.input_precision, qk.weight_precision) == (1, 1)
    assert _mm(fp, "A_linear").dims == (12544, 512, 2048)
    assert _mm(fp, "B_linear").dims == (12544, 2048, 512)


def test_bp_enumeration():
    cfg = ModelConfig()
    bp = build_bp_stages(cfg, derive_dims(cfg))
    blk = bp.block(cfg.L - 1)
    steps = sorted({s.step for s in blk})
    assert steps == list(range(1, 14)) and len(BP_STEPS) == 13
    mms = blk.mm_stages()
    assert len(mms) == 10
    assert mms[0].label == "dB" and mms[0].dims == (12544, 512, 2048)
    # V gradient before the score gradient
    labels = [s.label for s in mms]
    assert labels.index("dV") < labels.index("dQKt") < labels.index("dQ")
    assert all(s.input_precision == 16 for s in mms)
    # backward runs from the last block
    assert next(iter(bp)).block == cfg.L - 1


def test_bp_replicates_per_block():
    cfg = ModelConfig(L=2)
    bp = build_bp_stages(cfg, derive_dims(cfg))
    assert len(bp.mm_stages()) == 20
    assert len({(s.block, s.step) for s in bp}) == 26


def test_wg_dims():
    cfg = ModelConfig()
    wg = build_wg_stages(cfg, derive_dims(cfg))
    assert _mm(wg, "W_O").dims == (512, 12544, 512)
    assert len(wg.block(0).mm_stages()) == 6
    assert sorted({s.step for s in wg.block(0)}) == [1, 2, 3, 4]
    unit = ModelConfig(BS=1, T=1, P=1)
    assert _mm(build_wg_stages(unit, derive_dims(unit)), "W_O").dims == (512, 1, 512)


def test_weight_pairing():
    """Every FP linear has one BP transpose and one WG stage shaped like its weight."""
    cfg = ModelConfig(L=2)
    g = build_training_graph(cfg)
    for s in g.phase("FP").mm_stages():
        if s.weight_name is None:
            continue
        B, C, K = s.dims
        bp = [t for t in g.phase("BP").mm_stages() if t.weight_name == s.weight_name and t.block == s.block]
        wg = [t for t in g.phase("WG").mm_stages() if t.weight_name == s.weight_name and t.block == s.block]
        assert len(bp) == 1 and bp[0].dims == (B, K, C)
        assert len(wg) == 1 and (wg[0].dims[0], wg[0].dims[2]) == (C, K)


def test_default_graph_totals(default_graph):
    assert len(default_graph) == 432
    assert default_graph.total_macs == 1_007_463_432_192


def test_graph_deterministic():
    cfg = ModelConfig()
    assert build_training_graph(cfg).stages == build_training_graph(cfg).stages


def test_stage_spec_validation():
    base = dict(kind="MM", label="x", step=1, block=0, input_precision=1,
                weight_precision=16, output_precision=16)
    with pytest.raises(ValueError):
        StageSpec(phase="XX", dims=(1, 1, 1), **base)
    with pytest.raises(ValueError):
        StageSpec(phase="FP", dims=(0, 1, 1), **base)
