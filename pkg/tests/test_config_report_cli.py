import csv
import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stsim.cli import EXIT_CONFIG, EXIT_GRADCHECK, EXIT_OK, EXIT_OUTPUT, main
from stsim.config import (ConfigError, ModelConfig, RunConfig, SparsityConfig, config_from_dict,
                          dump_config, load_config)
from stsim.gradcheck import run_gradcheck
from stsim.report import (CSV_HEADER, STAGE_METRICS, SUMMARY_METRICS, emit_report, rank,
                          run_simulate, run_sweep)


def test_minimal_config_takes_defaults(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"model": {}}')
    cfg = load_config(p)
    m = cfg.model
    assert (m.h, m.d_model, m.T, m.BS, m.P) == (8, 512, 4, 16, 14)
    assert (cfg.array.D_row, cfg.array.D_col) == (64, 64)
    assert cfg == RunConfig()


def test_validation_names_field():
    with pytest.raises(ConfigError, match="divisible") as exc:
        config_from_dict({"model": {"d_model": 500, "h": 8}})
    assert "model" in str(exc.value)
    with pytest.raises(ConfigError, match="sparsity.s_s"):
        config_from_dict({"sparsity": {"mode": "fixed", "s_s": 1.5}})
    with pytest.raises(ConfigError, match="unknown"):
        config_from_dict({"model": {"heads": 8}})
    with pytest.raises(ConfigError, match="dataflow"):
        config_from_dict({"dataflow": "XS_Q"})


def test_malformed_file(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{model: ")
    with pytest.raises(ConfigError, match="malformed"):
        load_config(p)
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")


def test_round_trip_digest(tmp_path):
    cfg = config_from_dict({"model": {"L": 2, "alpha": 0.25}, "dataflow": "WS_B"})
    dump_config(cfg, tmp_path / "e.json")
    again = load_config(tmp_path / "e.json")
    assert again == cfg and again.digest() == cfg.digest()


@settings(max_examples=30, deadline=None)
@given(h=st.sampled_from([1, 2, 4, 8]), k=st.integers(1, 16), T=st.integers(1, 8),
       alpha=st.floats(0.01, 1.0), th_f=st.floats(-2, 2), gap=st.floats(0.01, 3))
def test_round_trip_property(h, k, T, alpha, th_f, gap):
    d = {"model": {"h": h, "d_model": h * k, "T": T, "alpha": alpha, "th_f": th_f, "th_r": th_f + gap}}
    cfg = config_from_dict(d)
    assert config_from_dict(json.loads(json.dumps(cfg.to_dict()))).digest() == cfg.digest()


def small_cfg(**kw):
    return RunConfig(model=ModelConfig(L=1, BS=2, P=4, d_model=64, h=4),
                     sparsity=SparsityConfig(mode="fixed"), **kw)


def test_simulate_report_structure():
    r = run_simulate(RunConfig())
    assert r.dataflow == "OS_C" and r.config_digest == RunConfig().digest()
    assert set(r.energy.cells) == {"FP", "BP", "WG"}
    for cells in r.energy.cells.values():
        assert set(cells) == {"MM", "BN", "LIF", "RES"}
    assert r.config["model"]["h"] == 8
    assert r.energy.phase_totals["BP"] > max(r.energy.phase_totals["FP"], r.energy.phase_totals["WG"])


def test_json_round_trip(tmp_path):
    r = run_simulate(small_cfg())
    emit_report(r, "json", tmp_path / "r.json")
    assert json.loads((tmp_path / "r.json").read_text()) == json.loads(json.dumps(r.to_dict()))


def test_csv_structure(tmp_path):
    sw = run_sweep(small_cfg())
    emit_report(sw, "csv", tmp_path / "s.csv")
    rows = list(csv.reader((tmp_path / "s.csv").open()))
    assert tuple(rows[0]) == CSV_HEADER
    n_stages = len(sw.reports[0].stages)
    assert len(rows) - 1 == 9 * (n_stages * len(STAGE_METRICS) + len(SUMMARY_METRICS))
    eff = [r for r in rows[1:] if r[4] == "tflops_per_watt"]
    assert sorted(r[0] for r in eff) == sorted(x.dataflow for x in sw.reports)
    # full precision: values parse back to the in-memory floats
    by_df = {r[0]: float(r[5]) for r in eff}
    for rep in sw.reports:
        assert by_df[rep.dataflow] == rep.tflops_per_watt


def test_sweep_ranking_is_pure_function_of_totals(tmp_path):
    sw = run_sweep(small_cfg())
    assert len(sw.reports) == 9 and len({r.dataflow for r in sw.reports}) == 9
    text = emit_report(sw, "csv", None)
    totals = {r["dataflow"]: float(r["value"]) for r in csv.DictReader(io.StringIO(text))
              if r["metric"] == "total_energy_j"}
    order = [r.dataflow for r in sw.reports]
    assert [n for n, _ in sw.energy_ranking] == sorted(totals, key=lambda n: (totals[n], order.index(n)))
    assert rank(list(reversed(sw.reports))) == (sw.energy_ranking, sw.latency_ranking)


def test_emit_errors(tmp_path):
    r = run_simulate(small_cfg())
    with pytest.raises(ValueError):
        emit_report(r, "xml", None)
    with pytest.raises(OSError):
        emit_report(r, "json", tmp_path / "missing_dir" / "r.json")


def test_measured_sparsity_is_seeded():
    a = run_simulate(RunConfig(), seed=3)
    b = run_simulate(RunConfig(), seed=3)
    c = run_simulate(RunConfig(), seed=4)
    assert a.sparsity == b.sparsity and a.sparsity != c.sparsity


@pytest.mark.parametrize("seed", [0, 1])
def test_gradcheck_passes(seed):
    s = run_gradcheck(RunConfig(), seed)
    assert s.passed, s.lines()
    bn_dx = next(c for c in s.checks if c.name == "bn_dx")
    assert bn_dx.max_error < 1e-4


def test_gradcheck_negative_control():
    s = run_gradcheck(RunConfig(), 0, corrupt=True, n_bptt=20, n_bn=3, n_matmul=20)
    assert not s.passed


# CLI

def test_cli_simulate_and_exit_codes(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["simulate", "--dataflow", "WS_B", "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["dataflow"] == "WS_B"
    bad = tmp_path / "bad.json"
    bad.write_text('{"model": {"d_model": 500}}')
    assert main(["simulate", "--config", str(bad)]) == EXIT_CONFIG
    assert "d_model" in capsys.readouterr().err
    assert main(["simulate", "--output", str(tmp_path / "no" / "x.json")]) == EXIT_OUTPUT


def test_cli_sweep_csv(tmp_path):
    cfgp = tmp_path / "c.json"
    cfgp.write_text(json.dumps(small_cfg().to_dict()))
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", str(cfgp), "--format", "csv", "--output", str(out)]) == EXIT_OK
    assert out.read_text().startswith(",".join(CSV_HEADER))


def test_cli_gradcheck_and_print_config(capsys):
    assert main(["gradcheck", "--seed", "1"]) == EXIT_OK
    assert main(["gradcheck", "--corrupt"]) == EXIT_GRADCHECK
    capsys.readouterr()
    assert main(["print-config"]) == EXIT_OK
    printed = json.loads(capsys.readouterr().out)
    assert config_from_dict(printed) == RunConfig()


def test_cli_stdout(capsys):
    assert main(["simulate", "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.startswith("dataflow,phase")
