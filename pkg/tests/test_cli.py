import json

import pytest

from cuspmorrey.cli import ConfigError, emit_report, load_config, main, run_config

CUSP = '{"kind": "cusp", "gamma": 0.5, "W": [[-1, 1]], "a": -2}'


def _verify(tmp_path, check, params, domain=CUSP):
    return main(["verify", "--check", check, "--domain", domain, "--params", json.dumps(params),
                 "--out", str(tmp_path)])


def test_campanato_gate_exit_2(tmp_path, capsys):
    # λ = 2 < n_γ = 3
    assert _verify(tmp_path, "campanato_embedding", {"function": "x1", "params": {"p": 1, "lam": 2.0}}) == 2
    assert "λ > n_γ" in capsys.readouterr().err


def test_schema_violation_exit_2(tmp_path):
    assert _verify(tmp_path, "campanato_embedding", {}, domain='{"kind": "nope"}') == 2
    with pytest.raises(ConfigError, match="schema violation"):
        load_config({"domain": {"kind": "box"}, "bogus": 1})


def test_unknown_function_exit_2(tmp_path):
    assert _verify(tmp_path, "campanato_embedding", {"function": "missing", "params": {"p": 1, "lam": 4}}) == 2


def test_check_failure_exit_1(tmp_path):
    neg = {"kind": "gamma_power", "center": [0.0, -1.0], "exponent": 0.25, "gamma": 0.5}
    item = {"function": neg, "params": {"p": 2, "lam": 4.0}, "refine": {"pairs": 2000, "resolution": 32}}
    assert _verify(tmp_path, "campanato_embedding", item) == 1
    rep = json.loads((tmp_path / "00_campanato_embedding.json").read_text())
    assert rep["passed"] is False
    assert len(rep["provenance"]["config_hash"]) == 16 and len(rep["provenance"]["kernel_hash"]) == 16


def test_numerical_error_exit_3(tmp_path):
    # A = 8 with a = -2 pushes shifted supports out of the domain
    item = {"function": "x1*x2", "params": {"l": 2, "p": 2, "lam": 1.5},
            "extension": {"l": 2, "A": 8.0, "box_lo": [-0.25, -0.5], "box_hi": [0.25, 0.0], "shape": [16, 16]}}
    with pytest.warns(UserWarning):
        assert _verify(tmp_path, "extension_corollary", item) == 3


def test_bundled_config_passes_and_is_deterministic(tmp_path):
    with pytest.warns(UserWarning):
        status, results, paths = run_config(load_config("cusp-gamma-0.5.json", out=tmp_path / "a"))
        assert status == 0 and all(r.passed for r in results)
        run_config(load_config("cusp-gamma-0.5.json", out=tmp_path / "b", threads=3))
    for p in paths:
        assert (tmp_path / "b" / p.name).read_bytes() == p.read_bytes()
    summary = (tmp_path / "a" / "summary.csv").read_text().splitlines()
    assert summary[0] == "report,check_id,function,passed,predicted,measured"
    assert len(summary) == len(results) + 1


def test_config_hash_tracks_content():
    a = load_config("cusp-gamma-0.5.json")
    b = load_config("cusp-gamma-0.5.json", seed=7)
    c = load_config("cusp-gamma-0.5.json", threads=4)
    assert a.hash != b.hash and a.hash == c.hash


def test_empty_results_raise(tmp_path):
    with pytest.raises(ValueError, match="no results"):
        emit_report([], tmp_path)


def test_geometry_and_extend_outputs(tmp_path, monkeypatch):
    monkeypatch.setenv("CUSPMORREY_OUT", str(tmp_path))
    assert main(["geometry", "--config", "cusp-gamma-0.5.json"]) == 0
    header = (tmp_path / "00_measure_exponent_geometry.csv").read_text().splitlines()[0]
    assert header == "x,r,measure,error"
    header = (tmp_path / "00_measure_exponent.csv").read_text().splitlines()[0]
    assert header.startswith("r,measure,err,log_r")
    with pytest.warns(UserWarning):
        assert main(["extend", "--config", "cusp-gamma-0.5.json"]) == 0
    prov = json.loads((tmp_path / "00_extension_provenance.json").read_text())
    assert {"A", "Q", "k_range", "kernel_hash"} <= set(prov)
    field = json.loads((tmp_path / "00_extension_field.json").read_text())
    assert field["format"] == "cuspmorrey-field-1" and "config_hash" in field["extra"]


def test_embedding_plot_csv(tmp_path):
    item = {"function": "x1", "params": {"p": 2, "lam": 1.0}, "refine": {"pairs": 2000, "resolution": 32}}
    assert _verify(tmp_path, "daprato_convex", item, domain='{"kind": "box", "lo": [0, 0], "hi": [1, 1]}') == 0
    rows = (tmp_path / "00_daprato_convex.csv").read_text().splitlines()
    assert rows[0] == "distance,oscillation,log_distance,log_oscillation" and len(rows) > 5
