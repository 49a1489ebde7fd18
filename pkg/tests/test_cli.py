import csv
import json
from pathlib import Path

import numpy as np
import pytest

from floquet_invisibility.cli import main
from floquet_invisibility.config import load_config
from floquet_invisibility.output import fmt, spectrum_header

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
FIGURES = ["fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig5a", "fig5b"]


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.mark.parametrize("name", FIGURES)
def test_figure_configs_ship_and_validate(name):
    cfg = load_config(CONFIGS / f"{name}.toml")
    assert cfg.kind in ("spectrum", "wavepacket")


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(float("nan")) == "" and fmt(None) == ""
    assert fmt(2.0) == "2"


def test_spectrum_fig2d(tmp_path):
    assert main(["spectrum", "--config", str(CONFIGS / "fig2d.toml"), "--out", str(tmp_path), "--grid", "400"]) == 0
    rows = _read(tmp_path / "spectrum.csv")
    assert list(rows[0]) == spectrum_header(3)
    assert len(rows) == 400
    window = [r for r in rows if -2 < float(r["E"]) < -0.5]
    assert window
    assert max(abs(float(r["T"]) - 1) for r in window) < 1e-8
    # only the alpha <= 0 side is populated inside the window; alpha = -1 is evanescent there
    assert all(r["T_-1"] == "" for r in window)
    assert (tmp_path / "spectrum.svg").read_text().startswith("<?xml")


def test_spectrum_csv_is_byte_identical(tmp_path):
    args = ["spectrum", "--config", str(CONFIGS / "fig2b.toml"), "--grid", "200"]
    main(args + ["--out", str(tmp_path / "a")])
    main(args + ["--out", str(tmp_path / "b")])
    assert (tmp_path / "a/spectrum.csv").read_bytes() == (tmp_path / "b/spectrum.csv").read_bytes()
    assert (tmp_path / "a/spectrum.svg").read_bytes() == (tmp_path / "b/spectrum.svg").read_bytes()


def test_wavepacket_fig5a(tmp_path):
    assert main(["wavepacket", "--config", str(CONFIGS / "fig5a.toml"), "--out", str(tmp_path)]) == 0
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["invisible"]
    assert metrics["max_site_deviation"] < 1e-2 and abs(metrics["norm_final"] - 1) < 1e-2
    norm = _read(tmp_path / "norm.csv")
    assert float(norm[0]["P"]) == pytest.approx(1.0)
    with open(tmp_path / "snapshots.csv") as fh:
        header = fh.readline().strip()
    assert header == "t,n,re_c,im_c"
    assert (tmp_path / "spacetime.svg").exists()


def test_wavepacket_fig4b_scatters(tmp_path):
    assert main(["wavepacket", "--config", str(CONFIGS / "fig4b.toml"), "--out", str(tmp_path)]) == 0
    edge = json.loads((tmp_path / "metrics.json").read_text())
    main(["wavepacket", "--config", str(CONFIGS / "fig4a.toml"), "--out", str(tmp_path / "in")])
    inside = json.loads((tmp_path / "in/metrics.json").read_text())
    assert edge["residual_near_scatterer"] > 10 * inside["residual_near_scatterer"]


def test_boundstates(tmp_path):
    assert main(["boundstates", "--config", str(CONFIGS / "boundstates.toml"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "boundstates.json").read_text())
    assert rep["no_bound_states"] and rep["certified_regime"]


def test_dt_override_is_validated(tmp_path, capsys):
    code = main(["wavepacket", "--config", str(CONFIGS / "fig4a.toml"), "--out", str(tmp_path), "--dt", "0.5"])
    assert code != 0
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ValidationError" and err["field"] == "dt"


def test_errors_are_json_on_stderr(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "spectrum"\nv0 = 2\nomeag = 1.5\ndelta = 1\n')
    assert main(["spectrum", "--config", str(bad), "--out", str(tmp_path / "o")]) != 0
    err = json.loads(capsys.readouterr().err)
    assert err == {"error": "ParseError", "field": "omeag", "line": 3, "message": err["message"]}


def test_runtime_failure_exit_status(tmp_path, capsys):
    cfg = tmp_path / "wp.toml"
    cfg.write_text('kind = "wavepacket"\nv0 = 1\nomega = 1.5\ndelta = 1\nq0 = 2\nn0 = -5\n')
    assert main(["wavepacket", "--config", str(cfg), "--out", str(tmp_path / "o")]) != 0
    assert json.loads(capsys.readouterr().err)["error"] == "GeometryError"


def test_missing_config_file(tmp_path, capsys):
    assert main(["spectrum", "--config", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) != 0
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_spectrum_csv_matches_solver(tmp_path):
    from floquet_invisibility.model import LatticeModel, momentum_from_energy
    from floquet_invisibility.single import solve_amplitudes

    main(["spectrum", "--config", str(CONFIGS / "fig2b.toml"), "--out", str(tmp_path), "--grid", "20"])
    m = LatticeModel.single(2.0, 1.5, 0.6)
    for r in _read(tmp_path / "spectrum.csv")[::5]:
        amp = solve_amplitudes(momentum_from_energy(float(r["E"])), m)
        assert float(r["T"]) == pytest.approx(amp.T_total, rel=1e-11)
        t0 = amp.channel(0)
        assert float(r["T_0"]) == pytest.approx(t0, rel=1e-11)
        assert np.isnan(amp.channel(3)) == (r["T_3"] == "")


def test_verify_table_and_exit_status(tmp_path, monkeypatch, capsys):
    from floquet_invisibility import cli
    from floquet_invisibility.checks import CheckResult

    def fake(include_extra, echo, seed):
        results = [("1", CheckResult("a", True, "ok")), ("2", CheckResult("b", passed, "off"))]
        for k, r in results:
            echo(f"{k:>20}  {r.line()}")
        return results

    monkeypatch.setattr(cli, "run_all", fake)
    passed = True
    assert cli.main(["verify", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "[PASS] a: ok" in out and "2/2 passed" in out
    passed = False
    assert cli.main(["verify", "--config", str(CONFIGS / "verify.toml"), "--out", str(tmp_path)]) != 0
    assert json.loads((tmp_path / "verify.json").read_text())["failed"] == ["2"]
