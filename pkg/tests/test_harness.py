import csv
import json

import numpy as np
import pytest

from rmrelax.harness import cli
from rmrelax.harness.compare import compare, compare_tables
from rmrelax.harness.config import ConfigError, load_config, parse_config
from rmrelax.harness.io import SchemaError, read_manifest, read_trajectory, write_table
from rmrelax.harness.report import bundle_reports
from rmrelax.harness.run import run

VANHOVE = """
model.s = 0.5
model.v = 1.0
model.E = 0.2
model.dos.kind = "gaussian_convolution"
model.dos.J = 1
engine.kind = "vanhove"
grid.tau = [0.0, 0.5, 1.0]
rho0.diag = [1.0, 0.0]
"""

MC = """
model.s = 0.5
model.v = 0.5
model.E = 0.0
model.dos.kind = "gaussian_convolution"
model.dos.J = 1
engine.kind = "mc"
engine.n = 8
engine.R = 2
engine.master_seed = 5
grid.t = { start = 0.0, stop = 2.0, num = 5 }
rho0.re = [[0.6, 0.2], [0.2, 0.4]]
"""


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_vanhove_smallest_run(tmp_path):
    out = run(load_config(_write(tmp_path, VANHOVE)), out=tmp_path / "vh")
    tab = read_trajectory(out.csv)
    assert tab["t"].size == 3
    assert np.allclose(tab["rho_pp"] + tab["rho_mm"], 1.0, atol=1e-15)
    assert "mode_gamma_p" in tab
    man = read_manifest(out.manifest)
    assert man["config"]["model"]["E"] == 0.2
    assert {"numpy", "scipy", "rmrelax"} <= set(man["versions"])
    assert man["wall_clock_s"] >= 0


def test_mc_smoke_reports_stderr(tmp_path):
    out = run(load_config(_write(tmp_path, MC)), out=tmp_path / "mc")
    tab = read_trajectory(out.csv)
    assert tab["t"].size == 5
    for c in ("rho_pp_stderr", "rho_pm_re_stderr", "p_pm_stderr"):
        assert c in tab and np.all(np.isfinite(tab[c]))
    assert read_manifest(out.manifest)["master_seed"] == 5


def test_invalid_rho0_names_field(tmp_path, capsys):
    bad = VANHOVE.replace("[1.0, 0.0]", "[0.5, 0.4]")
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, bad))
    assert info.value.path == "rho0"
    code = cli.main(["vanhove", "--config", str(tmp_path / "cfg.toml"), "--out", str(tmp_path / "x")])
    assert code == 2
    assert "rho0" in capsys.readouterr().err


@pytest.mark.parametrize("edit, path", [
    (("model.s = 0.5\n", ""), "model.s"),
    (("grid.tau = [0.0, 0.5, 1.0]", "grid.tau = [0.0, 1.0, 0.5]"), "grid.tau"),
    (('model.dos.kind = "gaussian_convolution"', 'model.dos.kind = "nope"'), "model.dos.kind"),
    (("model.dos.J = 1", "model.dos.J = 0"), "model.dos"),
    (("model.v = 1.0", "model.v = -1.0"), "model.v"),
])
def test_config_errors_carry_field_paths(tmp_path, edit, path):
    with pytest.raises(ConfigError) as info:
        load_config(_write(tmp_path, VANHOVE.replace(*edit)))
    assert info.value.path == path


def test_engine_conflict_and_e_from_J():
    raw = {"model": {"s": 0.5, "v": 0.5, "J": 4, "e": -0.5, "dos": {"kind": "lattice", "delta": 1.0}},
           "engine": {"kind": "analytic"}, "grid": {"t": [0.0, 1.0]}, "rho0": {"diag": [1.0, 0.0]}}
    assert parse_config(raw).E == -2.0
    with pytest.raises(ConfigError, match="engine.kind"):
        parse_config(raw, engine="mc")


def test_manifest_round_trip_vanhove(tmp_path):
    cfg = _write(tmp_path, VANHOVE)
    assert cli.main(["vanhove", "--config", str(cfg), "--out", str(tmp_path / "a")]) == 0
    man = tmp_path / "a" / "manifest.json"
    assert cli.main(["vanhove", "--config", str(man), "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_manifest_round_trip_mc_across_workers(tmp_path):
    cfg = _write(tmp_path, MC)
    assert cli.main(["mc", "--config", str(cfg), "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    man = tmp_path / "a" / "manifest.json"
    assert cli.main(["mc", "--config", str(man), "--out", str(tmp_path / "b"), "--workers", "3"]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()
    assert cli.main(["mc", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "6"]) == 0
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() != (tmp_path / "c" / "trajectory.csv").read_bytes()
    assert read_manifest(tmp_path / "c" / "manifest.json")["config"]["engine"]["master_seed"] == 6


def test_csv_full_precision(tmp_path):
    x = np.array([1 / 3, np.pi * 1e-12, -2.0 / 7])
    write_table(tmp_path / "x.csv", {"t": np.arange(3.0), "v": x})
    tab = read_trajectory(tmp_path / "x.csv")
    assert np.array_equal(tab["v"], x)


def test_compare_identity_symmetry_and_errors(tmp_path):
    a = run(load_config(_write(tmp_path, VANHOVE)), out=tmp_path / "a").csv
    rep = compare(a, a, 0.0)
    assert rep.passed and rep.max_deviation() == 0.0
    other = VANHOVE.replace("model.E = 0.2", "model.E = 0.0")
    b = run(load_config(_write(tmp_path, other, "b.toml")), out=tmp_path / "b").csv
    ab, ba = compare(a, b, 0.02), compare(b, a, 0.02)
    for c in ab.diff:
        assert np.array_equal(ab.diff[c], -ba.diff[c])
    assert ab.verdicts == ba.verdicts
    # mismatched columns
    tab = read_trajectory(a)
    tab.pop("p_pm")
    write_table(tmp_path / "broken.csv", tab)
    with pytest.raises(SchemaError):
        compare(a, tmp_path / "broken.csv", 0.02)
    # different grids need interpolation, and they must overlap
    tab = read_trajectory(a)
    shifted = dict(tab, t=tab["t"] + 10.0)
    with pytest.raises(SchemaError):
        compare_tables(tab, shifted, 0.02)
    with pytest.raises(SchemaError):
        compare_tables(tab, shifted, 0.02, interpolate=True)
    fine = {k: np.interp(np.linspace(0, 1, 11), tab["t"], v) for k, v in tab.items()}
    fine["t"] = np.linspace(0, 1, 11)
    assert compare_tables(tab, fine, 1e-12, interpolate=True).passed


def test_compare_stat_allowance():
    t = np.arange(3.0)
    base = {c: np.zeros(3) for c in ("rho_pp", "rho_mm", "rho_pm_re", "rho_pm_im", "p_pp", "p_pm", "p_mp", "p_mm")}
    A = dict(base, t=t, rho_pp_stderr=np.full(3, 0.01))
    B = dict(base, t=t, rho_pp=np.full(3, 0.045))
    assert not compare_tables(A, B, 0.02).passed
    rep = compare_tables(A, B, 0.02, stat_allowance=True)
    assert rep.passed and rep.verdicts["rho_pp"] == "PASS"


def test_cli_compare_and_report(tmp_path, capsys):
    a = run(load_config(_write(tmp_path, VANHOVE)), out=tmp_path / "a").csv
    assert cli.main(["compare", str(a), str(a), "--out", str(tmp_path / "cmp")]) == 0
    doc = json.loads((tmp_path / "cmp" / "comparison.json").read_text())
    assert doc["verdict"] == "PASS"
    assert cli.main(["report", str(tmp_path / "cmp"), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "report.json").exists()
    summ = bundle_reports([tmp_path / "cmp"])
    assert summ["verdict"] == "PASS"
    tab = read_trajectory(a)
    tab["rho_pp"] = tab["rho_pp"] + 0.5
    write_table(tmp_path / "far.csv", tab)
    assert cli.main(["compare", str(a), str(tmp_path / "far.csv"), "--out", str(tmp_path / "cmp2")]) == 1
    assert cli.main(["compare", str(a), str(tmp_path / "nope.csv"), "--out", str(tmp_path / "cmp3")]) != 0
    capsys.readouterr()


def test_cli_dos_and_spectral(tmp_path):
    cfg = _write(tmp_path, """
model.dos.kind = "gaussian_convolution"
model.dos.J = 1
model.J = 4
model.s = 0.5
model.v = 0.6
model.beta = 1.0
grid.E = { start = -3.0, stop = 3.0, num = 7 }
grid.lam = { start = -3.0, stop = 3.0, num = 61 }
spectral.h = 1e-6
""")
    assert cli.main(["dos", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    with open(tmp_path / "d" / "dos.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[3]["nu0"]) == pytest.approx(1 / np.sqrt(8 * np.pi))
    assert {"e", "sJ", "beta"} <= set(rows[0])
    assert cli.main(["spectral", "--config", str(cfg), "--out", str(tmp_path / "s")]) == 0
    with open(tmp_path / "s" / "spectral.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    lam = np.array([float(r["lambda"]) for r in rows])
    nu = np.array([[float(r["nu_plus"]), float(r["nu_minus"])] for r in rows])
    assert np.all(nu >= 0) and np.trapezoid(nu.sum(axis=1), lam) > 1.5
    man = read_manifest(tmp_path / "s" / "manifest.json")
    assert sum(man["equilibrium_canonical"]) == pytest.approx(1.0)


def test_evolve_writes_decomposition(tmp_path):
    cfg = _write(tmp_path, """
model.s = 0.5
model.v = 0.5
model.E = 0.0
model.dos.kind = "gaussian_convolution"
model.dos.J = 1
grid.t = [0.0, 1.0, 2.0]
rho0.diag = [1.0, 0.0]
""")
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 0
    tab = read_trajectory(tmp_path / "e" / "trajectory.csv")
    assert tab["rho_pp"][0] == pytest.approx(1.0, abs=1e-3)
    dec = read_trajectory(tmp_path / "e" / "decomposition.csv")
    assert np.allclose(dec["stationary_pp"] + dec["regular_pp"], tab["rho_pp"], atol=1e-12)


def test_analytic_rejects_banded_interaction(tmp_path, capsys):
    cfg = _write(tmp_path, """
model.s = 0.5
model.v = 0.5
model.E = 0.0
model.dos.kind = "gaussian_convolution"
model.dos.J = 1
model.interaction.kind = "lorentzian"
model.interaction.b = 1.0
grid.t = [0.0, 1.0]
rho0.diag = [1.0, 0.0]
""")
    assert cli.main(["evolve", "--config", str(cfg), "--out", str(tmp_path / "e")]) == 2
    assert "model.interaction" in capsys.readouterr().err


@pytest.mark.slow
def test_cli_cross_engine_compare_flat_regime(tmp_path):
    from rmrelax.dos import ScaledFlat

    A, a = 0.1, 10.0
    v = float(np.sqrt(A / (np.pi * ScaledFlat("gaussian", a).pdf(0.0))))
    common = f"""
model.s = 0.3
model.v = {v!r}
model.E = 0.0
model.dos.kind = "scaled_flat"
model.dos.profile = "gaussian"
model.dos.a = {a}
grid.t = {{ start = 0.0, stop = 12.5, num = 26 }}
rho0.diag = [1.0, 0.0]
"""
    mc = _write(tmp_path, common + "engine.n = 256\nengine.R = 200\nengine.master_seed = 2024\n", "mc.toml")
    an = _write(tmp_path, common, "an.toml")
    assert cli.main(["mc", "--config", str(mc), "--out", str(tmp_path / "mc")]) == 0
    assert cli.main(["evolve", "--config", str(an), "--out", str(tmp_path / "an")]) == 0
    args = [str(tmp_path / "mc" / "trajectory.csv"), str(tmp_path / "an" / "trajectory.csv")]
    assert cli.main(["compare", *args, "--stat-allowance", "--tolerance", "0.02", "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "comparison.json").read_text())
    assert rep["verdicts"]["rho_pp"] == "PASS" and rep["verdict"] == "PASS"
