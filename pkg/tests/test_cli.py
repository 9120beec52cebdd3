import csv
import json

import pytest

from rwdecay.cli import main
from rwdecay.config import ConfigError, parse_config

SMALL = {"grid": {"x_min": -200, "x_max": 300, "n": 2501}, "t_final": 100,
         "analysis": {"fit_window": [10, 100]}, "outputs": {"energy_every": 5}}


def run(tmp_path, cfg, *args):
    tmp_path.mkdir(parents=True, exist_ok=True)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    out = tmp_path / "out"
    return main(["--config", str(path), "--out", str(out), *args]), out


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_verify_potential_default(tmp_path):
    code, out = run(tmp_path, {}, "verify-potential")
    assert code == 0
    doc = json.loads((out / "condition_report.json").read_text())
    assert doc["feasible"] and set(doc["constants"]) == {"C", "b1", "b2"}
    assert len(doc["modes"]) == 21
    assert set(doc["modes"][0]) == {"lambda", "conditions", "constants"}


def test_verify_potential_synthetic_fails(tmp_path, capsys):
    code, _ = run(tmp_path, {"verification": {"family": "synthetic-quadratic"}}, "verify-potential")
    assert code == 1
    assert "(Repulsive 1)" in capsys.readouterr().err
    code, _ = run(tmp_path, {"verification": {"family": "synthetic-negative"}}, "verify-potential")
    assert code == 1
    assert "(Positivity)" in capsys.readouterr().err


@pytest.mark.parametrize("cfg, key", [
    ({"bogus": 1}, "bogus"),
    ({"grid": {"x_min": 0, "nn": 3}}, "grid.nn"),
    ({"courant": 1.5}, "courant"),
    ({"grid": {"n": 2}}, "grid.n"),
    ({"semilinear": {"p": 2}}, "semilinear.p"),
    ({"verification": {"family": "kerr"}}, "verification.family"),
    ({"initial_data": {"width": -1}}, "initial_data.width"),
])
def test_config_errors_name_the_key(tmp_path, capsys, cfg, key):
    code, _ = run(tmp_path, cfg, "verify-potential")
    assert code == 2
    assert key in capsys.readouterr().err


def test_malformed_json_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    assert main(["--config", str(path), "critical-curve"]) == 2
    assert main(["--config", str(tmp_path / "missing.json"), "critical-curve"]) == 2
    assert main(["no-such-command"]) == 2


def test_critical_curve_rows(tmp_path):
    code, out = run(tmp_path, {"verification": {"lambda_list": [0, 1, 2, 5, 10]}}, "critical-curve")
    assert code == 0
    rows = read_rows(out / "critical_curve.csv")
    assert rows[0] == ["lambda", "r_crit", "x0", "q_at_crit", "q2_at_crit"]
    assert rows[1][1] == "2.66666666666667"
    assert rows[2][1] == "2.82842712474619"
    r = [float(row[1]) for row in rows[1:]]
    assert r == sorted(r) and len(set(r)) == len(r)


def test_convergence_command(tmp_path):
    code, out = run(tmp_path, {}, "convergence")
    assert code == 0
    doc = json.loads((out / "convergence.json").read_text())
    assert doc["order"] == pytest.approx(2.0, abs=0.1)
    assert len(doc["pairwise"]) == 2
    code, _ = run(tmp_path, {"convergence": {"resolutions": [451]}}, "convergence")
    assert code == 2


def test_evolve_linear_outputs(tmp_path):
    cfg = dict(SMALL, modes=[{"l": 0}], outputs={"energy_every": 5, "snapshot_every": 400})
    code, out = run(tmp_path, cfg, "evolve-linear")
    assert code == 0
    rows = read_rows(out / "energy_l0_m0.csv")
    assert rows[0] == ["t", "e_basic", "e_morawetz", "mor_ubar_flux", "mor_u_flux", "mor_potential",
                       "e_local", "trapping_integral", "max_abs_psi", "envelope_ratio"]
    assert read_rows(out / "snapshots" / "l0_m0_00000.csv")[0] == ["x", "r", "psi", "dpsi_dt"]
    report = json.loads((out / "decay_report.json").read_text())
    mode = report["modes"][0]
    assert mode["discrete_energy_drift"] < 1e-6
    assert mode["fit"]["exponent"] < 0
    assert (out / "morawetz_total.csv").exists()


def test_evolve_linear_empty_modes(tmp_path):
    code, _ = run(tmp_path, dict(SMALL, modes=[]), "evolve-linear")
    assert code == 2


def test_semilinear_zero_coupling_matches_linear(tmp_path):
    lin = dict(SMALL, modes=[{"l": 0}])
    semi = dict(lin, semilinear={"p": 3, "kappa": 0})
    code1, out1 = run(tmp_path / "a", lin, "evolve-linear")
    code2, out2 = run(tmp_path / "b", semi, "evolve-semilinear")
    assert code1 == code2 == 0
    assert (out1 / "energy_l0_m0.csv").read_bytes() == (out2 / "energy_l0_m0.csv").read_bytes()


def test_semilinear_focusing_reports_blowup(tmp_path):
    cfg = dict(SMALL, modes=[{"l": 0}], semilinear={"p": 3, "kappa": -1},
               initial_data={"center": 10, "width": 2, "amplitude": 10})
    code, out = run(tmp_path, cfg, "evolve-semilinear")
    assert code == 0
    doc = json.loads((out / "semilinear_report.json").read_text())
    assert doc["status"] == "blowup" and 0 < doc["blowup_time"] < 100


def test_semilinear_requires_block_and_l0(tmp_path):
    assert run(tmp_path, dict(SMALL, modes=[{"l": 0}]), "evolve-semilinear")[0] == 2
    cfg = dict(SMALL, modes=[{"l": 1}], semilinear={"p": 3, "kappa": 1})
    assert run(tmp_path, cfg, "evolve-semilinear")[0] == 2


def test_threads_do_not_change_output(tmp_path):
    cfg = dict(SMALL, l_max=2)
    code1, out1 = run(tmp_path / "a", cfg, "evolve-linear")
    code2, out2 = run(tmp_path / "b", cfg, "evolve-linear", "--threads", "3")
    assert code1 == code2 == 0
    for name in ("energy_total.csv", "decay_report.json", "energy_l2_m0.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_decay_report(tmp_path):
    code, out = run(tmp_path, dict(SMALL, l_max=1), "evolve-linear")
    assert code == 0
    code, _ = run(tmp_path, SMALL, "decay-report")
    assert code == 0
    doc = json.loads((out / "analysis.json").read_text())
    assert set(doc) == {"experiment", "fit", "compliance", "halftimes"}
    assert set(doc["fit"]) == {"exponent", "residual"}
    assert doc["compliance"]["max_ratio"] > 0
    assert run(tmp_path / "empty", SMALL, "decay-report")[0] == 2


def test_parse_config_modes_and_profiles():
    cfg = parse_config({"initial_data": {"modes": [{"l": 2, "m": 1, "profile": {"center": 4, "width": 1}},
                                                   {"l": 0}]}})
    assert [(m.l, m.m) for m in cfg.modes] == [(0, 0), (2, 1)]
    assert cfg.profile_for(cfg.modes[1]).center == 4
    with pytest.raises(ConfigError, match="initial_data.modes\\[0\\].profile.shape"):
        parse_config({"initial_data": {"modes": [{"l": 0, "profile": {"shape": 1}}]}})
    with pytest.raises(ConfigError, match="l_max"):
        parse_config({"modes": [{"l": 0}], "l_max": 2})


def test_null_optional_values_mean_unset():
    cfg = parse_config({"analysis": {"probe": None}, "outputs": {"snapshot_every": None}})
    assert cfg.analysis.probe is None
    assert cfg.outputs.snapshot_every is None
