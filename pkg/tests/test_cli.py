import json

import pytest

from patchproc import cli

MA_CONFIG = {
    "schema": 1,
    "family": "one_patch_ma",
    "params": {"beta": 4, "mu": 0.05, "alpha": 3.3, "delta": 1.3, "omega": 4},
}

TWO_PATCH_CONFIG = {
    "schema": 1,
    "family": "two_patch",
    "params": {"beta1": 4, "mu1": 0.05, "beta2": 2.4, "mu2": 0.04,
               "alpha": 3.3, "delta": 1.3, "omega": 4, "k": 3},
}


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_r0_two_patch(capsys, tmp_path):
    path = write_config(tmp_path, TWO_PATCH_CONFIG)
    code, out = run(capsys, "r0", "--config", path)
    assert code == 0
    assert out["r0_patch1"] == pytest.approx(29.76, abs=0.01)
    assert out["r0_patch2"] == pytest.approx(22.32, abs=0.01)
    assert out["r0"] == pytest.approx(30.0, abs=0.5)
    assert out["resolved_config"]["params"]["k"] == 3


def test_extinct_one_patch(capsys, tmp_path):
    path = write_config(tmp_path, MA_CONFIG)
    code, out = run(capsys, "extinct", "--config", path)
    assert code == 0
    assert out["q"] == pytest.approx([0.0406, 0.0495], abs=5e-5)
    assert out["method"] == "closed_form"


def test_dfe_and_endemic(capsys, tmp_path):
    path = write_config(tmp_path, MA_CONFIG)
    code, out = run(capsys, "dfe", "--config", path)
    assert code == 0
    assert out["dfe"] == pytest.approx([80, 0, 0])
    code, out = run(capsys, "endemic", "--config", path)
    assert code == 0
    assert out["residual"] < 1e-10
    assert out["infectious_total"] == pytest.approx(3.875, abs=1e-2)


def test_endemic_subcritical_is_numerical_failure(capsys, tmp_path):
    cfg = dict(MA_CONFIG, params=dict(MA_CONFIG["params"], beta=0.01))
    path = write_config(tmp_path, cfg)
    code, _ = run(capsys, "endemic", "--config", path)
    assert code == 3


def test_unknown_config_key_rejected(capsys, tmp_path):
    path = write_config(tmp_path, dict(MA_CONFIG, bogus=1))
    code, _ = run(capsys, "r0", "--config", path)
    assert code == 2


def test_unknown_param_key_rejected(capsys, tmp_path):
    cfg = dict(MA_CONFIG, params=dict(MA_CONFIG["params"], zeta=2))
    path = write_config(tmp_path, cfg)
    code, _ = run(capsys, "r0", "--config", path)
    assert code == 2


def test_family_shape_mismatch_rejected(capsys, tmp_path):
    cfg = dict(TWO_PATCH_CONFIG, family="one_patch_ma")
    path = write_config(tmp_path, cfg)
    code, _ = run(capsys, "r0", "--config", path)
    assert code == 2


def test_bad_init_rejected(capsys, tmp_path):
    path = write_config(tmp_path, dict(MA_CONFIG, init=[80, 1]))
    code, _ = run(capsys, "mc", "--config", path, "--n", "10")
    assert code == 2


def test_scalar_overrides(capsys, tmp_path):
    path = write_config(tmp_path, MA_CONFIG)
    code, out = run(capsys, "r0", "--config", path, "--params.beta", "8")
    assert code == 0
    assert out["r0"] == pytest.approx(2 * 32.1212, abs=0.01)
    code, _ = run(capsys, "r0", "--config", path, "--params.nope", "8")
    assert code == 2


def test_mc_command(capsys, tmp_path):
    path = write_config(tmp_path, dict(MA_CONFIG, init=[80, 1, 0]))
    code, out = run(capsys, "mc", "--config", path, "--n", "2000",
                    "--seed", "11")
    assert code == 0
    assert out["n"] == 2000
    assert 0 < out["p_hat"] < 0.2
    assert out["outbreak_threshold"] == 4
    assert out["resolved_config"]["family"] == "one_patch_ma"


def test_quick_flag_scales_n(capsys, tmp_path):
    path = write_config(tmp_path, MA_CONFIG)
    code, out = run(capsys, "mc", "--config", path, "--n", "2000", "--quick")
    assert code == 0
    assert out["n"] == 20


def test_simulate_writes_log(capsys, tmp_path):
    path = write_config(tmp_path, dict(MA_CONFIG, init=[80, 1, 0]))
    code, out = run(capsys, "simulate", "--config", path, "--seed", "3",
                    "--out", str(tmp_path))
    assert code == 0
    assert out["kind"] in ("extinct", "outbreak", "censored")
    lines = (tmp_path / "realization.csv").read_text().strip().splitlines()
    assert lines[0] == "event_index,t,reaction_label,S,I,V"
    assert len(lines) == out["events_used"] + 1


def test_ode_command(capsys, tmp_path):
    cfg = dict(MA_CONFIG, init=[240, 1, 0], t_end=10.0)
    cfg["params"] = dict(cfg["params"], beta=12)
    path = write_config(tmp_path, cfg)
    code, out = run(capsys, "ode", "--config", path, "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "trajectory.csv").exists()


def test_oracle_command(capsys, tmp_path):
    cfg = dict(MA_CONFIG, init=[80, 1, 0], caps=[160, 10, 10])
    path = write_config(tmp_path, cfg)
    code, out = run(capsys, "oracle", "--config", path)
    assert code == 0
    assert out["lower"] == pytest.approx(0.0407, abs=1e-3)
    assert out["upper"] >= out["lower"]
    cfg.pop("caps")
    path = write_config(tmp_path, cfg)
    code, _ = run(capsys, "oracle", "--config", path)
    assert code == 2


def test_table_command(capsys, tmp_path):
    code, out = run(capsys, "table", "T4", "--n", "2000", "--seed", "1",
                    "--out", str(tmp_path))
    assert code == 0
    assert (tmp_path / "T4.csv").exists()
    assert (tmp_path / "manifest.json").exists()


def test_sweep_command(capsys, tmp_path):
    cfg = {"schema": 1, "family": "one_patch_ma",
           "params": {"beta": 10, "mu": 1, "alpha": 3.3, "delta": 1.3,
                      "omega": 4},
           "betas": [10, 20]}
    path = write_config(tmp_path, cfg)
    code, out = run(capsys, "sweep", "--config", path, "--n", "2000",
                    "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert len(lines) == 3


def test_fit_command(capsys, tmp_path):
    pts = tmp_path / "points.csv"
    pts.write_text("x,y\n" + "\n".join(f"{x},{3 * x ** -2}"
                                       for x in (1, 2, 3, 4, 5)))
    cfg = {"schema": 1, "points_csv": str(pts)}
    path = write_config(tmp_path, cfg)
    code, out = run(capsys, "fit", "--config", path)
    assert code == 0
    assert out["b"] == pytest.approx(3.0, abs=1e-10)
    assert out["lambda"] == pytest.approx(-2.0, abs=1e-10)


def test_round_trip_reproducibility(capsys, tmp_path):
    path = write_config(tmp_path, dict(MA_CONFIG, init=[80, 1, 0]))
    code, first = run(capsys, "mc", "--config", path, "--n", "500",
                      "--seed", "42")
    assert code == 0
    resolved = write_config(tmp_path, first["resolved_config"], "resolved.json")
    code, second = run(capsys, "mc", "--config", resolved, "--n", "500",
                       "--seed", "42")
    assert code == 0
    assert first == second
