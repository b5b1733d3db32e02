import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from kdvk.cli import EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main
from kdvk.config import PRESET_NAMES, ConfigError, load, resolve


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out)])
    return code, out


def write_ini(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])


# -- config ------------------------------------------------------------------------------


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_presets_load(name):
    cfg = load(preset=name)
    assert cfg.name == name
    assert cfg.to_json()["scenario"]["name"] == name


def test_extends_and_override():
    d = resolve("[scenario]\nextends = radius-sech\n[initial]\namplitude = 0.25\n")
    assert d["grid"]["n"] == 4096
    assert d["initial"]["amplitude"] == 0.25
    assert d["scenario"]["name"] == "radius-sech"


@pytest.mark.parametrize("text", [
    "[grid]\nsize = 10\n",
    "[bogus]\nx = 1\n",
    "[grid]\nn = many\n",
    "[equation]\nalpha = 0\n",
    "[grid]\nn = 100\n",
    "[integrator]\ndt = 0.007\n",
    "[damping]\nkind = wavy\n",
    "[initial]\nfamily = hat\n",
    "[scenario]\nextends = nowhere\n",
])
def test_bad_configs(text):
    with pytest.raises(ConfigError):
        load_text(text)


def load_text(text):
    from kdvk.config import RunConfig
    return RunConfig.from_dict(resolve(text))


def test_seed_override():
    assert load(preset="default", seed=7).probe.seed == 7


# -- simulate --------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def default_outputs(tmp_path_factory):
    outs = []
    for i in range(2):
        out = tmp_path_factory.mktemp(f"sim{i}")
        assert main(["simulate", "--preset", "default", "--out", str(out)]) == EXIT_OK
        outs.append(out)
    return outs


def test_simulate_outputs(default_outputs):
    out = default_outputs[0]
    header, data = read_csv(out / "timeseries.csv")
    assert header[:2] == ["t", "l2"]
    assert header[-3:] == ["radius_sigma_hat", "radius_residual", "l2_identity_residual"]
    assert data.shape[0] == 601
    assert data[-1, 0] == pytest.approx(6.0)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["records"] == 601
    assert not summary["aborted"]
    assert summary["verdict"]["half_rate_pass"]
    assert summary["l2_decay"]["pass"]
    assert summary["l2_identity_max_abs_residual"] < 1e-6
    assert summary["assumptions"]["summability_pass"] and summary["assumptions"]["floor_pass"]
    assert summary["config"]["integrator"]["dt"] == 0.0025


def test_simulate_byte_identical(default_outputs):
    a, b = default_outputs
    for name in ("timeseries.csv", "summary.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_simulate_from_file(tmp_path):
    ini = write_ini(tmp_path, "[scenario]\nextends = linear-decay\nT = 3.0\n")
    code, out = run(tmp_path, "simulate", "--config", ini)
    assert code == EXIT_OK
    summary = json.loads((out / "summary.json").read_text())
    assert summary["records"] == 301
    assert summary["verdict"]["half_rate_pass"]


def test_zero_field_simulate(tmp_path):
    code, out = run(tmp_path, "simulate", "--preset", "zero-field")
    assert code == EXIT_OK
    _, data = read_csv(out / "timeseries.csv")
    assert np.all(data[:, 1] == 0)


# -- radius and picard ------------------------------------------------------------------------------


def test_zero_field_radius_is_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "radius", "--preset", "zero-field")
    assert code == EXIT_CONFIG
    assert "zero" in capsys.readouterr().err


def test_radius_sech(tmp_path):
    ini = write_ini(tmp_path, "[scenario]\nextends = radius-sech\nT = 0.2\n")
    code, out = run(tmp_path, "radius", "--config", ini)
    assert code == EXIT_OK
    rep = json.loads((out / "radius.json").read_text())
    assert rep["first"]["sigma_hat"] == pytest.approx(np.pi / 2, rel=1e-3)
    assert not rep["all_entire"]
    with open(out / "radius.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == rep["records"]
    assert {r["entire_beyond_window"] for r in rows} == {"false"}
    assert float(rows[0]["sigma_hat"]) == rep["first"]["sigma_hat"]


def test_radius_gaussian_is_entire(tmp_path):
    ini = write_ini(tmp_path, "[scenario]\nextends = radius-gaussian\nT = 0.2\n")
    code, out = run(tmp_path, "radius", "--config", ini)
    assert code == EXIT_OK
    assert json.loads((out / "radius.json").read_text())["all_entire"]


def test_picard_small(tmp_path):
    code, out = run(tmp_path, "picard", "--preset", "picard-small")
    assert code == EXIT_OK
    rep = json.loads((out / "picard.json").read_text())["report"]
    assert rep["converged"]
    assert max(rep["contraction_ratios"]) < 1


# -- probes --------------------------------------------------------------------------------------


def test_probe_triangle(tmp_path):
    code, out = run(tmp_path, "probe", "triangle", "--preset", "default")
    assert code == EXIT_OK
    assert json.loads((out / "probe_triangle.json").read_text())["report"]["violations"] == 0


def test_probe_weight_violation(tmp_path, capsys):
    ini = write_ini(tmp_path, "[probe]\na_exp = 0.5\nb_exp = 1.0\n")
    code, out = run(tmp_path, "probe", "weight", "--config", ini)
    assert code == EXIT_CONFIG
    assert "a >= b" in capsys.readouterr().err
    assert not (out / "probe_weight.json").exists()


def test_probe_bilinear_small(tmp_path):
    ini = write_ini(tmp_path, "[probe]\nn_samples = 5\ngrid_sizes = 64 128\n")
    code, out = run(tmp_path, "probe", "bilinear", "--config", ini)
    assert code == EXIT_OK
    rep = json.loads((out / "probe_bilinear.json").read_text())["report"]
    assert rep["pass"] and rep["n_valid"] == 5


def test_probe_trilinear_hypothesis(tmp_path):
    ini = write_ini(tmp_path, "[probe]\nb = 0.75\nb_prime = 0.8\nn_samples = 2\n")
    assert run(tmp_path, "probe", "trilinear", "--config", ini)[0] == EXIT_CONFIG


def test_probe_damping_small(tmp_path):
    ini = write_ini(tmp_path, "[probe]\nn_samples = 5\ngrid_sizes = 64 128\n[damping]\nkind = sine\nwavenumber = 0.25\n")
    code, out = run(tmp_path, "probe", "damping", "--config", ini)
    assert code == EXIT_OK
    assert json.loads((out / "probe_damping.json").read_text())["report"]["pass"]


# -- exit codes --------------------------------------------------------------------------------


def test_alpha_zero_names_alpha(tmp_path, capsys):
    ini = write_ini(tmp_path, "[equation]\nalpha = 0\n")
    assert run(tmp_path, "simulate", "--config", ini)[0] == EXIT_CONFIG
    assert "alpha" in capsys.readouterr().err


def test_unknown_key(tmp_path, capsys):
    ini = write_ini(tmp_path, "[integrator]\nstep = 0.1\n")
    assert run(tmp_path, "simulate", "--config", ini)[0] == EXIT_CONFIG
    assert "step" in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert run(tmp_path, "simulate", "--config", str(tmp_path / "nope.ini"))[0] == EXIT_CONFIG


def test_bad_arguments():
    assert main(["simulate"]) == EXIT_CONFIG
    assert main(["frobnicate", "--out", "x"]) == EXIT_CONFIG


def test_cfl_violation_is_numeric_abort(tmp_path, capsys):
    ini = write_ini(tmp_path, "[scenario]\nT = 2.0\n[initial]\namplitude = 200\n[integrator]\ndt = 0.01\n")
    assert run(tmp_path, "simulate", "--config", ini)[0] == EXIT_NUMERIC
    err = capsys.readouterr().err
    assert "stability bound" in err and "max|u| = 200" in err


def test_blow_up_keeps_partial_output(tmp_path):
    ini = write_ini(tmp_path, "[scenario]\nT = 2.0\n[initial]\namplitude = 200\n"
                              "[integrator]\ndt = 0.01\nrecord_every = 1\ncfl = 1e300\n")
    code, out = run(tmp_path, "simulate", "--config", ini)
    assert code == EXIT_NUMERIC
    summary = json.loads((out / "summary.json").read_text())
    assert summary["aborted"]
    assert "non-finite" in summary["abort_message"]
    assert summary["records"] >= 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "kdvk", "probe", "triangle", "--preset", "default",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "probe_triangle.json").exists()
