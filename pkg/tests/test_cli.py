import csv
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from qspec.cli import fmt, main
from qspec.config import parse_config
from qspec.scans import spectrum_rows


def run(tmp_path, command, text, *extra):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = main([command, "--config", str(cfg), "--out", str(out), *extra])
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_spectrum_grid_cardinality_and_bitwise_values(tmp_path):
    text = "lambda_min_nm = 605\nlambda_max_nm = 612.5\nlambda_steps = 2\n" \
           "theta_min_mrad = 0.3\ntheta_max_mrad = 2.7\ntheta_steps = 2\n"
    code, out = run(tmp_path, "spectrum", text)
    assert code == 0
    header, rows = read_csv(out / "spectrum.csv")
    assert header == ["lambda_s_nm", "theta_mrad", "intensity"]
    assert len(rows) == 4
    rc = parse_config(text)
    expect = spectrum_rows(rc.optical, np.array([605.0, 612.5]) * 1e-9, np.array([0.3, 2.7]) * 1e-3)
    for got, want in zip(rows, expect):
        assert [float(x) for x in got] == [float(x) for x in want]


def test_seventeen_digit_format_round_trips():
    rng = np.random.default_rng(0)
    for x in rng.standard_normal(1000) * 10.0 ** rng.integers(-20, 20, 1000):
        assert float(fmt(x)) == x
    assert fmt(3) == "3" and fmt(np.int64(7)) == "7"


def test_cross_section_with_sidecar(tmp_path):
    code, out = run(tmp_path, "cross-section", "theta_min_mrad = 1.5\ntheta_max_mrad = 3.2\ntheta_steps = 171\n")
    assert code == 0
    header, rows = read_csv(out / "cross_section.csv")
    assert header == ["theta_mrad", "intensity", "delta_rad", "delta_m_rad"]
    assert len(rows) == 171
    side = json.loads((out / "cross_section_extrema.json").read_text())
    kinds = [e["kind"] for e in side["extrema"]]
    assert "peak" in kinds and "valley" in kinds


def test_variance_map_columns(tmp_path):
    text = "n_steps = 3\nalpha_steps = 2\n"
    code, out = run(tmp_path, "variance-map", text)
    assert code == 0
    header, rows = read_csv(out / "variance_map.csv")
    assert header == ["n_i_m", "alpha_per_cm", "var_n", "var_alpha", "cov", "singular_flag"]
    assert len(rows) == 6
    assert all(r[5] in ("0", "1") for r in rows)


@pytest.mark.parametrize("text", [
    "alpha_per_cm = 0.2\nscan_parameter = n_i_m\nangle_mode = auto-peak-valley\nn_steps = 41\n",
    "n_idler_medium = 0.99993\nscan_parameter = alpha\nangle_mode = auto-peak-valley\nalpha_steps = 46\n",
])
def test_regret_scan_band(tmp_path, text):
    code, out = run(tmp_path, "regret-scan", text)
    assert code == 0
    header, rows = read_csv(out / "regret_scan.csv")
    assert header == ["scan_value", "delta_n", "delta_alpha", "delta_n_approx",
                      "delta_alpha_approx", "sum", "sum_approx"]
    sums = np.array([float(r[5]) for r in rows])
    assert np.all((sums >= 1.45) & (sums <= 1.55))


def test_tradeoff_check_json(tmp_path):
    code, out = run(tmp_path, "tradeoff-check", "")
    assert code == 0
    rep = json.loads((out / "tradeoff_check.json").read_text())
    assert rep["pass"] is True
    assert set(rep["selections"]) == {"peak/valley", "peak/peak", "valley/valley"}


def test_montecarlo_json_and_seed_override(tmp_path):
    text = "angle_mode = auto-quadrature\ntrials = 100\nshots = 100000000\n"
    code, out = run(tmp_path, "montecarlo", text, "--seed", "17", "--threads", "2")
    assert code == 0
    rec = json.loads((out / "montecarlo.json").read_text())
    assert rec["seed"] == 17 and rec["trials"] == 100
    first = (out / "montecarlo.json").read_bytes()
    run(tmp_path, "montecarlo", text, "--seed", "17")
    assert (out / "montecarlo.json").read_bytes() == first


def test_config_error_sets_exit_status(tmp_path, capsys):
    code, _ = run(tmp_path, "spectrum", "# header\nalpha_per_cm = -1\n")
    assert code == 1
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "config" and rec["line"] == 2 and rec["command"] == "spectrum"


def test_module_error_sets_exit_status(tmp_path, capsys):
    # an opaque medium has no fringes for auto selection
    code, _ = run(tmp_path, "variance-map", "alpha_per_cm = 1000\nangle_mode = auto-peak-valley\n")
    assert code == 1
    rec = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert rec["error"] == "no_fringe"


def test_missing_config_file(tmp_path, capsys):
    code = main(["spectrum", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)])
    assert code == 1
    assert "error" in json.loads(capsys.readouterr().err)


def test_console_script_and_thread_variable(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_steps = 2\nalpha_steps = 2\n")
    env = dict(os.environ, QSPEC_THREADS="3")
    cmd = [sys.executable, "-m", "qspec.cli", "variance-map", "--config", str(cfg), "--out", str(tmp_path / "a")]
    done = subprocess.run(cmd, env=env, capture_output=True, text=True)
    assert done.returncode == 0, done.stderr
    assert main(["variance-map", "--config", str(cfg), "--out", str(tmp_path / "b"), "--threads", "1"]) == 0
    assert (tmp_path / "a" / "variance_map.csv").read_bytes() == (tmp_path / "b" / "variance_map.csv").read_bytes()
    bad = subprocess.run(cmd[:-2] + ["--out", str(tmp_path / "c")], env=dict(env, QSPEC_THREADS="x"),
                         capture_output=True, text=True)
    assert bad.returncode == 1
