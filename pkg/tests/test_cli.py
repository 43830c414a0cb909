import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from vortexsphere import __version__
from vortexsphere.cli import main
from vortexsphere.dynamics import read_trajectory_csv


def write_cfg(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return str(p)


def run_cli(tmp_path, command, cfg, capsys=None):
    out = tmp_path / "out"
    code = main([command, write_cfg(tmp_path, cfg), "-o", str(out)])
    err = capsys.readouterr().err if capsys else ""
    return code, out, err


ANTIPODAL = {
    "seed": 1,
    "vorticities": [1, 1],
    "simulate": {"initial": [[0, 0, 1], [0, 0, -1]], "T": 1.0, "dt": 0.01},
}


def test_simulate_antipodal_dipole_is_constant(tmp_path):
    code, out, _ = run_cli(tmp_path, "simulate", ANTIPODAL)
    assert code == 0
    t, S = read_trajectory_csv(out / "simulate.csv")
    assert len(t) == 101 and t[-1] == pytest.approx(1.0)
    assert np.max(np.abs(S - S[0])) < 1e-14
    text = (out / "simulate.csv").read_text()
    assert text.startswith("# ") and "config_sha256" in text and "status: ok" in text


def test_simulate_is_deterministic(tmp_path):
    cfg = {"seed": 3, "vorticities": [1, 2, "1/2"], "conformal_factor": {"random": {"L": 2, "amplitude": 0.1}},
           "simulate": {"T": 0.2, "dt": 0.01}}
    run_cli(tmp_path, "simulate", cfg)
    a = (tmp_path / "out" / "simulate.csv").read_bytes()
    run_cli(tmp_path, "simulate", cfg)
    assert (tmp_path / "out" / "simulate.csv").read_bytes() == a


def test_vorticity_report_identical_triple(tmp_path):
    code, out, _ = run_cli(tmp_path, "vorticity-report", {"vorticities": [1, 1, 1]})
    assert code == 0
    rep = json.loads((out / "vorticity_report.json").read_text())
    assert rep["thin"] == [True, True, True]
    assert rep["P1"]["status"] == "pass"
    assert rep["kappa"] == 1 and rep["l"] == [1, 1, 1]
    assert rep["header"]["tool"] == "vortexsphere" and rep["header"]["version"] == __version__


def test_vorticity_report_exact_fractions(tmp_path):
    code, out, _ = run_cli(tmp_path, "vorticity-report", {"vorticities": ["1/2", "3/4"]})
    rep = json.loads((out / "vorticity_report.json").read_text())
    assert code == 0 and rep["beta"] == "1/4" and rep["l"] == [2, 3]


def test_spectrum_round(tmp_path):
    code, out, _ = run_cli(tmp_path, "spectrum", {"spectrum": {"k": 9}})
    ev = json.loads((out / "spectrum.json").read_text())["eigenvalues"]
    assert code == 0
    assert np.allclose(ev, [0, 2, 2, 2, 6, 6, 6, 6, 6], atol=1e-10)


def test_plot_svg(tmp_path):
    run_cli(tmp_path, "simulate", {"vorticities": [1, 2], "simulate": {"T": 0.5, "dt": 0.01}})
    cfg = {"plot": {"input": "out/simulate.csv", "size": 200}}
    code, out, _ = run_cli(tmp_path, "plot", cfg)
    svg = (out / "plot.svg").read_text()
    assert code == 0 and svg.startswith("<svg") and "<!-- tool: vortexsphere -->" in svg
    assert svg.count("<line") == 2 * 50


@pytest.mark.parametrize(
    "cfg, message",
    [
        ({"vorticities": [1, 1], "simulate": {"dt": -1.0}}, "simulate.dt: must be positive"),
        ({"vorticities": [1, 0]}, "vorticities[1]: must be nonzero"),
        ({"vorticities": [1, 1], "simulate": {"initial": [[0, 0, 1], [0, 0, 1]]}}, "simulate.initial: two points coincide"),
        ({"vorticities": [1], "conformal_factor": {"coefficients": [[1, 2, 0.1]]}},
         "conformal_factor.coefficients[0]: |m| must not exceed l"),
        ({"vorticities": [1], "simulate": {"bogus": 1}}, "simulate.bogus"),
    ],
)
def test_config_errors_are_field_precise(tmp_path, capsys, cfg, message):
    code, _, err = run_cli(tmp_path, "simulate", cfg, capsys)
    assert code == 1
    assert message in err


def test_module_failure_exit_code(tmp_path, capsys):
    # a collision floor above the initial chord stops the run
    cfg = {"vorticities": [1, 1], "simulate": {"initial": [[0, 0, 1], [0, 0.02, 0.9998]], "T": 5.0, "dt": 0.01,
                                                 "collision_floor": 0.5}}
    code, _, err = run_cli(tmp_path, "simulate", cfg, capsys)
    assert code == 2 and err.startswith("failed:")


def test_missing_config(tmp_path, capsys):
    assert main(["spectrum", str(tmp_path / "nope.yaml")]) == 1
    assert "config: cannot read" in capsys.readouterr().err


def test_console_script_version():
    r = subprocess.run([sys.executable, "-m", "vortexsphere.cli", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and __version__ in r.stdout
