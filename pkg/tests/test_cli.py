import json
import math
import subprocess
import sys


from plateflow.cli import main, summarize_energy
from plateflow.store import RunManifest, read_rows, read_trajectory

REST = """
[grid]
nx = 16
ny = 8
dt = 0.002
t_end = 0.02

[output]
stride = 1
"""

DEMO = """
[grid]
nx = 16
ny = 8
dt = 0.004
t_end = 0.04

[forcing]
plate_profile = "cosine_bump"
plate_amplitude = -0.5

[output]
stride = 2
"""


def write(tmp_path, text, name="c.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_rest_simulation(tmp_path):
    out = tmp_path / "rest"
    assert main(["simulate", "--config", write(tmp_path, REST), "--out", str(out)]) == 0
    rows = read_rows(out / "energy.csv")
    assert len(rows) == 11 and all(r["kinetic"] == 0 and r["bending"] == 0 for r in rows)
    traj = read_trajectory(out)
    assert all(s.v.max_abs() == 0 for s in traj.states)
    man = RunManifest.read(out / "manifest.json")
    assert man.passed and man.threads == 1


def test_demo_simulation_and_energy_report(tmp_path, capsys):
    out = tmp_path / "demo"
    assert main(["simulate", "--config", write(tmp_path, DEMO), "--out", str(out)]) == 0
    for f in ("config.toml", "energy.csv", "trajectory.bin", "trajectory_index.csv", "manifest.json"):
        assert (out / f).exists()
    man = json.loads((out / "manifest.json").read_text())
    assert man["passed"] and all(man["checks"].values())
    assert main(["energy-report", str(out)]) == 0
    assert "relative_residual" in capsys.readouterr().out


def test_invalid_plate_is_a_usage_error(tmp_path):
    cfg = write(tmp_path, REST + '\n[initial]\neta0 = "uniform"\neta0_amplitude = 0.1\n')
    out = tmp_path / "bad"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 2
    assert not (out / "energy.csv").exists()


def test_usage_errors(tmp_path):
    assert main(["simulate", "--bogus"]) == 2
    assert main(["simulate", "--threads", "0"]) == 2
    assert main(["simulate", "--set", "grid.nope=1"]) == 2
    assert main(["energy-report", str(tmp_path)]) == 2


def test_contact_failure_exit_code(tmp_path):
    cfg = write(tmp_path, DEMO.replace('"cosine_bump"', '"sine_cutoff"').replace("-0.5", "-200.0")
                + "\n[coupling]\nfloor = 0.97\n")
    out = tmp_path / "crash"
    assert main(["simulate", "--config", cfg, "--out", str(out)]) == 3
    man = json.loads((out / "manifest.json").read_text())
    assert not man["passed"] and "ContactError" in man["error"]
    assert (out / "failure_state.npz").exists()


def test_compare_without_perturbation(tmp_path):
    out = tmp_path / "cmp"
    code = main(["compare", "--config", write(tmp_path, REST), "--out", str(out), "--eps", "0"])
    assert code == 0
    rep = json.loads((out / "stability_report.json").read_text())
    names = {c["name"]: c["passed"] for c in rep["checks"]}
    assert names["uniqueness"] and names["tiny-perturbation"]
    assert rep["lps"]["index(inf,2)"] == 1.0


def test_compare_with_family(tmp_path):
    cfg = write(tmp_path, REST.replace("t_end = 0.02", "t_end = 0.04")
                + '\n[initial]\neta0 = "cosine_bump"\neta0_amplitude = 0.05\n')
    out = tmp_path / "cmp"
    main(["compare", "--config", cfg, "--out", str(out), "--eps", "0.01"])
    rep = json.loads((out / "stability_report.json").read_text())
    assert len(rep["scaling"]) == 3 and math.isfinite(rep["exponent"])
    assert {c["name"] for c in rep["checks"]} >= {"scaling-exponent", "gronwall", "cstar-spread"}
    assert (out / "distance_eps0.01.csv").exists()


def test_verify_ops_quick(tmp_path):
    assert main(["verify-ops", "--level", "quick", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "verify_ops.json").read_text())
    assert rep["passed"] and rep["seconds"] < 10


def test_summary_of_rest_rows():
    rows = [{"step": k, "kinetic": 0.0, "plate_kinetic": 0.0, "bending": 0.0, "tension": 0.0,
             "dissipation": 0.0, "work": 0.0, "residual": 0.0} for k in range(3)]
    s = summarize_energy(rows)
    assert s["relative_residual"] == 0 and s["monotone"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "plateflow", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "plateflow" in r.stdout
