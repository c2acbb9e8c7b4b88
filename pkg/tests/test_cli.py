import csv
import subprocess
import sys

import numpy as np
import pytest

from fourbody.cli import TRAJ_HEADER, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def report_value(text, key):
    for line in text.splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].strip()
    raise KeyError(key)


def test_tetra_report(capsys):
    code, out, _ = run(capsys, "tetra", "--masses", "4,3,2,1")
    assert code == 0
    assert report_value(out, "result") == "PASS"
    assert float(report_value(out, "mu")) == pytest.approx(np.cbrt(2.4), rel=1e-15)
    assert "FAIL" not in out


def test_solve_cc_report(capsys):
    code, out, _ = run(capsys, "solve-cc", "--areas=-3,4,6,-15")
    assert code == 0
    lam = report_value(out, "lambda")
    assert len(lam.lstrip("-").replace(".", "").lstrip("0")) == 17
    assert float(lam) == pytest.approx(-0.01268487093192263, abs=1e-14)
    assert float(report_value(out, "  r12")) == pytest.approx(0.953868245971217, abs=1e-12)
    masses = [float(x) for x in report_value(out, "masses").split()]
    assert masses == pytest.approx([0.428260218865972, 0.355184464717379, 0.261905866491155, 0.113826160081235],
                                   abs=1e-10)
    assert "rejected_root" in out


def test_output_is_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["orbit", "--samples", "37", "-o", str(a)]) == 0
    assert main(["orbit", "--samples", "37", "-o", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert b"\r\n" not in a.read_bytes()


def test_orbit_csv(tmp_path):
    path = tmp_path / "orbit.csv"
    assert main(["orbit", "--e", "0.72", "--p", "1.0", "--samples", "101", "-o", str(path)]) == 0
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["psi", "t", "x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4"]
    data = np.array(rows[1:], dtype=float)
    assert data.shape == (101, 10)
    assert np.allclose(data[0, 2:], data[-1, 2:], atol=1e-12)


def test_circular_orbit_constant_distances(tmp_path):
    path = tmp_path / "orbit.csv"
    assert main(["orbit", "--e", "0", "--samples", "25", "-o", str(path)]) == 0
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    P = data[:, 2:].reshape(-1, 4, 2)
    d = np.array([[np.linalg.norm(p[i] - p[j]) for i in range(4) for j in range(i + 1, 4)] for p in P])
    assert np.allclose(d, d[0], rtol=1e-12)


def test_simulate_and_check(tmp_path, capsys):
    init = tmp_path / "init.csv"
    init.write_text("x,y,z,vx,vy,vz\n1.0,0.1,0.2,0.0,0.5,0.1\n-0.6,0.8,-0.1,-0.4,-0.2,0.2\n"
                    "-0.3,-0.9,0.3,0.5,-0.1,-0.3\n0.2,0.1,-1.1,0.2,0.3,0.1\n")
    traj = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "simulate", "--masses", "4,3,2,1", "--init", str(init), "--dt", "1e-3",
                     "--t-end", "0.2", "-o", str(traj))
    assert code == 0
    rows = list(csv.reader(traj.open()))
    assert rows[0][:20] == ["t"] + [f"{c}{i}" for i in range(1, 5) for c in "xyz"] + \
        ["energy", "Lx", "Ly", "Lz", "R1", "R2", "R3"]
    assert rows[0] == TRAJ_HEADER
    assert len(rows) == 202
    code, out, _ = run(capsys, "check", "--trajectory", str(traj))
    assert code == 0
    assert report_value(out, "result") == "PASS"
    for name in ("energy_drift", "euler", "node_elimination", "scale", "torque"):
        assert name in out


def test_check_reports_failure_for_coarse_sampling(tmp_path, capsys):
    traj = tmp_path / "traj.csv"
    assert main(["simulate", "--preset", "equilateral", "--dt", "1e-2", "--t-end", "0.5", "-o", str(traj)]) == 0
    code, out, _ = run(capsys, "check", "--trajectory", str(traj), "--tol", "1e-9")
    assert code == 0
    assert report_value(out, "result") == "FAIL"


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nmasses = 4,3,2,1\n")
    code, out, _ = run(capsys, "tetra", "--config", str(cfg))
    assert code == 0 and report_value(out, "masses") == "4 3 2 1"
    code, out, _ = run(capsys, "tetra", "--config", str(cfg), "--masses", "5,3,2,1")
    assert code == 0 and report_value(out, "masses") == "5 3 2 1"


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[run]\nmass = 4,3,2,1\n")
    code, _, err = run(capsys, "tetra", "--config", str(cfg))
    assert code == 2 and "unknown config key" in err


@pytest.mark.parametrize("argv", [
    ["tetra", "--masses", "1,1,2,3"],
    ["tetra"],
    ["solve-cc", "--areas", "1,2,3,4"],
    ["simulate", "--preset", "equilateral", "--dt", "-1"],
    ["check", "--trajectory", "/nonexistent/file.csv"],
])
def test_invalid_input_exit_code(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert err.startswith("error:")


def test_malformed_masses_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["tetra", "--masses", "4,3,2"])
    assert info.value.code == 2


def test_solver_failure_exit_code(capsys):
    code, _, err = run(capsys, "solve-cc", "--areas", "1,2,3,-4")
    assert code == 3 and "solver failure" in err


def test_collision_exit_code(tmp_path, capsys):
    init = tmp_path / "init.csv"
    init.write_text("0,0,0\n1e-9,0,0\n1,1,0\n0,1,1\n")
    code, _, err = run(capsys, "simulate", "--masses", "4,3,2,1", "--init", str(init), "-o", str(tmp_path / "t.csv"))
    assert code == 4 and "collision" in err


def test_transform_round_trip(capsys):
    code, out, _ = run(capsys, "transform", "--masses", "4,3,2,1", "--seed", "3")
    assert code == 0
    assert float(report_value(out, "round_trip_residual")) < 1e-12
    assert float(report_value(out, "distance_residual")) < 1e-12


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "fourbody.cli", "tetra", "--masses", "4,3,2,1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "result: PASS" in res.stdout


def test_report_as_csv(capsys):
    code, out, _ = run(capsys, "solve-cc", "--areas=-3,4,6,-15", "--format", "csv")
    assert code == 0
    rows = dict(list(csv.reader(out.splitlines()))[1:])
    assert float(rows["lambda"]) == pytest.approx(-0.01268487093192263, abs=1e-14)
    assert float(rows["distances.r34"]) == pytest.approx(0.775802698722361, abs=1e-12)
    assert "Gp[2]" in rows
