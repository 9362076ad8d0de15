import json
import math
import subprocess
import sys

import numpy as np
import pytest

from kernelcap.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    ConfigError,
    main,
    parse_number,
    parse_range,
    read_trajectory_csv,
    trajectory_columns,
)
from kernelcap.engineering import capacity_trajectory
from kernelcap.dynamics import uniform_grid
from kernelcap.scenarios import ScenarioSpec, spectra_arrays

CONST_ARGS = ["simulate", "--scenario", "constant-isotropic", "--gamma", "1", "--omega", "2", "--t-max", "5", "--steps", "5000"]


def write(path, text):
    path.write_text(text)
    return str(path)


def test_simulate_constant(tmp_path):
    out = tmp_path / "const.csv"
    assert main(CONST_ARGS + ["--out", str(out)]) == EXIT_OK
    header = out.read_text().splitlines()[0].split(",")
    assert header == trajectory_columns(2, False)
    assert header[:4] == ["t", "lambda_markov_1", "lambda_markov_2", "lambda_markov_3"]
    assert header[7:] == [
        "capacity_markov_nats",
        "capacity_combined_nats",
        "advantage_nats",
        "cp_lower_margin",
        "cp_upper_margin",
        "bound_flag",
    ]
    data = read_trajectory_csv(str(out))
    t, adv = data["t"], data["advantage_nats"]
    assert t.size == 5001
    inside = (t > 1) & (t < 2)
    assert (adv[inside] > 0).any()
    assert adv[0] == 0


def test_csv_round_trip(tmp_path):
    out = tmp_path / "const.csv"
    main(CONST_ARGS + ["--out", str(out)])
    data = read_trajectory_csv(str(out))
    traj = capacity_trajectory(ScenarioSpec.constant_isotropic(1.0, 2.0), uniform_grid(5.0, 5000))
    assert np.all(data["t"] == traj.grid)
    assert np.all(data["lambda_combined_1"] == traj.combined[:, 0])
    assert np.all(data["lambda_markov_3"] == traj.markov[:, 2])
    assert np.all(data["capacity_combined_nats"] == traj.capacity_combined)
    assert np.all(data["advantage_nats"] == traj.advantage)
    assert np.all(data["cp_lower_margin"] == traj.cp_lower_margin)


def test_scientific_notation(tmp_path):
    out = tmp_path / "a.csv"
    main(CONST_ARGS + ["--out", str(out)])
    row = out.read_text().splitlines()[2].split(",")
    assert all("e" in cell for cell in row[:-1]) and row[-1] in ("0", "1")


def test_simulate_beyond(tmp_path):
    out = tmp_path / "beyond.csv"
    args = ["simulate", "--scenario", "beyond-semigroup", "--r", "1/3", "--omega", "2", "--d", "2", "--out", str(out)]
    assert main(args) == EXIT_OK
    data = read_trajectory_csv(str(out))
    assert (data["advantage_nats"] > 1e-9).any()
    _, _, c = spectra_arrays(ScenarioSpec.beyond_semigroup(1 / 3, 2.0), data["t"])
    assert np.all(data["lambda_combined_1"] == c[:, 0])


def test_determinism(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(CONST_ARGS + ["--out", str(a)])
    main(CONST_ARGS + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bits_and_jsonl(tmp_path, capsys):
    nats, bits = tmp_path / "n.csv", tmp_path / "b.csv"
    main(CONST_ARGS + ["--out", str(nats)])
    main(CONST_ARGS + ["--bits", "--out", str(bits)])
    n, b = read_trajectory_csv(str(nats)), read_trajectory_csv(str(bits))
    assert "advantage_bits" in b
    assert np.abs(b["capacity_markov_bits"] * math.log(2) - n["capacity_markov_nats"]).max() < 1e-15

    args = ["simulate", "--scenario", "constant-isotropic", "--gamma", "1", "--omega", "2", "--t-max", "1", "--steps", "10", "--format", "jsonl"]
    assert main(args) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 11
    rec = json.loads(lines[0])
    assert rec["t"] == 0.0 and rec["bound_flag"] == 0 and rec["advantage_nats"] == 0.0


def test_simulate_config_errors(tmp_path, capsys):
    assert main(CONST_ARGS[:-2] + ["--steps", "1"]) == EXIT_CONFIG
    assert "steps" in capsys.readouterr().err
    assert main(["simulate", "--scenario", "constant-isotropic", "--gamma", "4", "--omega", "1"]) == EXIT_CONFIG
    assert main(["simulate", "--scenario", "constant-isotropic", "--gamma", "abc", "--omega", "1"]) == EXIT_CONFIG
    assert "gamma" in capsys.readouterr().err
    assert main(["simulate", "--scenario", "constant-isotropic", "--gamma", "1"]) == EXIT_CONFIG
    assert "omega" in capsys.readouterr().err
    assert main(["simulate", "--scenario", "constant-isotropic", "--gamma", "1", "--omega", "2", "--r", "1"]) == EXIT_CONFIG
    assert main(["simulate", "--scenario", "constant-isotropic", "--gamma", "1", "--omega", "2", "--t-max", "0"]) == EXIT_CONFIG
    assert main(["simulate"]) == EXIT_CONFIG
    cfg = write(tmp_path / "c.cfg", "scenario = constant-isotropic\ngamma = 1\nomega = 2\ncolour = red\n")
    assert main(["simulate", "--config", cfg]) == EXIT_CONFIG
    assert "colour" in capsys.readouterr().err


def test_simulate_from_config_files(tmp_path):
    flat = write(tmp_path / "c.cfg", "# exp-decay qubit\nscenario = exp-decay\ngamma = 1\nz = 1/3\nomega = 2\nt_max = 2\nsteps = 200\n")
    js = write(tmp_path / "c.json", json.dumps({"scenario": "exp-decay", "gamma": 1, "z": 1 / 3, "omega": 2, "t_max": 2, "steps": 200}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["simulate", "--config", flat, "--out", str(a)]) == EXIT_OK
    assert main(["simulate", "--config", js, "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    # command-line flags override the file
    c = tmp_path / "c.csv"
    assert main(["simulate", "--config", flat, "--steps", "100", "--out", str(c)]) == EXIT_OK
    assert len(c.read_text().splitlines()) == 102


def test_parse_helpers():
    assert parse_number("1/3", "x") == 1 / 3
    assert parse_range("0.5:1:2", "g") == [0.5, 1.0]
    assert parse_range([1, 2], "g") == [1.0, 2.0]
    assert parse_range("1,2", "g") == [1.0, 2.0]
    assert parse_range({"min": 1, "max": 2, "count": 3}, "g") == [1.0, 1.5, 2.0]
    assert parse_range("3", "g") == [3.0]
    with pytest.raises(ConfigError, match="g"):
        parse_range("2:1:3", "g")
    with pytest.raises(ConfigError):
        parse_range("1:2:0", "g")
    with pytest.raises(ConfigError):
        parse_number("1/0", "x")


SWEEP_CFG = "scenario = constant-isotropic\ngamma = 0.5:1:2\nomega = 1,2\nt_max = 5\nsteps = 1000\n"


def test_sweep_2x2(tmp_path):
    cfg = write(tmp_path / "s.cfg", SWEEP_CFG)
    out = tmp_path / "s.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out)]) == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("gamma,omega,cp_sufficient_holds,full_cp_ok_until")
    assert len(lines) == 5
    last = lines[-1].split(",")
    assert float(last[0]) == 1 and float(last[1]) == 2 and float(last[5]) > 0


def test_sweep_workers_and_determinism(tmp_path):
    cfg = write(tmp_path / "s.cfg", SWEEP_CFG)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(a)]) == EXIT_OK
    assert main(["sweep", "--config", cfg, "--out", str(b), "--workers", "2"]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()


def test_sweep_skips_and_errors(tmp_path, capsys):
    cfg = write(tmp_path / "s.cfg", "scenario = constant-isotropic\ngamma = 1,4\nomega = 1\nt_max = 2\nsteps = 100\n")
    assert main(["sweep", "--config", cfg]) == EXIT_OK
    cap = capsys.readouterr()
    assert len(cap.out.splitlines()) == 2
    assert "skipped 1" in cap.err and "gamma=4" in cap.err

    cfg = write(tmp_path / "e.cfg", "scenario = constant-isotropic\ngamma = 4\nomega = 1\n")
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    assert "gamma=4" in capsys.readouterr().err

    cfg = write(tmp_path / "r.cfg", "scenario = constant-isotropic\ngamma = 2:1:3\nomega = 1\n")
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    assert "gamma" in capsys.readouterr().err

    cfg = write(tmp_path / "k.cfg", "scenario = constant-isotropic\ngamma = 1\nomega = 2\nz = 1\n")
    assert main(["sweep", "--config", cfg]) == EXIT_CONFIG
    assert "z" in capsys.readouterr().err


def test_sweep_qutrit_point(tmp_path, capsys):
    cfg = write(
        tmp_path / "qutrit.json",
        json.dumps({"scenario": "exp-decay", "d": 3, "gamma": "3/5", "z": "1/5", "omega": "19/20", "t_max": 10, "steps": 5000}),
    )
    assert main(["sweep", "--config", cfg, "--format", "jsonl"]) == EXIT_OK
    row = json.loads(capsys.readouterr().out)
    assert row["cp_violated"] == 1 and abs(row["full_cp_ok_until"] - 2.15219) < 1e-5
    assert row["cp_sufficient_holds"] == 0 and row["bound_flag"] == 1


def table(path, grid, cols, header="t,a1,a2,a3"):
    lines = [header] + [",".join(repr(float(x)) for x in (t, *row)) for t, row in zip(grid, cols)]
    return write(path, "\n".join(lines) + "\n")


def test_validate_zero_ell(tmp_path, capsys):
    grid = np.linspace(0, 1, 11)
    path = table(tmp_path / "ell.csv", grid, np.zeros((11, 3)))
    assert main(["validate", "--ell", path, "--d", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("pass") == 4 and "FAIL" not in out


def test_validate_upper_violation(tmp_path, capsys):
    grid = np.linspace(0, 3, 301)
    path = table(tmp_path / "ell.csv", grid, np.ones((301, 3)))
    assert main(["validate", "--ell", path, "--d", "2"]) == EXIT_NUMERIC
    out = capsys.readouterr().out
    assert "admissibility upper: FAIL first violation t=1.34" in out


def test_validate_lambda_table_flags(tmp_path, capsys):
    grid = uniform_grid(10.0, 2000)
    _, _, c = spectra_arrays(ScenarioSpec.constant_isotropic(1.0, 2.0), grid)
    path = table(tmp_path / "lam.csv", grid, c)
    assert main(["validate", "--lambda", path, "--d", "2"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "alpha 1: invertible=no kernel-nondecreasing=no" in out
    assert "alpha 3: invertible=yes kernel-nondecreasing=yes" in out


def test_validate_kernel_table(tmp_path, capsys):
    grid = uniform_grid(5.0, 2000)
    kappa = np.column_stack([np.full(grid.size, -4.0), np.full(grid.size, -4.0), np.zeros(grid.size)])
    path = table(tmp_path / "k.csv", grid, kappa)
    assert main(["validate", "--kernel", path, "--delta=-1,-1,-1", "--d", "2"]) == EXIT_OK
    assert "fujiwara-algoet: pass" in capsys.readouterr().out
    # undamped, the noise map (cos 2t, cos 2t, 1) is still CP
    assert main(["validate", "--kernel", path, "--d", "2"]) == EXIT_OK
    capsys.readouterr()
    # oscillating all three eigenvalues drives sum lambda = 3 cos 2t below -1
    path = table(tmp_path / "k3.csv", grid, np.full((grid.size, 3), -4.0))
    assert main(["validate", "--kernel", path, "--d", "2"]) == EXIT_NUMERIC
    assert "fujiwara-algoet: FAIL" in capsys.readouterr().out
    assert main(["validate", "--kernel", path, "--delta=-1,-1", "--d", "2"]) == EXIT_CONFIG


def test_validate_malformed(tmp_path, capsys):
    path = write(tmp_path / "bad.csv", "t,a,b,c\n0,0,0,0\n0.1,0,x,0\n0.2,0,0,0\n")
    assert main(["validate", "--ell", path, "--d", "2"]) == EXIT_CONFIG
    assert "line 3" in capsys.readouterr().err
    path = write(tmp_path / "short.csv", "0,0,0,0\n0.1,0,0\n0.2,0,0,0\n")
    assert main(["validate", "--ell", path, "--d", "2"]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["validate", "--d", "2"]) == EXIT_CONFIG


@pytest.mark.parametrize("d, code", [(2, EXIT_OK), (5, EXIT_OK), (6, EXIT_CONFIG)])
def test_mub_check(d, code, capsys):
    assert main(["mub-check", "--d", str(d)]) == code
    cap = capsys.readouterr()
    if code == EXIT_OK:
        assert cap.out.strip().endswith("pass")
    else:
        assert "prime" in cap.err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "kernelcap", "mub-check", "--d", "3"], capture_output=True, text=True)
    assert proc.returncode == 0 and "pass" in proc.stdout
