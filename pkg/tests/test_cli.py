from __future__ import annotations

import json

import numpy as np
import pytest

from digflow.cli import EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_OK, EXIT_SOLVER, main, resolve_seed, ConfigError
from digflow.io import parse_trajectory, read_report, read_trajectory
from digflow.validation import DEFAULT_SEED


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.mark.parametrize("method", ["energy", "curve", "vector", "bregman"])
def test_divergence_methods(capsys, method):
    code, out, _ = run(capsys, "divergence", "--model", "gaussian1d", "--p", "0,2", "--q", "1,1", "--method", method)
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["value"] == pytest.approx(0.443147, abs=1e-6)
    assert doc["format_version"] == 1
    if method == "bregman":
        assert doc["quadrature_error"] == 0.0


def test_divergence_same_point(capsys):
    code, out, _ = run(capsys, "divergence", "--p", "0,2", "--q", "0,2")
    assert code == EXIT_OK and json.loads(out)["value"] == 0.0


def test_divergence_dual_connection(capsys):
    code, out, _ = run(capsys, "divergence", "--p", "0,2", "--q", "1,1", "--connection", "dual", "--method", "bregman")
    assert json.loads(out)["value"] == pytest.approx(1.3068528194400546, abs=1e-12)


def test_divergence_other_chart(capsys):
    code, out, _ = run(capsys, "divergence", "--chart", "natural", "--p", "0,-0.125", "--q", "1,-0.5", "--method", "bregman")
    assert code == EXIT_OK and json.loads(out)["value"] == pytest.approx(0.443147, abs=1e-6)


def test_geodesic_rows(capsys):
    code, out, _ = run(capsys, "geodesic", "--p", "0,2", "--q", "1,1", "--rows", "3")
    traj = parse_trajectory(out)
    assert code == EXIT_OK
    assert np.allclose(traj.points, [[0, 2], [0.8, 1.264911], [1, 1]], atol=1e-6)
    assert traj.header["chart"] == "mu-sigma"


def test_geodesic_same_point_single_row(capsys):
    _, out, _ = run(capsys, "geodesic", "--p", "0,2", "--q", "0,2")
    traj = parse_trajectory(out)
    assert traj.rows.shape == (1, 5) and np.all(traj.velocities == 0)


def test_geodesic_euclidean(capsys, tmp_path):
    path = tmp_path / "g.csv"
    code, _, _ = run(capsys, "geodesic", "--model", "euclidean", "--p", "0,0", "--q", "3,4", "--rows", "5", "-o", str(path))
    traj = read_trajectory(path)
    assert code == EXIT_OK
    assert np.allclose(traj.points, np.outer(np.linspace(0, 1, 5), [3, 4]))


def test_geodesic_json_format(capsys):
    _, out, _ = run(capsys, "geodesic", "--p", "0,2", "--q", "1,1", "--rows", "2", "--format", "json", "--connection", "dual")
    doc = json.loads(out)
    assert doc["columns"] == ["t", "x1", "x2", "v1", "v2"] and doc["connection"] == "dual"


@pytest.mark.parametrize("extra", [[], ["--dual"]])
def test_flow_terminal_row(capsys, extra):
    code, out, _ = run(capsys, "flow", "--p", "0,2", "--q", "1,1", *extra)
    traj = parse_trajectory(out)
    assert code == EXIT_OK
    assert np.linalg.norm(traj.points[-1] - [1, 1]) < 1e-4


def test_flow_singular_time(capsys):
    code, _, err = run(capsys, "flow", "--p", "0,2", "--q", "1,1", "--t0", "0")
    assert code == EXIT_CONFIG and "singular time" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["divergence", "--p", "0,-2", "--q", "1,1"],
        ["divergence", "--p", "0,2,3", "--q", "1,1"],
        ["divergence", "--p", "a,b", "--q", "1,1"],
        ["divergence", "--model", "nope", "--p", "0,2", "--q", "1,1"],
        ["divergence", "--chart", "polar", "--p", "0,2", "--q", "1,1"],
        ["divergence", "--p", "0,2"],
        ["geodesic", "--p", "0,2", "--q", "1,1", "--rows", "1"],
        ["validate", "--tolerance", "divergence.agreement=abc"],
        ["validate", "--tolerance", "no.such.check=1"],
        ["frobnicate"],
    ],
)
def test_configuration_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_CONFIG


def test_solver_failure_exit_code(capsys):
    code, _, err = run(capsys, "geodesic", "--p", "0,0.6", "--q", "40,0.6", "--connection", "dual", "--bvp-method", "shooting", "--steps", "16")
    assert code == EXIT_SOLVER and "ConvergenceError" in err


def test_flagged_flow_exit_code(capsys):
    code, out, err = run(capsys, "flow", "--p", "0,2", "--q", "1,1", "--steps", "2")
    assert code == EXIT_SOLVER and "terminal miss" in err
    assert parse_trajectory(out).rows.shape[0] == 3


def test_validate_subset_and_bad_tolerance(capsys, tmp_path):
    out = tmp_path / "r.json"
    code, _, err = run(capsys, "validate", "--only", "divergence.agreement", "--tolerance", "divergence.agreement=1e-20", "-o", str(out))
    doc = read_report(out)
    assert code == EXIT_CHECK_FAILED
    assert doc["failed"] == ["divergence.agreement"]
    assert "FAILED divergence.agreement" in err


def test_validate_seed_reproducible(capsys):
    argv = ["validate", "--seed", "7", "--only", "divergence.axiom", "--only", "gaussian.uo_identity"]
    a = run(capsys, *argv)
    b = run(capsys, *argv)
    assert a[0] == EXIT_OK and a[1] == b[1]
    assert json.loads(a[1])["seed"] == 7


def test_validate_printed_constant(capsys):
    code, out, _ = run(capsys, "validate", "--only", "divergence.axiom", "--divergence-constant", "-1")
    doc = json.loads(out)
    assert code == EXIT_CHECK_FAILED and doc["checks"][0]["measured"] == pytest.approx(0.5)


def test_seed_resolution():
    assert resolve_seed(None, {}) == DEFAULT_SEED
    assert resolve_seed(None, {"DIGFLOW_SEED": "11"}) == 11
    assert resolve_seed(5, {"DIGFLOW_SEED": "11"}) == 5
    with pytest.raises(ConfigError):
        resolve_seed(None, {"DIGFLOW_SEED": "x"})


def test_env_seed_used(capsys, monkeypatch):
    monkeypatch.setenv("DIGFLOW_SEED", "3")
    _, out, _ = run(capsys, "validate", "--only", "divergence.axiom")
    assert json.loads(out)["seed"] == 3
