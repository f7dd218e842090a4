from __future__ import annotations

import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from digflow.io import (
    FORMAT_VERSION,
    TrajectoryFile,
    dump_report,
    dump_trajectory,
    parse_trajectory,
    read_report,
    read_trajectory,
    trajectory_as_json,
    write_report,
    write_trajectory,
)

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


def test_trajectory_layout():
    traj = TrajectoryFile([0.0, 1.0], [[0, 2], [1, 1]], [[4, -3], [0.25, -0.375]], {"model": "gaussian1d"})
    text = dump_trajectory(traj)
    lines = text.splitlines()
    assert '# model="gaussian1d"' in lines
    assert "# format_version=1" in lines
    assert "t,x1,x2,v1,v2" in lines
    assert lines[-1] == "1,1,1,0.25,-0.375"


def test_trajectory_invariants():
    with pytest.raises(ValueError):
        TrajectoryFile([0.0, 0.0], [[0, 1], [0, 1]], [[0, 0], [0, 0]])
    with pytest.raises(ValueError):
        TrajectoryFile([0.0, 1.0], [[0, 1], [0, 1]], [[0, 0]])
    single = TrajectoryFile([0.0], [[0.0, 2.0]], [[0.0, 0.0]])
    assert single.rows.shape == (1, 5)


@given(
    st.integers(1, 3).flatmap(
        lambda n: st.tuples(
            st.lists(finite, min_size=1, max_size=6, unique=True),
            st.just(n),
        )
    ),
    st.data(),
)
def test_trajectory_roundtrip_exact(drawn, data):
    times, n = drawn
    t = np.sort(np.array(times))
    rows = len(t)
    pts = data.draw(arrays(np.float64, (rows, n), elements=finite))
    vel = data.draw(arrays(np.float64, (rows, n), elements=finite))
    traj = TrajectoryFile(t, pts, vel, {"model": "m", "solver": {"steps": 3}})
    back = parse_trajectory(dump_trajectory(traj))
    assert np.array_equal(back.t, traj.t)
    assert np.array_equal(back.points, traj.points)
    assert np.array_equal(back.velocities, traj.velocities)
    assert back.header == traj.header


def test_trajectory_file_roundtrip(tmp_path):
    traj = TrajectoryFile(np.linspace(0, 1, 5), np.random.default_rng(0).normal(size=(5, 2)), np.zeros((5, 2)))
    path = tmp_path / "t.csv"
    write_trajectory(traj, path)
    back = read_trajectory(path)
    assert np.array_equal(back.rows, traj.rows)
    buf = io.StringIO()
    write_trajectory(traj, buf)
    assert read_trajectory(io.StringIO(buf.getvalue())).rows.tolist() == traj.rows.tolist()


def test_parse_rejects_bad_columns():
    with pytest.raises(ValueError):
        parse_trajectory("t,x1\n0,1\n")
    with pytest.raises(ValueError):
        parse_trajectory("# broken\nt,x1,v1\n")
    with pytest.raises(ValueError):
        parse_trajectory("")


def test_report_roundtrip(tmp_path):
    path = tmp_path / "r.json"
    write_report({"value": np.float64(0.5), "arr": np.arange(3), "bad": float("inf"), "ok": np.bool_(True)}, path)
    doc = read_report(path)
    assert doc["format_version"] == FORMAT_VERSION
    assert doc["value"] == 0.5 and doc["arr"] == [0, 1, 2] and doc["bad"] == "inf" and doc["ok"] is True


def test_report_version_checked(tmp_path):
    path = tmp_path / "r.json"
    path.write_text('{"format_version": 99}')
    with pytest.raises(ValueError):
        read_report(path)


def test_trajectory_json():
    traj = TrajectoryFile([0.0], [[1.0]], [[0.0]], {"kind": "geodesic"})
    doc = trajectory_as_json(traj)
    assert doc["columns"] == ["t", "x1", "v1"] and doc["rows"] == [[0.0, 1.0, 0.0]]
    assert '"format_version": 1' in dump_report(doc)
