import numpy as np
import pytest

from plateflow.errors import ShapeError
from plateflow.simulation import ENERGY_COLUMNS
from plateflow.store import (RunManifest, fmt, read_rows, read_trajectory, write_rows, write_trajectory,
                            TRAJECTORY_FILE)

from test_stability import small_config


@pytest.fixture(scope="module")
def result():
    from plateflow.simulation import simulate
    return simulate(small_config(), eps=0.01, stride=2)


def test_trajectory_round_trip_is_bitwise(tmp_path, result):
    write_trajectory(tmp_path, result.trajectory)
    back = read_trajectory(tmp_path)
    assert np.array_equal(back.times, result.trajectory.times)
    for a, b in zip(back.states, result.trajectory.states):
        assert np.array_equal(a.v.u_x, b.v.u_x) and np.array_equal(a.v.u_y, b.v.u_y)
        for k in ("p", "eta", "eta_t", "w"):
            assert np.array_equal(getattr(a, k), getattr(b, k))
    assert back.states[0].v.grid == result.trajectory.states[0].v.grid


def test_truncated_trajectory_detected(tmp_path, result):
    write_trajectory(tmp_path, result.trajectory)
    data = (tmp_path / TRAJECTORY_FILE).read_bytes()
    (tmp_path / TRAJECTORY_FILE).write_bytes(data[:-8])
    with pytest.raises(ShapeError):
        read_trajectory(tmp_path)


def test_energy_rows_round_trip(tmp_path, result):
    path = write_rows(tmp_path / "energy.csv", result.energy, ENERGY_COLUMNS)
    back = read_rows(path)
    assert len(back) == len(result.energy)
    for a, b in zip(back, result.energy):
        for c in ENERGY_COLUMNS:
            assert a[c] == float(b[c])


def test_number_format():
    assert fmt(True) == "1" and fmt(3) == "3"
    x = 0.1 + 0.2
    assert float(fmt(x)) == x


def test_manifest_round_trip(tmp_path):
    m = RunManifest("abc", "0.1.0", "2020-01-01T00:00:00+00:00", checks={"a": True, "b": False})
    m.write(tmp_path)
    back = RunManifest.read(tmp_path / "manifest.json")
    assert back == m and not back.passed
