import numpy as np
import pytest

from plateflow.grid import GridSpec, VectorField
from plateflow.profiles import stream_velocity, vortex_stream
from plateflow.simulation import Snapshot
from plateflow.transport import TEST_FUNCTIONS, TransportTest, resample, transport_residuals

from conftest import bump_eta


def test_time_derivative_of_test_functions():
    X, Y = np.meshgrid(np.linspace(0, 2, 5), np.linspace(0, 1, 4), indexing="ij")
    for phi in TEST_FUNCTIONS:
        h = 1e-6
        num = [(a - b) / (2 * h) for a, b in zip(phi(0.3 + h, X, Y, 2.0), phi(0.3 - h, X, Y, 2.0))]
        for n, e in zip(num, phi.dt(0.3, X, Y, 2.0)):
            assert np.allclose(n, e, atol=1e-6)


def test_test_functions_vanish_on_walls():
    phi = TransportTest()
    Y = np.linspace(0, 1, 7)
    for x in (0.0, 2.0):
        px, py = phi(0.1, np.full_like(Y, x), Y, 2.0)
        assert np.allclose(px, 0) and np.allclose(py, 0)


def test_resample_onto_same_domain_is_identity():
    g = GridSpec(nx=16, ny=8)
    eta = bump_eta(g, 0.1)
    v = stream_velocity(vortex_stream(g), eta, g)
    same = resample(v, eta, eta)
    assert np.allclose(same.u_x, v.u_x, atol=1e-14) and np.allclose(same.u_y, v.u_y, atol=1e-14)


def test_static_rest_has_zero_residual():
    g = GridSpec(nx=16, ny=8)
    z = np.zeros(g.nx + 1)
    snaps = [Snapshot(0.01 * k, VectorField.zeros(g), np.zeros(g.shape("center")), np.ones(g.nx + 1), z, z)
             for k in range(4)]
    assert np.all(transport_residuals(snaps, TEST_FUNCTIONS[0]) == 0)


@pytest.mark.slow
def test_residual_halves_with_dt():
    from plateflow.verify import reynolds_study
    r = reynolds_study(nx=16, dt=8e-3, t_end=0.16)
    assert all(1.6 <= q <= 2.4 for q in r["ratios"])
