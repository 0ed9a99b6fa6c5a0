import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from plateflow.errors import ConfigError
from plateflow.grid import GridSpec
from plateflow.profiles import (PLATE_PROFILES, initial_velocity, lift_stream, plate_profile, plate_shape,
                                random_mean_zero_shape)

X = sp.symbols("x")
L = 2.0
ORACLES = {
    "cosine_bump": sp.sin(sp.pi * X / L) ** 2,
    "clamped_quartic": 16 * X ** 2 * (L - X) ** 2 / L ** 4,
    "sine_cutoff": sp.sin(2 * sp.pi * X / L) * sp.sin(sp.pi * X / L) ** 2,
}


@pytest.mark.parametrize("name", sorted(ORACLES))
def test_profiles_match_symbolic_forms(name):
    g = GridSpec(L=L, nx=32, ny=8)
    f = sp.lambdify(X, ORACLES[name])
    assert np.allclose(plate_shape(name, g), f(g.x_nodes), atol=1e-14)
    mean = float(sp.integrate(ORACLES[name], (X, 0, L)))
    assert plate_profile(name).mean_zero == (abs(mean) < 1e-14)
    # clamped: value and slope vanish at both ends
    d = sp.diff(ORACLES[name], X)
    for x0 in (0, L):
        assert abs(float(ORACLES[name].subs(X, x0))) < 1e-14 and abs(float(d.subs(X, x0))) < 1e-14


def test_antisymmetric_quartic_peak_and_mean():
    g = GridSpec(L=L, nx=2000, ny=8)
    s = plate_shape("antisymmetric_quartic", g)
    assert np.abs(s).max() == pytest.approx(1.0, abs=1e-5)
    assert abs(s.sum()) < 1e-10


@pytest.mark.parametrize("name", sorted(PLATE_PROFILES))
def test_clamped_profiles_vanish_at_ends(name):
    g = GridSpec(nx=16, ny=8)
    s = plate_shape(name, g)
    assert (s[0] == 0 and s[-1] == 0) == plate_profile(name).clamped


def test_unknown_profile():
    with pytest.raises(ConfigError):
        plate_profile("spike")
    with pytest.raises(ConfigError):
        initial_velocity("jet", GridSpec(nx=16, ny=8), np.ones(17), np.zeros(17))


@given(st.integers(0, 2 ** 31), st.integers(1, 5))
def test_random_shapes(seed, modes):
    g = GridSpec(nx=16, ny=8)
    s = random_mean_zero_shape(g, seed, modes)
    assert s[0] == s[-1] == 0
    assert np.abs(s).max() == pytest.approx(1.0)
    assert abs(s.sum()) < 1e-10


def test_lift_requires_zero_flux():
    g = GridSpec(nx=16, ny=8)
    with pytest.raises(ConfigError):
        lift_stream(g, np.ones(g.nx))


@given(st.integers(0, 2 ** 31))
def test_initial_velocity_matches_plate_velocity(seed):
    g = GridSpec(nx=16, ny=8)
    eta = 1 + 0.1 * random_mean_zero_shape(g, seed)
    eta_t = random_mean_zero_shape(g, seed + 1)
    v = initial_velocity("vortex", g, eta, eta_t, 0.5)
    assert np.allclose(v.u_y[:, -1], 0.5 * (eta_t[1:] + eta_t[:-1]), atol=1e-12)
    assert np.all(v.u_x[[0, -1]] == 0) and np.all(v.u_y[:, 0] == 0)
