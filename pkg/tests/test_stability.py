import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from plateflow.config import SimulationConfig
from plateflow.errors import DomainError, ShapeError
from plateflow.fluid import fluid_norm_sq
from plateflow.grid import GridSpec, VectorField
from plateflow.simulation import Snapshot, simulate
from plateflow.stability import (GronwallWeight, cstar_spread, distance_series, fit_cstar, gronwall_bound,
                                 gronwall_holds, gronwall_weight, lps_index, scaling_exponent, space_time_norm)
from plateflow.profiles import stream_velocity, vortex_stream

from conftest import bump_eta


def small_config(**grid):
    g = dict(nx=16, ny=8, dt=0.01, t_end=0.1)
    g.update(grid)
    cfg = SimulationConfig(grid=GridSpec(**g))
    return cfg.with_overrides(['initial.eta0="cosine_bump"', "initial.eta0_amplitude=0.05"])


@pytest.fixture(scope="module")
def runs():
    cfg = small_config()
    base = simulate(cfg, eps=0.0, stride=1).trajectory
    pert = simulate(cfg, eps=1e-2, stride=1).trajectory
    return base, pert


def static_run(g, vs, eta):
    z = np.zeros(g.nx + 1)
    return [Snapshot(0.1 * k, v, np.zeros(g.shape("center")), eta, z, z) for k, v in enumerate(vs)]


def test_identical_runs_have_zero_distance(runs):
    base, _ = runs
    ds = distance_series(base, base)
    assert np.all(ds.I == 0) and ds.D0 == 0


def test_frozen_difference_on_common_domain():
    g = GridSpec(nx=16, ny=8)
    eta = bump_eta(g, 0.1)
    u0 = stream_velocity(vortex_stream(g), eta, g)
    v1 = VectorField.zeros(g)
    eps = 1e-3
    ds = distance_series(static_run(g, [v1] * 3, eta), static_run(g, [v1 + u0 * eps] * 3, eta))
    assert np.allclose(2 * ds.components["kinetic"], eps ** 2 * fluid_norm_sq(u0, eta), rtol=1e-12)
    assert np.all(ds.components["plate_velocity"] == 0) and np.all(ds.components["bending"] == 0)


def test_incompatible_runs_rejected(runs):
    base, _ = runs
    with pytest.raises(ShapeError):
        distance_series(base, base.states[:-1])
    other = simulate(small_config(nx=20, ny=10), eps=0.0, stride=1, n_steps=len(base) - 1).trajectory
    with pytest.raises(ShapeError):
        distance_series(base, other)


def test_weight_of_flat_rest_is_nine():
    g = GridSpec(nx=16, ny=8)
    run = static_run(g, [VectorField.zeros(g)] * 4, np.ones(g.nx + 1))
    w = gronwall_weight(run, run)
    assert np.allclose(w.h, 9.0)
    masked = gronwall_weight(run, run, C=0.0, mask_geometry=True)
    assert np.all(masked.h == 0)


def test_bound_closed_forms():
    t = np.linspace(0, 2, 41)
    zero = GronwallWeight(t, np.zeros_like(t), np.zeros_like(t), np.zeros_like(t), 1.0)
    assert np.all(gronwall_bound(0.3, zero) == 0.3)
    H = 1.7
    const = GronwallWeight(t, np.full_like(t, H), np.full_like(t, H), np.zeros_like(t), 1.0)
    assert np.allclose(gronwall_bound(0.3, const), 0.3 * np.exp(H * t), rtol=1e-10)
    assert gronwall_bound(0.3, const, t=1.0) == pytest.approx(0.3 * np.exp(H), rel=1e-10)


def test_bound_matches_independent_quadrature(runs):
    base, pert = runs
    w = gronwall_weight(base, pert)
    assert np.all(np.isfinite(w.h)) and w.integral()[-1] < np.inf
    t = w.times
    exact = quad(lambda s: np.interp(s, t, w.h), t[0], t[-1], points=t[1:-1], limit=500, epsabs=0, epsrel=1e-12)[0]
    assert gronwall_bound(1.0, w)[-1] == pytest.approx(np.exp(exact), rel=1e-6)


def test_fitted_constant_makes_bound_hold(runs):
    base, pert = runs
    ds = distance_series(pert, base)
    w = gronwall_weight(base, pert)
    c = fit_cstar(ds, w)
    assert math.isfinite(c)
    assert gronwall_holds(ds, w, c)
    assert not gronwall_holds(ds, w, c - 1.0) or ds.I[1:].max() == 0


@pytest.mark.parametrize("q, r, expected", [(math.inf, 2, 1.0), (3, math.inf, 1.0), (2, 2, 2.5)])
def test_lps_index(q, r, expected):
    assert lps_index(q, r) == expected


@given(st.floats(-10, 0.999))
def test_lps_index_domain(q):
    with pytest.raises(DomainError):
        lps_index(q, 2)


@given(st.floats(1, 1e6), st.floats(1, 1e6))
def test_lps_index_bounds(q, r):
    assert 0 < lps_index(q, r) <= 5


def test_space_time_norms(runs):
    base, _ = runs
    assert space_time_norm(base, math.inf, math.inf) >= space_time_norm(base, math.inf, 2) / np.sqrt(0.1) - 1e-12
    assert space_time_norm(base, 6, 4) >= 0


def test_spread_and_exponent():
    assert cstar_spread([1.0, 1.5]) == pytest.approx(1.5)
    assert cstar_spread([-1.0, -0.5]) == pytest.approx(2.0)
    assert cstar_spread([1.0, -1.0]) == math.inf
    assert cstar_spread([0.0, 1.0]) == math.inf
    eps = np.array([1e-2, 5e-3, 2.5e-3])
    assert scaling_exponent(eps, 3 * eps ** 2) == pytest.approx(2.0)
