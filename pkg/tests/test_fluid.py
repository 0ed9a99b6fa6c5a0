import warnings

import numpy as np
import pytest
import scipy.sparse as sps
from hypothesis import given, strategies as st

from plateflow.errors import DomainError, SolverError
from plateflow.fluid import (FluidParams, FluidState, SolverCache, fluid_step, fluid_step_detailed,
                             gradient_norms, kinetic_energy, korn_ratio, mapped_operators, project,
                             stress_normal_normal)
from plateflow.geometry import mapped_divergence, mapped_velocity_gradient
from plateflow.grid import GridSpec, ScalarField, VectorField
from plateflow.profiles import stream_velocity, vortex_stream

from conftest import bump_eta


def flat(g, value=1.0):
    return np.full(g.nx + 1, value)


def test_rest_state_stays_at_rest(grid):
    s = FluidState.rest(grid)
    for _ in range(3):
        s = fluid_step(s, flat(grid), np.zeros(grid.nx + 1), FluidParams(), grid.dt)
    assert s.v.max_abs() == 0 and np.abs(s.p.values).max() == 0


def test_constant_pressure_is_gauged_away(grid):
    s = FluidState(VectorField.zeros(grid), ScalarField(np.full(grid.shape("center"), 3.0), "center", grid))
    new = fluid_step(s, flat(grid), np.zeros(grid.nx + 1), FluidParams(), grid.dt)
    assert new.v.max_abs() <= 1e-12
    assert np.abs(new.p.values).max() <= 1e-12


def test_hydrostatic_and_zero_loads(grid):
    p0 = 2.5
    s = FluidState(VectorField.zeros(grid), ScalarField(np.full(grid.shape("center"), p0), "center", grid))
    assert np.allclose(stress_normal_normal(s, flat(grid)).values, p0)
    assert np.all(stress_normal_normal(FluidState.rest(grid), flat(grid)).values == 0)


def test_stretched_domain_scales_vertical_derivatives(grid):
    v = VectorField.from_functions(grid, lambda X, Y: np.sin(Y) * X, lambda X, Y: Y ** 2)
    D1 = mapped_velocity_gradient(v, flat(grid, 1.0))
    D2 = mapped_velocity_gradient(v, flat(grid, 2.0))
    assert np.allclose(D2[..., 1], 0.5 * D1[..., 1])
    assert np.allclose(D2[..., 0], D1[..., 0])
    ops = mapped_operators(ScalarField(flat(grid, 2.0), "plate", grid))
    assert np.allclose(ops.eta_c, 2.0)


@given(st.integers(0, 2 ** 31), st.floats(-0.3, 0.3))
def test_projection_is_solenoidal_and_idempotent(seed, amp):
    g = GridSpec(nx=16, ny=8)
    r = np.random.default_rng(seed)
    ux = r.standard_normal(g.shape("face-x"))
    uy = r.standard_normal(g.shape("face-y"))
    ux[[0, -1]] = 0.0
    uy[:, [0, -1]] = 0.0
    eta = bump_eta(g, amp)
    pv = project(VectorField(ux, uy, g), eta, np.zeros(g.nx + 1))
    assert np.abs(mapped_divergence(pv, eta).values).max() <= 1e-8
    ppv = project(pv, eta, np.zeros(g.nx + 1))
    assert np.abs(ppv.u_x - pv.u_x).max() <= 1e-8 and np.abs(ppv.u_y - pv.u_y).max() <= 1e-8


def test_step_keeps_divergence_free_on_moving_plate():
    g = GridSpec(nx=16, ny=8, dt=0.005, t_end=0.05)
    eta = bump_eta(g, 0.1)
    eta_t = bump_eta(g, 0.5) - 1.0
    s = FluidState(stream_velocity(vortex_stream(g), eta, g), ScalarField.zeros(g))
    new, info = fluid_step_detailed(s, eta, eta_t, FluidParams(), g.dt)
    assert info.divergence <= 1e-9
    assert np.allclose(new.v.u_y[:, -1], 0.5 * (eta_t[1:] + eta_t[:-1]))
    assert info.dissipation_rate >= 0


def test_unforced_kinetic_energy_decays():
    g = GridSpec(nx=16, ny=8, dt=0.005, t_end=0.05)
    eta = flat(g)
    s = FluidState(stream_velocity(vortex_stream(g), eta, g), ScalarField.zeros(g))
    prev = kinetic_energy(s.v, eta)
    for _ in range(10):
        s = fluid_step(s, eta, np.zeros(g.nx + 1), FluidParams(), g.dt)
        cur = kinetic_energy(s.v, eta)
        assert cur < prev
        prev = cur


def test_korn_ratio_near_one_for_no_slip_field():
    g = GridSpec(nx=64, ny=32)
    eta = bump_eta(g, 0.1)
    v = project(stream_velocity(vortex_stream(g), eta, g), eta, np.zeros(g.nx + 1))
    assert abs(korn_ratio(v, eta) - 1.0) < 0.05
    grad, eps = gradient_norms(v, eta)
    assert grad > 0 and eps > 0


def test_wall_condition_enforced(grid):
    ux = np.ones(grid.shape("face-x"))
    with pytest.raises(DomainError):
        FluidState(VectorField(ux, np.zeros(grid.shape("face-y")), grid), ScalarField.zeros(grid))


def test_parameter_validation():
    with pytest.raises(DomainError):
        FluidParams(mu_f=0.0)
    with pytest.raises(DomainError):
        FluidParams(stress_form="other")


def test_solver_nonconvergence_reports_residual():
    n = 50
    A = sps.diags(np.linspace(1.0, 1e4, n)).tocsr()
    cache = SolverCache()
    cache.solve("k", sps.identity(n, format="csr"), np.ones(n), 1e-12, 5)  # caches the wrong factor
    with pytest.raises(SolverError) as exc:
        cache.solve("k", A, np.random.default_rng(0).standard_normal(n), 1e-14, 1, step=7)
    assert exc.value.step == 7 and exc.value.residual > 0


def test_cfl_violation_warns(grid):
    eta = flat(grid)
    s = FluidState(stream_velocity(vortex_stream(grid) * 50, eta, grid), ScalarField.zeros(grid))
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        fluid_step(s, eta, np.zeros(grid.nx + 1), FluidParams(), 0.05)
    assert any("CFL" in str(w.message) for w in rec)


def test_manufactured_space_order():
    from plateflow.verify import fluid_space_order
    r = fluid_space_order(levels=(16, 32), steps=60)
    assert r["order"] > 1.8
