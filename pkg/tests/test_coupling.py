import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plateflow.coupling import (CouplingParams, coupled_step, energy_report, initial_state, kinematic_residual,
                                run, volume_drift)
from plateflow.errors import CouplingError, DomainError
from plateflow.fluid import FluidState
from plateflow.geometry import domain_volume
from plateflow.grid import GridSpec
from plateflow.plate import PlateState, plate_operator
from plateflow.profiles import initial_velocity, plate_shape, random_mean_zero_shape


def rest(g, prm):
    return initial_state(FluidState.rest(g), PlateState.flat(g), prm)


def test_rest_is_a_fixed_point(grid):
    prm = CouplingParams()
    s = coupled_step(rest(grid, prm), prm)
    assert s.subiterations == 1
    assert s.fluid.v.max_abs() == 0 and np.all(s.plate.eta.values == 1.0)
    assert kinematic_residual(s) == 0
    rep = energy_report(s, prm)
    assert rep.total == 0 and rep.residual == 0


def test_steady_sag_balances_load():
    g = GridSpec(nx=16, ny=8, dt=0.05, t_end=10.0)
    load = plate_shape("sine_cutoff", g, -0.5)
    prm = CouplingParams(plate_load=lambda t, x: load)
    s = run(rest(g, prm), prm, 200, stride=200)[-1]
    K = plate_operator(s.plate, prm.plate).values
    balance = K[1:-1] - (s.load[1:-1] + prm.plate.rho_s * load[1:-1] + s.plate.multiplier)
    assert np.abs(balance).max() <= 1e-8
    assert np.abs(s.plate.eta_t.values).max() <= 1e-10
    assert s.fluid.v.max_abs() <= 1e-8
    assert s.plate.eta.values.min() < 1.0 < s.plate.eta.values.max()


@settings(max_examples=5)
@given(st.integers(0, 2 ** 31))
def test_kinematic_coupling_and_volume(seed):
    g = GridSpec(nx=16, ny=8, dt=0.01, t_end=0.05)
    prm = CouplingParams()
    eta = 1 + 0.05 * random_mean_zero_shape(g, seed)
    eta_t = 0.2 * random_mean_zero_shape(g, seed + 1)
    fl = FluidState(initial_velocity("zero", g, eta, eta_t), FluidState.rest(g).p)
    s = initial_state(fl, PlateState.from_arrays(g, eta, eta_t), prm)
    v0 = domain_volume(s.plate.eta)
    for _ in range(5):
        s = coupled_step(s, prm)
        assert kinematic_residual(s) <= 1e-8
        assert volume_drift(s, v0) <= 1e-12


def test_decoupled_hook_is_detected():
    g = GridSpec(nx=16, ny=8, dt=0.05, t_end=1.0)
    load = plate_shape("sine_cutoff", g, -0.5)
    prm = CouplingParams(plate_load=lambda t, x: load)
    s = coupled_step(rest(g, prm), prm, decouple=True)
    assert kinematic_residual(s) > 1e-4


def test_energy_budget_closes_for_free_motion():
    g = GridSpec(nx=16, ny=8, dt=0.005, t_end=0.25)
    prm = CouplingParams()
    eta = 1 + 0.05 * plate_shape("cosine_bump", g)
    s = initial_state(FluidState.rest(g), PlateState.from_arrays(g, eta, np.zeros(g.nx + 1)), prm)
    e0 = energy_report(s, prm).total
    prev = e0
    for _ in range(50):
        s = coupled_step(s, prm)
        rep = energy_report(s, prm)
        assert rep.total <= prev * (1 + 1e-12)
        prev = rep.total
    assert abs(rep.residual) <= 0.01 * e0


def test_subiteration_failure_is_reported():
    g = GridSpec(nx=16, ny=8, dt=0.05, t_end=1.0)
    load = plate_shape("sine_cutoff", g, -0.5)
    prm = CouplingParams(plate_load=lambda t, x: load, max_subiterations=1)
    with pytest.raises(CouplingError) as exc:
        coupled_step(rest(g, prm), prm)
    assert exc.value.step == 1


def test_parameter_validation():
    with pytest.raises(DomainError):
        CouplingParams(relax0=0.0)
    with pytest.raises(DomainError):
        CouplingParams(load_form="lumped")
