"""Build coupled problems from a configuration and record their trajectories."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import SimulationConfig
from .coupling import (CoupledState, CouplingParams, coupled_step, energy_report, initial_state,
                       kinematic_residual)
from .fluid import FluidParams, FluidState, divergence_residual
from .geometry import domain_volume
from .grid import GridSpec, ScalarField, VectorField
from .mollify import Trajectory
from .profiles import (initial_velocity, plate_shape, random_mean_zero_shape, stream_velocity,
                       vortex_stream)
from .plate import PlateState


# --- outer forces -------------------------------------------------------------------

def _bump2(x, y, L):
    return np.sin(np.pi * x / L) ** 2 * np.sin(np.pi * np.clip(y, 0.0, 1.0)) ** 2


def fluid_forcing(name: str, amplitude: float, frequency: float, L: float):
    """Named body force f(t, X, Y, comp) at physical points, or None."""
    if name == "none" or amplitude == 0.0:
        return None
    if name == "shear":
        def f(t, X, Y, comp):
            if comp == 1:
                return np.zeros(np.shape(X))
            return amplitude * np.cos(frequency * t) * np.sin(np.pi * X / L) ** 2 * np.clip(Y, 0.0, None)
        return f
    if name == "swirl":
        # curl of the bump potential: f = (d_y q, -d_x q)
        def f(t, X, Y, comp):
            s = amplitude * np.cos(frequency * t)
            yc = np.clip(Y, 0.0, 1.0)
            if comp == 0:
                return s * np.sin(np.pi * X / L) ** 2 * np.pi * np.sin(2 * np.pi * yc)
            return -s * (np.pi / L) * np.sin(2 * np.pi * X / L) * np.sin(np.pi * yc) ** 2
        return f
    raise ValueError(name)


def plate_forcing(name: str, amplitude: float, frequency: float, grid: GridSpec):
    if amplitude == 0.0:
        return None
    shape = plate_shape(name, grid, amplitude)

    def g(t, x):
        return shape * np.cos(frequency * t)
    return g


def coupling_params(cfg: SimulationConfig) -> CouplingParams:
    fl, fo, c = cfg.fluid, cfg.forcing, cfg.coupling
    fp = FluidParams(rho_f=fl.rho_f, mu_f=fl.mu_f, stress_form=fl.stress_form,
                     solver_tol=fl.solver_tol, max_iter=fl.max_iter,
                     forcing=fluid_forcing(fo.fluid_profile, fo.fluid_amplitude, fo.fluid_frequency, cfg.grid.L))
    return CouplingParams(fluid=fp, plate=cfg.plate,
                          plate_load=plate_forcing(fo.plate_profile, fo.plate_amplitude, fo.plate_frequency, cfg.grid),
                          tol=c.tol, max_subiterations=c.max_subiterations, relax0=c.relax0,
                          load_form=c.load_form, smoothing=c.smoothing, floor=c.floor)


# --- initial data ---------------------------------------------------------------------

def perturbation_shape(cfg: SimulationConfig, seed: int | None = None) -> np.ndarray:
    p = cfg.perturbation
    seed = cfg.seed if seed is None else seed
    if p.shape == "random":
        return random_mean_zero_shape(cfg.grid, seed)
    return plate_shape(p.shape, cfg.grid)


def _velocity_perturbation(cfg: SimulationConfig, eta: np.ndarray, seed: int) -> VectorField:
    g = cfg.grid
    psi = vortex_stream(g)
    if cfg.perturbation.shape == "random":
        X, Y = g.coords("node")
        rng = np.random.default_rng(seed)
        psi = np.zeros_like(X)
        for k in range(1, 4):
            psi += rng.standard_normal() * np.sin(np.pi * k * X / g.L) ** 2 * np.sin(np.pi * Y) ** 2
        psi /= max(np.abs(psi).max(), 1e-300)
    return stream_velocity(psi, eta, g)


def initial_data(cfg: SimulationConfig, eps: float | None = None, seed: int | None = None):
    """Plate and fluid initial states, with the configured perturbation of size eps."""
    g = cfg.grid
    ini = cfg.initial
    eps = cfg.perturbation.eps if eps is None else eps
    seed = cfg.seed if seed is None else seed
    eta0 = 1.0 + plate_shape(ini.eta0, g, ini.eta0_amplitude)
    eta_star = plate_shape(ini.eta_star, g, ini.eta_star_amplitude)
    target = cfg.perturbation.target
    if eps != 0.0 and target == "plate-position":
        eta0 = eta0 + eps * perturbation_shape(cfg, seed)
    elif eps != 0.0 and target == "plate-velocity":
        eta_star = eta_star + eps * perturbation_shape(cfg, seed)
    eta0[0] = eta0[-1] = 1.0
    eta_star[0] = eta_star[-1] = 0.0
    v0 = initial_velocity(ini.v0, g, eta0, eta_star, ini.v0_amplitude)
    if eps != 0.0 and target == "velocity":
        v0 = v0 + _velocity_perturbation(cfg, eta0, seed) * eps
    plate = PlateState.from_arrays(g, eta0, eta_star)
    fluid = FluidState(v0, ScalarField.zeros(g, "center"))
    return fluid, plate


def initial_coupled_state(cfg: SimulationConfig, eps: float | None = None, seed: int | None = None,
                          params: CouplingParams | None = None) -> CoupledState:
    params = params or coupling_params(cfg)
    fluid, plate = initial_data(cfg, eps, seed)
    return initial_state(fluid, plate, params)


# --- running ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Snapshot:
    """Sampled coupled state; ``w`` is the nodal interface velocity seen by the fluid."""
    t: float
    v: VectorField
    p: np.ndarray
    eta: np.ndarray
    eta_t: np.ndarray
    w: np.ndarray

    @classmethod
    def of(cls, s: CoupledState) -> "Snapshot":
        return cls(float(s.t), s.fluid.v, s.fluid.p.values, s.plate.eta.values, s.plate.eta_t.values,
                   np.asarray(s.interface_velocity, dtype=float))

    @property
    def grid(self) -> GridSpec:
        return self.v.grid


ENERGY_COLUMNS = ("step", "t", "kinetic", "plate_kinetic", "bending", "tension", "dissipation", "work",
                  "residual", "kinematic_residual", "divergence", "subiterations", "volume")


def energy_row(state: CoupledState, params: CouplingParams) -> dict:
    r = energy_report(state, params)
    return {"step": state.step_index, "t": state.t, "kinetic": r.kinetic, "plate_kinetic": r.plate_kinetic,
            "bending": r.bending, "tension": r.tension, "dissipation": r.dissipation_integral,
            "work": r.work_input, "residual": r.residual, "kinematic_residual": kinematic_residual(state),
            "divergence": divergence_residual(state.fluid.v, state.plate.eta),
            "subiterations": state.subiterations, "volume": domain_volume(state.plate.eta)}


@dataclass
class SimulationResult:
    config: SimulationConfig
    params: CouplingParams
    trajectory: Trajectory
    energy: list = field(default_factory=list)
    final: CoupledState | None = None

    @property
    def snapshots(self) -> tuple:
        return self.trajectory.states


def simulate(cfg: SimulationConfig, eps: float | None = None, seed: int | None = None,
             stride: int | None = None, n_steps: int | None = None,
             callback: Callable[[CoupledState], None] | None = None) -> SimulationResult:
    """Run the coupled problem, keeping a snapshot every ``stride`` steps and an energy row every step."""
    params = coupling_params(cfg)
    state = initial_coupled_state(cfg, eps, seed, params)
    stride = cfg.output.stride if stride is None else stride
    n_steps = cfg.grid.n_steps if n_steps is None else n_steps
    snaps = [Snapshot.of(state)]
    times = [0.0]
    rows = [energy_row(state, params)]
    for n in range(n_steps):
        state = coupled_step(state, params)
        rows.append(energy_row(state, params))
        if callback is not None:
            callback(state)
        if (n + 1) % stride == 0:
            snaps.append(Snapshot.of(state))
            times.append((n + 1) * cfg.grid.dt)
    return SimulationResult(cfg, params, Trajectory(np.array(times), tuple(snaps)), rows, state)
