"""Strongly coupled fluid-plate time stepping with Aitken-relaxed subiterations.

Each step iterates on the interface load F:

    plate_step(F)  ->  eta^{n+1},  w = (eta^{n+1} - eta^n) / dt
    fluid_step on eta^{n+1} with interface velocity w  ->  load F~
    F <- F + omega (F~ - F)     (Aitken)

until the load residual is below tolerance.  The fluid sees the step
velocity w, so the enclosed volume and the interface power balance are
exact; the plate carries a uniform Lagrange load keeping sum(eta) fixed,
which removes the incompressible "piston" mode from the iteration.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import CouplingError, DomainError
from .fluid import (FluidParams, FluidState, SolverCache, consistent_load, fluid_step_detailed,
                    kinetic_energy, stress_normal_normal)
from .geometry import domain_volume, to_centers, ux_at_yfaces
from .grid import GridSpec
from .plate import PlateParams, PlateState, _matrices, plate_energy, plate_step, step_velocity

PlateLoadFn = Callable[[float, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CouplingParams:
    fluid: FluidParams = field(default_factory=FluidParams)
    plate: PlateParams = field(default_factory=PlateParams)
    plate_load: PlateLoadFn | None = None   # outer force g(t, x) at plate nodes
    tol: float = 1e-8
    max_subiterations: int = 50
    relax0: float = 0.5
    load_form: str = "consistent"           # or "pointwise"
    smoothing: bool = False
    floor: float = 0.0

    def __post_init__(self):
        if self.load_form not in ("consistent", "pointwise"):
            raise DomainError(f"unknown load form {self.load_form!r}")
        if not 0 < self.relax0 <= 1:
            raise DomainError("initial relaxation must lie in (0, 1]")


@dataclass(frozen=True)
class EnergyLedger:
    initial: float = 0.0
    dissipation: float = 0.0
    work: float = 0.0


@dataclass(frozen=True)
class CoupledState:
    fluid: FluidState
    plate: PlateState
    step_index: int = 0
    load: np.ndarray | None = None            # last fluid load on the plate (nodal)
    interface_velocity: np.ndarray | None = None  # nodal velocity used by the fluid
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    subiterations: int = 0

    def __post_init__(self):
        if self.fluid.grid != self.plate.grid:
            raise DomainError("fluid and plate live on different grids")
        g = self.grid
        if self.load is None:
            object.__setattr__(self, "load", np.zeros(g.nx + 1))
        if self.interface_velocity is None:
            object.__setattr__(self, "interface_velocity", self.plate.eta_t.values.copy())

    @property
    def grid(self) -> GridSpec:
        return self.plate.grid

    @property
    def t(self) -> float:
        return self.plate.t


def initial_state(fluid: FluidState, plate: PlateState, params: CouplingParams) -> CoupledState:
    s = CoupledState(fluid, plate)
    return replace(s, ledger=EnergyLedger(initial=total_energy(s, params)))


def _smooth(F: np.ndarray) -> np.ndarray:
    out = F.copy()
    out[1:-1] = 0.25 * F[:-2] + 0.5 * F[1:-1] + 0.25 * F[2:]
    out[[0, -1]] = 0.0
    return out


def _fluid_load(fl: FluidState, info, eta, params: CouplingParams) -> np.ndarray:
    if params.load_form == "consistent":
        F = consistent_load(fl, info)
    else:
        F = stress_normal_normal(fl, eta, params.fluid).values.copy()
        F[[0, -1]] = 0.0
    return _smooth(F) if params.smoothing else F


def coupled_step(state: CoupledState, params: CouplingParams, dt: float | None = None,
                 decouple: bool = False) -> CoupledState:
    """One strongly coupled step; ``decouple`` feeds the fluid a rigid lid (test hook)."""
    g = state.grid
    dt = g.dt if dt is None else dt
    t_mid = state.t + 0.5 * dt
    gload = None
    if params.plate_load is not None:
        gload = np.asarray(params.plate_load(t_mid, g.x_nodes), dtype=float)
    F = np.array(state.load, dtype=float)
    omega = params.relax0
    r_prev = None
    cache = SolverCache()
    step = state.step_index + 1
    for k in range(1, params.max_subiterations + 1):
        plate_new = plate_step(state.plate, params.plate, force=F, g=gload, dt=dt,
                               volume_constraint=True, floor=params.floor)
        w = step_velocity(state.plate, plate_new)
        w_fluid = np.zeros_like(w) if decouple else w
        fl, info = fluid_step_detailed(state.fluid, plate_new.eta, w_fluid, params.fluid, dt,
                                       cache=cache, step=step, warn_cfl=(k == 1))
        F_new = _fluid_load(fl, info, plate_new.eta, params)
        r = F_new - F
        rn = np.abs(r).max()
        if rn <= params.tol * (1.0 + np.abs(F_new).max()):
            break
        if not np.isfinite(rn) or (r_prev is not None and rn > 1e6 * (1.0 + np.abs(F_new).max())):
            raise CouplingError(f"subiterations diverged at step {step}; reduce dt or relaxation",
                                residual=float(rn), step=step)
        if r_prev is not None:
            dr = r - r_prev
            denom = float(dr @ dr)
            if denom > 0:
                omega = -omega * float(r_prev @ dr) / denom
        F = F + omega * r
        r_prev = r
    else:
        raise CouplingError(f"no convergence in {params.max_subiterations} subiterations at step {step}; "
                            "reduce dt or strengthen relaxation", residual=float(rn), step=step)

    lap, D, c = _matrices(g.nx, g.hx)
    wi = w[1:-1]
    diss = info.dissipation_rate + params.plate.gamma_visc * g.hx * float(np.sum((D @ wi) ** 2))
    work = 0.0
    if gload is not None:
        work += params.plate.rho_s * g.hx * float(gload[1:-1] @ wi)
    if params.fluid.forcing is not None:
        work += _forcing_power(fl, plate_new.eta.values, params.fluid, state.t + dt)
    led = state.ledger
    ledger = EnergyLedger(led.initial, led.dissipation + dt * diss, led.work + dt * work)
    return CoupledState(fl, plate_new, step, F_new, w, ledger, k)


def _forcing_power(fl: FluidState, eta: np.ndarray, fp: FluidParams, t: float) -> float:
    g = fl.grid
    Xx, Yx = g.coords("face-x")
    Xy, Yy = g.coords("face-y")
    ec = to_centers(eta)
    fx = fp.forcing(t, Xx, Yx * eta[:, None], 0)
    fy = fp.forcing(t, Xy, Yy * ec[:, None], 1)
    px = np.sum(eta[1:-1, None] * fx[1:-1] * fl.v.u_x[1:-1])
    py = np.sum(ec[:, None] * fy[:, 1:-1] * fl.v.u_y[:, 1:-1])
    return fp.rho_f * g.hx * g.hy * float(px + py)


# --- diagnostics -------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    kinetic: float
    plate_kinetic: float
    bending: float
    tension: float
    dissipation_integral: float
    work_input: float
    residual: float

    @property
    def total(self) -> float:
        return self.kinetic + self.plate_kinetic + self.bending + self.tension

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in ("kinetic", "plate_kinetic", "bending", "tension",
                                           "dissipation_integral", "work_input", "residual")}
        d["total"] = self.total
        return d


def total_energy(state: CoupledState, params: CouplingParams) -> float:
    pe = plate_energy(state.plate, params.plate)
    return kinetic_energy(state.fluid.v, state.plate.eta, params.fluid.rho_f) + sum(pe.values())


def energy_report(state: CoupledState, params: CouplingParams) -> EnergyReport:
    """Energy terms at the current step and the budget residual
    E(t) + dissipation(t) - E(0) - work(t)."""
    pe = plate_energy(state.plate, params.plate)
    kin = kinetic_energy(state.fluid.v, state.plate.eta, params.fluid.rho_f)
    led = state.ledger
    total = kin + sum(pe.values())
    return EnergyReport(kin, pe["plate_kinetic"], pe["bending"], pe["tension"], led.dissipation,
                        led.work, total + led.dissipation - led.initial - led.work)


def kinematic_residual(state: CoupledState) -> float:
    """max |v2 - d_t eta| + max |v1| on the interface faces.

    The vertical velocity lives on the top y-faces, where the plate velocity
    of the step is the average of its two nodal values.
    """
    v = state.fluid.v
    w = to_centers(np.asarray(state.interface_velocity, dtype=float))
    horiz = ux_at_yfaces(v)[:, -1]
    return float(np.abs(v.u_y[:, -1] - w).max() + np.abs(horiz).max())


def volume_drift(state: CoupledState, initial_volume: float) -> float:
    return abs(domain_volume(state.plate.eta) - initial_volume)


def run(state: CoupledState, params: CouplingParams, n_steps: int, callback=None, stride: int = 1):
    """Advance ``n_steps`` steps, returning the list of states kept at ``stride``."""
    states = [state]
    for n in range(n_steps):
        state = coupled_step(state, params)
        if callback is not None:
            callback(state)
        if (n + 1) % stride == 0:
            states.append(state)
    return states
