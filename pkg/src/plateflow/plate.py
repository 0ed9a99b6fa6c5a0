"""Linear Koiter-type plate  rho_s h0 eta_tt + alpha eta'''' - beta eta'' - gamma eta_t'' = F + rho_s g
on omega = [0, L] with clamped ends (eta = 1, eta' = 0).

Unknowns are the interior nodal deviations u = eta - 1.  The discrete
operators are gradients of discrete energies, e.g. the bending energy
``alpha/2 * hx * sum_k c_k (Lap u)_k**2`` with trapezoid weights c_k and the
clamped ghost node u_{-1} = u_1 in Lap.  This reproduces the usual 5-point
biharmonic stencil and makes the implicit midpoint rule conserve the
discrete energy exactly when no damping or load acts.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import solveh_banded

from .errors import ContactError, DomainError
from .geometry import as_plate
from .grid import GridSpec, ScalarField


@dataclass(frozen=True)
class PlateParams:
    rho_s: float = 1.0
    h0: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    gamma_visc: float = 1.0

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("bending stiffness alpha must be positive")
        if self.beta < 0 or self.gamma_visc < 0:
            raise DomainError("tension and damping coefficients must be nonnegative")
        if self.rho_s <= 0 or self.h0 <= 0:
            raise DomainError("plate density and thickness must be positive")

    @property
    def mass(self) -> float:
        return self.rho_s * self.h0


@dataclass(frozen=True)
class PlateState:
    eta: ScalarField
    eta_t: ScalarField
    t: float = 0.0
    multiplier: float = 0.0  # uniform load enforcing the volume constraint, if any

    def __post_init__(self):
        eta, eta_t = as_plate(self.eta), as_plate(self.eta_t)
        if np.any(eta.values <= 0):
            raise ContactError("plate deformation must stay positive")
        if abs(eta.values[0] - 1) > 1e-12 or abs(eta.values[-1] - 1) > 1e-12:
            raise DomainError("plate must be pinned at eta = 1 on both ends")
        if eta_t.values[0] != 0 or eta_t.values[-1] != 0:
            raise DomainError("plate velocity must vanish at both ends")

    @property
    def grid(self) -> GridSpec:
        return self.eta.grid

    @classmethod
    def flat(cls, grid: GridSpec, t: float = 0.0) -> "PlateState":
        return cls(ScalarField(np.ones(grid.nx + 1), "plate", grid),
                   ScalarField(np.zeros(grid.nx + 1), "plate", grid), t)

    @classmethod
    def from_arrays(cls, grid: GridSpec, eta, eta_t, t: float = 0.0) -> "PlateState":
        return cls(ScalarField(eta, "plate", grid), ScalarField(eta_t, "plate", grid), t)


@lru_cache(maxsize=32)
def _matrices(nx: int, hx: float):
    """Lap ((nx+1) x (nx-1)), forward difference D (nx x (nx-1)), weights c."""
    n = nx - 1
    lap = np.zeros((nx + 1, n))
    for k in range(1, nx):
        lap[k, k - 1] = -2.0
        if k - 2 >= 0:
            lap[k, k - 2] = 1.0
        if k < n:
            lap[k, k] = 1.0
    lap[0, 0] = 2.0          # ghost u_{-1} = u_1
    lap[nx, n - 1] = 2.0
    lap /= hx ** 2
    D = np.zeros((nx, n))
    for k in range(nx):
        if k < n:
            D[k, k] = 1.0
        if k - 1 >= 0:
            D[k, k - 1] = -1.0
    D /= hx
    c = np.ones(nx + 1)
    c[0] = c[-1] = 0.5
    return lap, D, c


def operators(grid: GridSpec, params: PlateParams):
    """Per-unit-length stiffness K and damping C acting on interior nodes."""
    lap, D, c = _matrices(grid.nx, grid.hx)
    K = params.alpha * lap.T @ (c[:, None] * lap) + params.beta * D.T @ D
    C = params.gamma_visc * D.T @ D
    return K, C


def laplacian(eta: ScalarField) -> np.ndarray:
    """Discrete Laplacian at all nodes (clamped ghost nodes at the ends)."""
    lap, _, _ = _matrices(eta.grid.nx, eta.grid.hx)
    return lap @ (eta.values[1:-1] - 1.0)


def plate_operator(state: PlateState, params: PlateParams) -> ScalarField:
    """alpha Lap^2 eta - beta Lap eta - gamma Lap eta_t at the nodes (0 at the pinned ends)."""
    K, C = operators(state.grid, params)
    out = np.zeros(state.grid.nx + 1)
    out[1:-1] = K @ (state.eta.values[1:-1] - 1.0) + C @ state.eta_t.values[1:-1]
    return ScalarField(out, "plate", state.grid)


def boundary_laplacian_residual(state: PlateState) -> float:
    """max |Lap eta| at the two ends; the scheme does not impose Lap eta = 0 there."""
    lap = laplacian(state.eta)
    return float(max(abs(lap[0]), abs(lap[-1])))


def plate_energy(state: PlateState, params: PlateParams) -> dict:
    g = state.grid
    lap, D, c = _matrices(g.nx, g.hx)
    u = state.eta.values[1:-1] - 1.0
    v = state.eta_t.values[1:-1]
    return {
        "plate_kinetic": 0.5 * params.mass * g.hx * float(v @ v),
        "bending": 0.5 * params.alpha * g.hx * float(np.sum(c * (lap @ u) ** 2)),
        "tension": 0.5 * params.beta * g.hx * float(np.sum((D @ u) ** 2)),
    }


def _to_banded(A: np.ndarray, bw: int = 2) -> np.ndarray:
    n = A.shape[0]
    ab = np.zeros((bw + 1, n))
    for d in range(bw + 1):
        ab[bw - d, d:] = np.diagonal(A, d)
    return ab


def _load(x, grid: GridSpec) -> np.ndarray:
    if x is None:
        return np.zeros(grid.nx - 1)
    if isinstance(x, ScalarField):
        x = x.values
    x = np.broadcast_to(np.asarray(x, dtype=float), (grid.nx + 1,))
    return x[1:-1]


def plate_step(state: PlateState, params: PlateParams, force=None, g=None, dt: float | None = None,
               volume_constraint: bool = False, floor: float = 0.0) -> PlateState:
    """One implicit-midpoint (average-acceleration Newmark) step.

    ``force`` is the fluid load F and ``g`` the outer force (multiplied by
    rho_s), both nodal and taken constant over the step.  With
    ``volume_constraint`` a uniform load is added so that the enclosed
    volume sum(eta) is unchanged; its value is stored in ``multiplier``.
    """
    grid = state.grid
    dt = grid.dt if dt is None else dt
    if dt <= 0:
        raise DomainError("time step must be positive")
    K, C = operators(grid, params)
    m = params.mass
    u = state.eta.values[1:-1] - 1.0
    v = state.eta_t.values[1:-1]
    rhs = (m / dt) * v - 0.5 * C @ v - 0.25 * dt * K @ v - K @ u + _load(force, grid) + params.rho_s * _load(g, grid)
    A = (m / dt) * np.eye(u.size) + 0.5 * C + 0.25 * dt * K
    ab = _to_banded(A)
    try:
        v_new = solveh_banded(ab, rhs)
        lam = 0.0
        if volume_constraint:
            ones = np.ones(u.size)
            z = solveh_banded(ab, ones)
            # sum(v + v_new) = 0 keeps sum(eta) fixed under the midpoint update
            lam = -(np.sum(v_new) + np.sum(v)) / np.sum(z)
            v_new = v_new + lam * z
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD for alpha > 0
        raise RuntimeError("plate system is singular") from exc
    u_new = u + 0.5 * dt * (v + v_new)
    eta_new = np.ones(grid.nx + 1)
    eta_new[1:-1] += u_new
    if np.any(eta_new <= floor):
        raise ContactError(f"plate contact at t = {state.t + dt:.6g}: min eta = {eta_new.min():.3e}")
    vt = np.zeros(grid.nx + 1)
    vt[1:-1] = v_new
    return PlateState(ScalarField(eta_new, "plate", grid), ScalarField(vt, "plate", grid),
                      state.t + dt, float(lam))


def step_velocity(old: PlateState, new: PlateState) -> np.ndarray:
    """Nodal step-averaged velocity (eta^{n+1} - eta^n) / dt."""
    return 0.5 * (old.eta_t.values + new.eta_t.values)
