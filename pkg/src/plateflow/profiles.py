"""Named analytic profiles for plate data, loads and initial velocities.

Plate shapes vanish with their slope at both ends, so ``1 + a * shape`` is a
valid clamped deformation and ``a * shape`` a valid plate velocity.  The
``mean_zero`` flag marks shapes with zero integral: only those are
admissible plate velocities for a closed, incompressible container.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ConfigError
from .geometry import slope_term
from .grid import GridSpec, VectorField


@dataclass(frozen=True)
class Profile:
    name: str
    fn: Callable[[np.ndarray, float], np.ndarray]
    mean_zero: bool
    clamped: bool = True


def _flat(x, L):
    return np.zeros_like(x)


def _cosine_bump(x, L):
    return np.sin(np.pi * x / L) ** 2


def _uniform(x, L):
    return np.ones_like(x)


def _clamped_quartic(x, L):
    return 16.0 * x ** 2 * (L - x) ** 2 / L ** 4


def _sine_cutoff(x, L):
    return np.sin(2 * np.pi * x / L) * np.sin(np.pi * x / L) ** 2


def _antisymmetric_quartic(x, L):
    # peak value 1 at x = L/2 -+ L/(2 sqrt 5)
    s = 2.0 * x / L - 1.0
    return (1.0 - s ** 2) ** 2 * s * (25.0 * np.sqrt(5.0) / 16.0)


PLATE_PROFILES = {
    p.name: p for p in (
        Profile("flat", _flat, True),
        Profile("cosine_bump", _cosine_bump, False),
        Profile("clamped_quartic", _clamped_quartic, False),
        Profile("sine_cutoff", _sine_cutoff, True),
        Profile("antisymmetric_quartic", _antisymmetric_quartic, True),
        Profile("uniform", _uniform, False, clamped=False),
    )
}


def plate_profile(name: str) -> Profile:
    try:
        return PLATE_PROFILES[name]
    except KeyError:
        raise ConfigError(f"unknown plate profile {name!r}; choose from {sorted(PLATE_PROFILES)}") from None


def plate_shape(name: str, grid: GridSpec, amplitude: float = 1.0) -> np.ndarray:
    prof = plate_profile(name)
    out = amplitude * prof.fn(grid.x_nodes, grid.L)
    if prof.clamped:
        out[0] = out[-1] = 0.0  # remove rounding noise at the pinned ends
    return out


def random_mean_zero_shape(grid: GridSpec, seed: int, modes: int = 3) -> np.ndarray:
    """Seeded combination of clamped, mean-zero modes sin(2 pi k x/L) sin^2(pi x/L), max |.| = 1."""
    rng = np.random.default_rng(seed)
    x, L = grid.x_nodes, grid.L
    coef = rng.standard_normal(modes)
    out = sum(c * np.sin(2 * np.pi * (k + 1) * x / L) for k, c in enumerate(coef)) * np.sin(np.pi * x / L) ** 2
    out[0] = out[-1] = 0.0
    return out / np.abs(out).max()


# --- velocities from stream functions ---------------------------------------

def stream_velocity(psi: np.ndarray, eta: np.ndarray, grid: GridSpec) -> VectorField:
    """Velocity with reference stream function ``psi`` at grid nodes.

    psi has shape (nx+1, ny+1).  The Piola fluxes are U = d psi / d y-hat
    and W = -d psi / dx, so the mapped divergence vanishes to rounding for
    any height eta.  psi must be constant (zero) on the walls and the bottom
    for the field to satisfy no-slip there.
    """
    hx, hy = grid.hx, grid.hy
    U = np.diff(psi, axis=1) / hy
    W = -np.diff(psi, axis=0) / hx
    ux = U / eta[:, None]
    tmp = VectorField(ux, np.zeros((grid.nx, grid.ny + 1)), grid)
    uy = W + grid.y_nodes[None, :] * slope_term(eta, tmp)
    return VectorField(ux, uy, grid)


def _smoothstep(yh):
    return 3 * yh ** 2 - 2 * yh ** 3


def vortex_stream(grid: GridSpec) -> np.ndarray:
    X, Y = np.meshgrid(grid.x_nodes, grid.y_nodes, indexing="ij")
    psi = np.sin(np.pi * X / grid.L) ** 2 * np.sin(np.pi * Y) ** 2 / np.pi
    psi[[0, -1], :] = 0.0   # sin(pi)^2 is not exactly zero in floating point
    return psi


def lift_stream(grid: GridSpec, top_velocity: np.ndarray) -> np.ndarray:
    """Stream function whose top flux equals ``top_velocity`` (cell centres).

    Requires zero total flux, otherwise the lateral wall would leak.
    """
    cum = np.concatenate([[0.0], np.cumsum(top_velocity) * grid.hx])
    if abs(cum[-1]) > 1e-12 * max(1.0, np.abs(cum).max()):
        raise ConfigError("interface velocity has nonzero net flux")
    cum[-1] = 0.0
    return -cum[:, None] * _smoothstep(grid.y_nodes)[None, :]


VELOCITY_PROFILES = ("zero", "vortex")


def initial_velocity(name: str, grid: GridSpec, eta: np.ndarray, eta_t: np.ndarray,
                     amplitude: float = 1.0) -> VectorField:
    """Solenoidal, no-slip velocity on Omega_eta whose top flux matches eta_t."""
    if name not in VELOCITY_PROFILES:
        raise ConfigError(f"unknown velocity profile {name!r}; choose from {list(VELOCITY_PROFILES)}")
    psi = lift_stream(grid, 0.5 * (eta_t[1:] + eta_t[:-1]))
    if name == "vortex":
        psi = psi + amplitude * vortex_stream(grid)
    return stream_velocity(psi, eta, grid)
