"""Closed-form fields used as oracles by the verification suites.

Velocities are generated from stream functions written in reference
coordinates, F(x, y-hat), on an analytic graph domain.  With y = y-hat eta(x)
the physical velocity is

    u_x = F_yh / eta,        u_y = -F_x + y-hat eta' / eta * F_yh,

which is divergence-free on Omega_eta.  Choosing F_yh = 0 at y-hat = 0, 1
gives a zero horizontal trace on the bottom and on the interface.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import GridSpec, VectorField


@dataclass(frozen=True)
class Geometry:
    """eta(x) = 1 + a sin^2(pi x / L) cos(2 pi k x / L + phase)."""
    a: float
    k: int = 1
    phase: float = 0.0

    def eta(self, x, L):
        s = np.sin(np.pi * x / L) ** 2
        return 1.0 + self.a * s * np.cos(2 * np.pi * self.k * x / L + self.phase)

    def deta(self, x, L):
        s = np.sin(np.pi * x / L) ** 2
        ds = (np.pi / L) * np.sin(2 * np.pi * x / L)
        arg = 2 * np.pi * self.k * x / L + self.phase
        return self.a * (ds * np.cos(arg) - s * (2 * np.pi * self.k / L) * np.sin(arg))

    def nodes(self, grid: GridSpec) -> np.ndarray:
        e = self.eta(grid.x_nodes, grid.L)
        e[0] = e[-1] = 1.0
        return e


@dataclass(frozen=True)
class StreamField:
    """F(x, y-hat) = A sin(kx x + phase) cos(m pi y-hat)."""
    A: float
    kx: float
    phase: float
    m: int

    def F(self, x, yh):
        return self.A * np.sin(self.kx * x + self.phase) * np.cos(self.m * np.pi * yh)

    def F_x(self, x, yh):
        return self.A * self.kx * np.cos(self.kx * x + self.phase) * np.cos(self.m * np.pi * yh)

    def F_y(self, x, yh):
        return -self.A * self.m * np.pi * np.sin(self.kx * x + self.phase) * np.sin(self.m * np.pi * yh)

    def velocity(self, x, yh, eta, deta):
        fy = self.F_y(x, yh)
        return fy / eta, -self.F_x(x, yh) + yh * deta / eta * fy


def _points(grid: GridSpec):
    Xx, Yx = grid.coords("face-x")
    Xy, Yy = grid.coords("face-y")
    return Xx, Yx, Xy, Yy


def sample_velocity(field: StreamField, geom: Geometry, grid: GridSpec) -> VectorField:
    Xx, Yx, Xy, Yy = _points(grid)
    L = grid.L
    ux, _ = field.velocity(Xx, Yx, geom.eta(Xx, L), geom.deta(Xx, L))
    _, uy = field.velocity(Xy, Yy, geom.eta(Xy, L), geom.deta(Xy, L))
    return VectorField(ux, uy, grid)


def continuum_hat(field: StreamField, geom1: Geometry, geom2: Geometry, grid: GridSpec) -> VectorField:
    """Exact hat transform of the field on Omega_2, sampled on the grid of Omega_1.

    gamma J^-1 w = (gamma w1, -y gamma' w1 + w2) with y = y-hat eta1.
    """
    Xx, Yx, Xy, Yy = _points(grid)
    L = grid.L
    out = []
    for X, Y, comp in ((Xx, Yx, 0), (Xy, Yy, 1)):
        e1, d1 = geom1.eta(X, L), geom1.deta(X, L)
        e2, d2 = geom2.eta(X, L), geom2.deta(X, L)
        gam = e2 / e1
        dgam = (d2 * e1 - e2 * d1) / e1 ** 2
        w1, w2 = field.velocity(X, Y, e2, d2)
        out.append(gam * w1 if comp == 0 else -Y * e1 * dgam * w1 + w2)
    return VectorField(out[0], out[1], grid)


def discrete_velocity(field: StreamField, geom: Geometry, grid: GridSpec) -> VectorField:
    """Discretely solenoidal counterpart built from nodal samples of F."""
    from .profiles import stream_velocity
    X, Y = grid.coords("node")
    return stream_velocity(field.F(X, Y), geom.nodes(grid), grid)


def random_fields(n: int, seed: int = 0, L: float = 2.0) -> list[StreamField]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        out.append(StreamField(A=float(rng.uniform(0.5, 1.5)),
                               kx=float(2 * np.pi / L * rng.integers(1, 3)),
                               phase=float(rng.uniform(0, 2 * np.pi)),
                               m=int(rng.integers(1, 3))))
    return out


GEOMETRY_PAIRS = (
    (Geometry(0.0), Geometry(0.1, 1, 0.0)),
    (Geometry(0.1, 1, 0.0), Geometry(0.0)),
    (Geometry(0.15, 1, 0.3), Geometry(-0.1, 2, 1.0)),
    (Geometry(0.2, 2, 0.5), Geometry(0.05, 1, 2.0)),
    (Geometry(-0.2, 1, 1.2), Geometry(0.25, 2, 0.0)),
)


# --- plate manufactured solution ---------------------------------------------

@dataclass(frozen=True)
class PlateMMS:
    """eta(t, x) = 1 + a cos(omega t) S(x), S = sin^2(pi x / L)."""
    a: float = 0.1
    omega: float = 2.0

    def _S(self, x, L, order):
        q = 2 * np.pi / L
        c = np.cos(q * x)
        if order == 0:
            return 0.5 * (1 - c)
        if order == 2:
            return 0.5 * q ** 2 * c
        if order == 4:
            return -0.5 * q ** 4 * c
        raise ValueError(order)

    def eta(self, t, x, L):
        return 1.0 + self.a * np.cos(self.omega * t) * self._S(x, L, 0)

    def eta_t(self, t, x, L):
        return -self.a * self.omega * np.sin(self.omega * t) * self._S(x, L, 0)

    def source(self, t, x, L, params):
        """rho_s h0 eta_tt + alpha eta'''' - beta eta'' - gamma eta_t''."""
        T, Tt = np.cos(self.omega * t), -self.omega * np.sin(self.omega * t)
        Ttt = -self.omega ** 2 * T
        S0, S2, S4 = (self._S(x, L, k) for k in (0, 2, 4))
        return self.a * (params.mass * Ttt * S0 + params.alpha * T * S4
                         - params.beta * T * S2 - params.gamma_visc * Tt * S2)


# --- fluid manufactured solution (flat static channel) ------------------------

@lru_cache(maxsize=8)
def _fluid_mms_functions(L: float, rho: float, mu: float, omega: float):
    import sympy as sp
    t, x, y = sp.symbols("t x y", real=True)
    T = sp.cos(omega * t) if omega != 0 else sp.Integer(1)
    psi = T * sp.sin(sp.pi * x / L) ** 2 * sp.sin(sp.pi * y) ** 2 / sp.pi
    u = sp.diff(psi, y)
    v = -sp.diff(psi, x)
    p = T * sp.cos(sp.pi * x / L) * sp.cos(sp.pi * y)

    def mom(w, dp):
        return (rho * (sp.diff(w, t) + u * sp.diff(w, x) + v * sp.diff(w, y))
                - mu * (sp.diff(w, x, 2) + sp.diff(w, y, 2)) + dp) / rho

    fx = mom(u, sp.diff(p, x))
    fy = mom(v, sp.diff(p, y))
    lam = lambda e: sp.lambdify((t, x, y), e, "numpy")  # noqa: E731
    return lam(u), lam(v), lam(p), lam(fx), lam(fy)


@dataclass(frozen=True)
class FluidMMS:
    """Stream-function solution with no-slip on all four sides of [0, L] x [0, 1]."""
    L: float = 2.0
    rho: float = 1.0
    mu: float = 1.0
    omega: float = 0.0

    def _fns(self):
        return _fluid_mms_functions(self.L, self.rho, self.mu, self.omega)

    def velocity(self, t, grid: GridSpec) -> VectorField:
        u, v, *_ = self._fns()
        Xx, Yx, Xy, Yy = _points(grid)
        ux = np.broadcast_to(u(t, Xx, Yx), Xx.shape).copy()
        uy = np.broadcast_to(v(t, Xy, Yy), Xy.shape).copy()
        ux[[0, -1], :] = 0.0   # exact no-slip on the sampled boundary faces
        uy[:, [0, -1]] = 0.0
        return VectorField(ux, uy, grid)

    def pressure(self, t, grid: GridSpec) -> np.ndarray:
        p = self._fns()[2]
        X, Y = grid.coords("center")
        return np.broadcast_to(p(t, X, Y), X.shape).copy()

    def forcing(self, t, X, Y, comp):
        f = self._fns()[3 + comp]
        return np.broadcast_to(f(t, X, Y), np.shape(X)).astype(float)
