"""Discrete Reynolds transport audit along a simulated trajectory.

For a smooth test function phi(t, x, y) the moving-domain identity reads

    d/dt int_{Omega(t)} v . phi = int_{Omega(t)} d_t(v . phi) + int_omega (v . phi)(x, eta) d_t eta dx.

Each step [t_n, t_{n+1}] is audited with forward differences: the left side
is the difference quotient of the quadrature, the time derivative at fixed
physical points uses v^{n+1} resampled (cubic spline in y-hat) at the
physical points of step n.  The residual is first order in dt.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .geometry import to_centers
from .grid import GridSpec, VectorField, trapezoid_weights


@dataclass(frozen=True)
class TransportTest:
    """phi = cos(omega t + phase) * b(x) * (cx sin(pi k y / 2), cy cos(pi k y / 2)), b a clamped bump in x."""
    k: int = 1
    omega: float = 3.0
    phase: float = 0.0
    cx: float = 1.0
    cy: float = 1.0

    def _parts(self, X, Y, L):
        b = np.sin(np.pi * X / L) ** 2
        a = 0.5 * np.pi * self.k * Y
        return b * self.cx * np.sin(a), b * self.cy * np.cos(a)

    def __call__(self, t, X, Y, L):
        px, py = self._parts(X, Y, L)
        s = np.cos(self.omega * t + self.phase)
        return s * px, s * py

    def dt(self, t, X, Y, L):
        px, py = self._parts(X, Y, L)
        s = -self.omega * np.sin(self.omega * t + self.phase)
        return s * px, s * py


TEST_FUNCTIONS = (
    TransportTest(1, 3.0, 0.0, 1.0, 1.0),
    TransportTest(2, 2.0, 0.5, 0.5, 1.0),
    TransportTest(1, 5.0, 1.0, 1.0, -0.5),
    TransportTest(3, 4.0, 2.0, -1.0, 0.7),
    TransportTest(2, 6.0, -0.7, 0.3, 1.2),
)


def _physical(g: GridSpec, eta: np.ndarray):
    Xx, Yx = g.coords("face-x")
    Xy, Yy = g.coords("face-y")
    return Xx, Yx * eta[:, None], Xy, Yy * to_centers(eta)[:, None]


def _quad(g: GridSpec, eta: np.ndarray, fx: np.ndarray, fy: np.ndarray) -> float:
    wx = trapezoid_weights(g, "face-x") * eta[:, None]
    wy = trapezoid_weights(g, "face-y") * to_centers(eta)[:, None]
    return float(np.sum(wx * fx) + np.sum(wy * fy))


def resample(v: VectorField, eta_from: np.ndarray, eta_to: np.ndarray) -> VectorField:
    """Values of v (on Omega_{eta_from}) at the physical sample points of Omega_{eta_to}."""
    g = v.grid
    ry = eta_to / eta_from
    ryc = to_centers(eta_to) / to_centers(eta_from)
    yk = np.concatenate([[0.0], g.y_centers, [1.0]])
    ux = np.empty_like(v.u_x)
    for i in range(g.nx + 1):
        col = np.concatenate([[0.0], v.u_x[i], [0.0]])
        ux[i] = CubicSpline(yk, col)(g.y_centers * ry[i])
    uy = np.empty_like(v.u_y)
    for i in range(g.nx):
        uy[i] = CubicSpline(g.y_nodes, v.u_y[i])(g.y_nodes * ryc[i])
    return VectorField(ux, uy, g)


def transport_residuals(snapshots, phi, steps=None) -> np.ndarray:
    """Residual of the Reynolds identity on every step between consecutive snapshots."""
    snaps = list(snapshots)
    g = snaps[0].v.grid
    L = g.L
    out = []
    idx = range(len(snaps) - 1) if steps is None else steps
    for n in idx:
        a, b = snaps[n], snaps[n + 1]
        dt = b.t - a.t
        ea, eb = np.asarray(a.eta, float), np.asarray(b.eta, float)
        pa = _physical(g, ea)
        pb = _physical(g, eb)
        fa = phi(a.t, pa[0], pa[1], L), phi(a.t, pa[2], pa[3], L)
        fb = phi(b.t, pb[0], pb[1], L), phi(b.t, pb[2], pb[3], L)
        lhs = (_quad(g, eb, b.v.u_x * fb[0][0], b.v.u_y * fb[1][1])
               - _quad(g, ea, a.v.u_x * fa[0][0], a.v.u_y * fa[1][1])) / dt
        vb = resample(b.v, eb, ea)
        dpa = phi.dt(a.t, pa[0], pa[1], L), phi.dt(a.t, pa[2], pa[3], L)
        rx = (vb.u_x - a.v.u_x) / dt * fa[0][0] + a.v.u_x * dpa[0][0]
        ry = (vb.u_y - a.v.u_y) / dt * fa[1][1] + a.v.u_y * dpa[1][1]
        bulk = _quad(g, ea, rx, ry)
        # interface term: v = (0, v_y) on the plate, domain velocity (eta^{n+1} - eta^n) / dt
        flux = a.v.u_y[:, -1] * fa[1][1][:, -1] * to_centers(eb - ea) / dt
        out.append(lhs - bulk - g.hx * float(np.sum(flux)))
    return np.asarray(out)
