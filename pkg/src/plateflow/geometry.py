"""Graph domains Omega_eta = {0 <= y <= eta(x)}, the vertical map between two
of them, and operators that act on velocity fields living on a graph domain.

A velocity field on Omega_eta is stored on the reference MAC grid: the
sample attached to reference point (x, y-hat) is the physical velocity at
(x, y-hat * eta(x)).  Cell-centre quantities use eta_c = average of the two
bounding plate nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, ShapeError
from .grid import GridSpec, ScalarField, VectorField, center_derivatives


def as_plate(eta, grid: GridSpec | None = None) -> ScalarField:
    if isinstance(eta, ScalarField):
        if eta.role != "plate":
            raise ShapeError("expected a plate (nodal) field")
        return eta
    if grid is None:
        raise ShapeError("raw arrays need a grid")
    return ScalarField(eta, "plate", grid)


def to_centers(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a[1:] + a[:-1])


def slope_nodes(a: np.ndarray, hx: float) -> np.ndarray:
    """d/dx of a nodal array; second-order one-sided at the endpoints."""
    return np.gradient(a, hx, edge_order=2)


def slope_centers(a: np.ndarray, hx: float) -> np.ndarray:
    return np.diff(a) / hx


@dataclass(frozen=True)
class DomainMap:
    """gamma = eta2 / eta1 and its x-derivative at plate nodes.

    psi(x, y) = (x, gamma(x) y) carries Omega_1 onto Omega_2.  Cell-centre
    values use ``gamma_c = eta2_c / eta1_c`` so that ``gamma_c * eta1_c``
    reproduces ``eta2_c`` exactly.
    """
    gamma: ScalarField
    dx_gamma: ScalarField
    eta1: ScalarField
    eta2: ScalarField
    grid: GridSpec

    @property
    def gamma_c(self) -> np.ndarray:
        return to_centers(self.eta2.values) / to_centers(self.eta1.values)

    def inverse(self) -> "DomainMap":
        return build_domain_map(self.eta2, self.eta1)


def build_domain_map(eta1: ScalarField, eta2: ScalarField) -> DomainMap:
    eta1, eta2 = as_plate(eta1), as_plate(eta2)
    if eta1.grid != eta2.grid:
        raise ShapeError("eta1 and eta2 live on different grids")
    if np.any(eta1.values <= 0) or np.any(eta2.values <= 0):
        raise DomainError("graph heights must be strictly positive")
    g = eta1.grid
    gamma = eta2.values / eta1.values
    return DomainMap(ScalarField(gamma, "plate", g),
                     ScalarField(slope_nodes(gamma, g.hx), "plate", g),
                     eta1, eta2, g)


def jacobian_matrices(dmap: DomainMap, y):
    """J = D psi, its inverse, J~ = J o psi^-1 and its inverse at each node.

    ``y`` is a physical height (scalar or per-node array): a height in
    Omega_1 for J and in Omega_2 for J~.  Arrays have shape ``(nx+1, 2, 2)``.
    """
    gam = dmap.gamma.values
    dg = dmap.dx_gamma.values
    y = np.broadcast_to(np.asarray(y, dtype=float), gam.shape)
    n = gam.size
    J = np.zeros((n, 2, 2))
    J[:, 0, 0] = 1.0
    J[:, 1, 0] = y * dg
    J[:, 1, 1] = gam
    Jinv = np.zeros((n, 2, 2))
    Jinv[:, 0, 0] = 1.0
    Jinv[:, 1, 0] = -y * dg / gam
    Jinv[:, 1, 1] = 1.0 / gam
    Jt = np.zeros((n, 2, 2))
    Jt[:, 0, 0] = 1.0
    Jt[:, 1, 0] = y * dg / gam
    Jt[:, 1, 1] = gam
    Jtinv = np.zeros((n, 2, 2))
    Jtinv[:, 0, 0] = 1.0
    Jtinv[:, 1, 0] = -y * dg / gam ** 2
    Jtinv[:, 1, 1] = 1.0 / gam
    return J, Jinv, Jt, Jtinv


@dataclass(frozen=True)
class InterfaceNormal:
    n: np.ndarray  # (nx + 1, 2)


def normal_from_slope(slope) -> np.ndarray:
    slope = np.asarray(slope, dtype=float)
    s = np.sqrt(1.0 + slope ** 2)
    return np.stack([-slope / s, 1.0 / s], axis=-1)


def interface_normal(eta: ScalarField) -> InterfaceNormal:
    eta = as_plate(eta)
    return InterfaceNormal(normal_from_slope(slope_nodes(eta.values, eta.grid.hx)))


def physical_points(grid: GridSpec, eta: np.ndarray, role: str):
    """Physical coordinates of the samples of ``role`` on Omega_eta."""
    X, Yh = grid.coords(role)
    e = eta if role in ("node", "face-x") else to_centers(eta)
    return X, Yh * e[:, None]


def pushforward_sample(dmap: DomainMap, field: ScalarField, x, y, inverse: bool = False):
    """Sample ``field o psi`` (or ``field o psi^-1``) at physical points.

    Forward: ``field`` lives on Omega_2 and (x, y) in Omega_1; the value is
    field(x, gamma(x) y).  Inverse: ``field`` on Omega_1, (x, y) in Omega_2.
    Bilinear interpolation in reference coordinates, so fields linear in the
    vertical coordinate are reproduced exactly.
    """
    g = dmap.grid
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    here = dmap.eta1 if not inverse else dmap.eta2
    tol = 1e-12 * max(1.0, g.L)
    if np.any(x < -tol) or np.any(x > g.L + tol):
        raise DomainError("sample abscissa outside the plate interval")
    h = np.interp(x, g.x_nodes, here.values)
    yhat = y / h
    if np.any(yhat < -1e-12) or np.any(yhat > 1 + 1e-12):
        raise DomainError("sample point outside the fluid domain")
    # psi keeps the reference height: y-hat on Omega_1 equals y-hat on Omega_2
    if field.role == "plate":
        return np.interp(x, g.x_nodes, field.values)
    X, Y = g.coords(field.role)
    interp = RegularGridInterpolator((X[:, 0], Y[0]), field.values, bounds_error=False, fill_value=None)
    return interp(np.stack(np.broadcast_arrays(x, yhat), axis=-1))


# --- operators for fields on a graph domain ------------------------------

def ux_at_yfaces(v: VectorField) -> np.ndarray:
    """Vertical average of u_x onto y-face rows, per x-face column.

    Shape ``(nx + 1, ny + 1)``.  Bottom and top rows use the zero horizontal
    trace (no-slip on the bottom, no-slip kinematic condition at the plate).
    """
    ux = v.u_x
    out = np.zeros((ux.shape[0], ux.shape[1] + 1))
    out[:, 1:-1] = 0.5 * (ux[:, 1:] + ux[:, :-1])
    return out


def slope_term(eta: np.ndarray, v: VectorField) -> np.ndarray:
    """Discrete eta' u_x at y-faces, shape ``(nx, ny + 1)``.

    Written as a sum of half-cell differences
    ``[(eta_{i+1} - eta_c) ubar_{i+1} + (eta_c - eta_i) ubar_i] / hx``
    so that products of heights split exactly (see :mod:`transforms`).
    """
    hx = v.grid.hx
    ec = to_centers(eta)
    ub = ux_at_yfaces(v)
    return ((eta[1:] - ec)[:, None] * ub[1:] + (ec - eta[:-1])[:, None] * ub[:-1]) / hx


def reference_fluxes(v: VectorField, eta: np.ndarray):
    """Contravariant (Piola) fluxes U = eta u_x on x-faces and
    W = u_y - y-hat * eta' u_x on y-faces."""
    g = v.grid
    U = eta[:, None] * v.u_x
    W = v.u_y - g.y_nodes[None, :] * slope_term(eta, v)
    return U, W


def mapped_divergence(v: VectorField, eta) -> ScalarField:
    """Divergence on Omega_eta of a field stored on the reference grid."""
    g = v.grid
    eta = as_plate(eta, g).values
    U, W = reference_fluxes(v, eta)
    ref = np.diff(U, axis=0) / g.hx + np.diff(W, axis=1) / g.hy
    return ScalarField(ref / to_centers(eta)[:, None], "center", g)


def mapped_velocity_gradient(v: VectorField, eta) -> np.ndarray:
    """Physical velocity gradient at cell centres, ``D[..., a, b] = d v_a / d z_b``."""
    g = v.grid
    eta = as_plate(eta, g).values
    Dr = center_derivatives(v)
    ec = to_centers(eta)[:, None]
    sc = slope_centers(eta, g.hx)[:, None]
    yh = g.y_centers[None, :]
    D = np.empty_like(Dr)
    D[..., :, 0] = Dr[..., :, 0] - (yh * sc / ec)[..., None] * Dr[..., :, 1]
    D[..., :, 1] = Dr[..., :, 1] / ec[..., None]
    return D


def domain_volume(eta) -> float:
    """Area of Omega_eta by the midpoint rule on the plate cells."""
    eta = as_plate(eta)
    return float(np.sum(to_centers(eta.values)) * eta.grid.hx)
