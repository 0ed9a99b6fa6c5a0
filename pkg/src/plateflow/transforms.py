"""Solenoidal velocity transforms between two graph domains.

For w on Omega_2 the hat transform  w^ = gamma J^-1 (w o psi)  lives on
Omega_1; for u on Omega_1 the check transform  u_v = gamma^-1 J~ (u o psi^-1)
lives on Omega_2.  In two dimensions

    w^ = (gamma w1 o psi,  -y gamma' w1 o psi + w2 o psi),

with y the height in Omega_1.  Because psi keeps the reference height
y-hat, ``w o psi`` at a reference sample is simply the sample of w at the
same reference index: no resampling is needed.

The product ``y gamma' w1`` is discretised as a sum of half-cell
differences matching :func:`geometry.slope_term`.  With that choice the
Piola fluxes of w^ on Omega_1 coincide with those of w on Omega_2, so

* mapped_divergence(w^, eta1) == gamma_c * mapped_divergence(w, eta2),
* the interface flux (vertical trace) is carried over unchanged,
* check(hat(w)) == w and hat(check(u)) == u,

all to rounding error, for any pair of positive heights.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, ShapeError
from .geometry import DomainMap, as_plate, build_domain_map, to_centers, ux_at_yfaces
from .grid import VectorField


def _ratio_slope(ratio: np.ndarray, ratio_c: np.ndarray, v: VectorField) -> np.ndarray:
    ub = ux_at_yfaces(v)
    return ((ratio[1:] - ratio_c)[:, None] * ub[1:] + (ratio_c - ratio[:-1])[:, None] * ub[:-1]) / v.grid.hx


def _piola(v: VectorField, ratio, ratio_c, height_c) -> VectorField:
    yh = v.grid.y_nodes[None, :]
    ux = ratio[:, None] * v.u_x
    uy = v.u_y - yh * height_c[:, None] * _ratio_slope(ratio, ratio_c, v)
    return VectorField(ux, uy, v.grid, v.no_slip)


def _check_grid(v: VectorField, dmap: DomainMap):
    if v.grid != dmap.grid:
        raise ShapeError("field and domain map live on different grids")


def hat_transform(w: VectorField, dmap: DomainMap) -> VectorField:
    """Carry a field on Omega_2 to Omega_1 (divergence- and trace-preserving)."""
    _check_grid(w, dmap)
    return _piola(w, dmap.gamma.values, dmap.gamma_c, to_centers(dmap.eta1.values))


def check_transform(u: VectorField, dmap: DomainMap) -> VectorField:
    """Carry a field on Omega_1 to Omega_2; inverse of :func:`hat_transform`."""
    _check_grid(u, dmap)
    return _piola(u, 1.0 / dmap.gamma.values, 1.0 / dmap.gamma_c, to_centers(dmap.eta2.values))


def apply_gamma_inv_J(w1: VectorField, dmap: DomainMap) -> VectorField:
    """Pointwise gamma^-1 J w1, J = [[1, 0], [y gamma', gamma]] with y in Omega_1.

    Uses centred differences for gamma' instead of the split form, so it is
    an independent O(h^2) check of the discrete transforms.
    """
    g = w1.grid
    gam = dmap.gamma.values
    gc = to_centers(gam)
    dgc = np.diff(gam) / g.hx
    ub = ux_at_yfaces(w1)
    ubc = 0.5 * (ub[1:] + ub[:-1])
    y = g.y_nodes[None, :] * to_centers(dmap.eta1.values)[:, None]
    ux = w1.u_x / gam[:, None]
    uy = w1.u_y + y * (dgc / gc)[:, None] * ubc
    return VectorField(ux, uy, g)


@dataclass(frozen=True)
class TransformedPair:
    w1: VectorField        # v1 - hat(v2), on Omega_1
    w2: VectorField        # check(v1) - v2, on Omega_2
    consistency_residual: float


def default_tolerance(w1: VectorField) -> float:
    g = w1.grid
    scale = max(1.0, w1.max_abs())
    return 1e-10 + 50.0 * (g.hx ** 2 + g.hy ** 2) * scale


def solution_differences(v1: VectorField, eta1, v2: VectorField, eta2, tol: float | None = None,
                         dmap: DomainMap | None = None) -> TransformedPair:
    """w1 = v1 - hat(v2) and w2 = check(v1) - v2, with the identity
    w2 o psi = gamma^-1 J w1 checked pointwise."""
    if v1.grid != v2.grid:
        raise ShapeError("solutions live on incompatible grids")
    if dmap is None:
        dmap = build_domain_map(as_plate(eta1, v1.grid), as_plate(eta2, v1.grid))
    w1 = v1 - hat_transform(v2, dmap)
    w2 = check_transform(v1, dmap) - v2
    other = apply_gamma_inv_J(w1, dmap)
    res = max(np.abs(other.u_x - w2.u_x).max(), np.abs(other.u_y - w2.u_y).max())
    tol = default_tolerance(w1) if tol is None else tol
    if res > tol:
        raise PreconditionError(f"consistency identity violated: residual {res:.3e} > {tol:.3e}")
    return TransformedPair(w1, w2, float(res))
