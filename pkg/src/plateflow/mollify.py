"""Time extension, the even bump mollifier and geometry-aware solenoidal
time mollification.

The matrix kernel that carries phi(s) from Omega_eta(s) to Omega_eta(t) is
exactly the hat transform with gamma = eta(s) / eta(t), so every summand of
the convolution is discretely solenoidal on Omega_eta(t) with interface flux
phi^2(s) at the top.  Normalised quadrature weights then make the output
divergence-free with trace b * j_delta to rounding error.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import DomainError, PreconditionError, ShapeError
from .geometry import as_plate, build_domain_map, to_centers
from .grid import GridSpec, ScalarField, VectorField
from .transforms import hat_transform


def _bump(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - t[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def kernel_normalisation() -> float:
    mass, _ = quad(lambda s: float(_bump(s)), -1.0, 1.0, epsabs=1e-14, epsrel=1e-14)
    return 1.0 / mass


def j(t):
    """Unit-mass bump Z exp(-1/(1-t^2)) on (-1, 1)."""
    return kernel_normalisation() * _bump(t)


def dj(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = j(ti) * (-2.0 * ti / (1.0 - ti ** 2) ** 2)
    return out


def j_delta(t, delta: float):
    return j(np.asarray(t, dtype=float) / delta) / delta


@dataclass(frozen=True)
class MollifierSpec:
    """Kernel of half-width delta = m * dt sampled on the trajectory instants.

    ``offsets`` are the integer sample shifts k in (-m, m) and ``weights`` the
    trapezoid weights dt * j_delta(k dt), rescaled to sum to one so that
    constants are reproduced exactly.
    """
    delta: float
    dt: float
    offsets: np.ndarray
    weights: np.ndarray
    raw_mass: float

    @classmethod
    def build(cls, delta: float, dt: float) -> "MollifierSpec":
        if delta <= 0 or dt <= 0:
            raise DomainError("kernel width and time step must be positive")
        m = delta / dt
        if abs(m - round(m)) > 1e-9 or round(m) < 2:
            raise DomainError("delta must be an integer multiple (>= 2) of dt")
        m = int(round(m))
        k = np.arange(-m + 1, m)
        w = dt * j_delta(k * dt, delta)
        raw = float(w.sum())
        return cls(float(delta), float(dt), k, w / raw, raw)

    @property
    def width(self) -> int:
        return int(self.offsets[-1]) + 1

    def kernel_mass(self) -> float:
        """Continuous integral of j_delta over (-delta, delta)."""
        val, _ = quad(lambda s: float(j_delta(s, self.delta)), -self.delta, self.delta,
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        return val


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled states; states may be arrays, fields or dataclasses of them."""
    times: np.ndarray
    states: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", tuple(self.states))
        if t.size == 0 or t.size != len(self.states):
            raise ShapeError("trajectory needs one state per sample time")
        if t.size > 1:
            d = np.diff(t)
            if np.any(d <= 0) or np.abs(d - d[0]).max() > 1e-9 * max(1.0, abs(d[0])):
                raise ShapeError("trajectory samples must be uniformly spaced")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def __len__(self):
        return len(self.states)


def lerp(a: Any, b: Any, theta: float) -> Any:
    """(1 - theta) a + theta b for arrays, fields, numbers and dataclasses thereof."""
    if theta == 0.0:
        return a
    if theta == 1.0:
        return b
    if isinstance(a, (VectorField, ScalarField)):
        return a * (1.0 - theta) + b * theta
    if isinstance(a, np.ndarray) or np.isscalar(a):
        return (1.0 - theta) * np.asarray(a) + theta * np.asarray(b)
    if dataclasses.is_dataclass(a):
        kw = {}
        for f in dataclasses.fields(a):
            x, y = getattr(a, f.name), getattr(b, f.name)
            try:
                kw[f.name] = lerp(x, y, theta)
            except TypeError:
                kw[f.name] = x
        return dataclasses.replace(a, **kw)
    if isinstance(a, tuple):
        return tuple(lerp(x, y, theta) for x, y in zip(a, b))
    raise TypeError(f"cannot interpolate {type(a).__name__}")


def extend_in_time(traj: Trajectory, t: float):
    """Constant extension outside [t_0, T], linear interpolation inside."""
    times = traj.times
    if t <= times[0]:
        return traj.states[0]
    if t >= times[-1]:
        return traj.states[-1]
    i = int(np.searchsorted(times, t, side="right")) - 1
    theta = (t - times[i]) / (times[i + 1] - times[i])
    if theta < 1e-12:
        return traj.states[i]
    return lerp(traj.states[i], traj.states[i + 1], float(theta))


def _clamped(n: int, k: np.ndarray, size: int) -> np.ndarray:
    return np.clip(n - k, 0, size - 1)


def mollify_scalar(b, spec: MollifierSpec) -> np.ndarray:
    """b_delta(t_n) = sum_k w_k b(t_{n-k}) with the clamped extension of b.

    ``b`` has time along axis 0.
    """
    b = np.asarray(b, dtype=float)
    n_t = b.shape[0]
    out = np.zeros_like(b)
    for k, w in zip(spec.offsets, spec.weights):
        idx = _clamped(np.arange(n_t), k, n_t)
        out += w * b[idx]
    return out


def interface_flux(v: VectorField) -> np.ndarray:
    """Vertical velocity on the interface faces (cell centres of the plate)."""
    return v.u_y[:, -1].copy()


def mollify_solenoidal(phi: Sequence[VectorField], eta, spec: MollifierSpec, b=None,
                       floor: float = 1e-3, trace_tol: float = 1e-8) -> list[VectorField]:
    """Geometry-aware time mollification of a solenoidal trajectory.

    phi_delta(t_n) = sum_k w_k hat_{eta(t_n) <- eta(t_{n-k})}(phi(t_{n-k})).

    ``eta`` is an array (n_t, nx+1) or a sequence of plate fields.  If ``b``
    (n_t, nx) is given, the interface flux of phi is checked against it.
    """
    phi = list(phi)
    if not phi:
        raise ShapeError("empty trajectory")
    g: GridSpec = phi[0].grid
    eta = np.array([as_plate(e, g).values if isinstance(e, ScalarField) else np.asarray(e, dtype=float)
                    for e in eta])
    n_t = len(phi)
    if eta.shape != (n_t, g.nx + 1):
        raise ShapeError("plate trajectory does not match the velocity trajectory")
    if eta.min() < floor:
        raise DomainError(f"plate height {eta.min():.3e} below floor {floor}")
    if b is not None:
        b = np.asarray(b, dtype=float)
        mism = max(float(np.abs(interface_flux(p) - b[n]).max()) for n, p in enumerate(phi))
        if mism > trace_tol:
            raise PreconditionError(f"interface trace of phi differs from b by {mism:.3e}")
    fields = [ScalarField(e, "plate", g) for e in eta]
    out = []
    for n in range(n_t):
        src = _clamped(n, spec.offsets, n_t)
        acc_x = np.zeros((g.nx + 1, g.ny))
        acc_y = np.zeros((g.nx, g.ny + 1))
        for s, w in zip(src, spec.weights):
            if s == n:
                f = phi[s]
            else:
                f = hat_transform(phi[s], build_domain_map(fields[n], fields[s]))
            acc_x += w * f.u_x
            acc_y += w * f.u_y
        out.append(VectorField(acc_x, acc_y, g))
    return out


def l2_time_space(a: Sequence[VectorField], b: Sequence[VectorField], eta, kind: str = "max") -> float:
    """Distance between two velocity trajectories with Jacobian-weighted L2 in space.

    ``kind="max"`` gives the L-infinity norm in time, ``kind="l2"`` the
    trapezoid L2 norm (unit spacing).
    """
    vals = []
    for u, v, e in zip(a, b, eta):
        e = np.asarray(getattr(e, "values", e), dtype=float)
        g = u.grid
        dx = u.u_x - v.u_x
        dy = u.u_y - v.u_y
        s = np.sum(e[:, None] * dx ** 2) + np.sum(to_centers(e)[:, None] * dy ** 2)
        vals.append(s * g.hx * g.hy)
    vals = np.asarray(vals)
    if kind == "max":
        return float(np.sqrt(vals.max()))
    w = np.ones_like(vals)
    w[[0, -1]] = 0.5
    return float(np.sqrt(np.sum(w * vals)))


def convolution_identity_defect(u: np.ndarray, v: np.ndarray, dt: float, delta: float) -> float:
    """|int_0^T (u, d/dt v_delta) + (d/dt u_delta, v) dt - [(u, v)]_0^T|.

    u, v are sampled time series (time on axis 0, optional vector axis 1) on
    a uniform grid; mollified derivatives use the derivative kernel on the
    clamped extension, the outer integral the trapezoid rule.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.ndim == 1:
        u, v = u[:, None], v[:, None]
    n_t = u.shape[0]
    m = int(round(delta / dt))
    k = np.arange(-m, m + 1)
    wd = dt * dj(k * dt / delta) / delta ** 2    # d/dt j_delta at the shifts

    def ddt_moll(x):
        pad = m
        xe = np.concatenate([np.repeat(x[:1], pad, axis=0), x, np.repeat(x[-1:], pad, axis=0)])
        out = np.zeros_like(x)
        for kk, w in zip(k, wd):
            out += w * xe[pad - kk: pad - kk + n_t]
        return out

    integrand = np.sum(u * ddt_moll(v) + ddt_moll(u) * v, axis=1)
    tw = np.full(n_t, dt)
    tw[[0, -1]] = 0.5 * dt
    lhs = float(np.sum(tw * integrand))
    rhs = float(u[-1] @ v[-1] - u[0] @ v[0])
    return abs(lhs - rhs)
