"""Reference rectangle Q = [0, L] x [0, 1], staggered field containers and
the flat discrete operators built on them.

Index convention: ``values[i, j]`` with ``i`` running along the plate (x)
and ``j`` along the reference height (y-hat).  Velocities live on a MAC
layout: ``u_x`` on x-faces, shape ``(nx + 1, ny)``; ``u_y`` on y-faces,
shape ``(nx, ny + 1)``.  Plate quantities are 1D nodal arrays of length
``nx + 1`` sharing their abscissae with the x-faces.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, ShapeError

ROLES = ("center", "node", "face-x", "face-y", "plate")


@dataclass(frozen=True)
class GridSpec:
    L: float = 2.0
    nx: int = 64
    ny: int = 32
    dt: float = 2e-3
    t_end: float = 1.0

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise DomainError(f"grid needs nx, ny >= 8 (got {self.nx}, {self.ny})")
        if not (self.L > 0 and self.dt > 0):
            raise DomainError("L and dt must be positive")
        if self.t_end < self.dt * (1 - 1e-12):
            raise DomainError("t_end must be at least one time step")

    @property
    def hx(self) -> float:
        return self.L / self.nx

    @property
    def hy(self) -> float:
        return 1.0 / self.ny

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.nx + 1)

    @property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.hx

    @property
    def y_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.ny + 1)

    @property
    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.hy

    def shape(self, role: str) -> tuple:
        nx, ny = self.nx, self.ny
        return {
            "center": (nx, ny),
            "node": (nx + 1, ny + 1),
            "face-x": (nx + 1, ny),
            "face-y": (nx, ny + 1),
            "plate": (nx + 1,),
        }[role]

    def coords(self, role: str):
        """Reference coordinates (x, y-hat) of the samples carrying ``role``."""
        xs = {"center": self.x_centers, "node": self.x_nodes, "face-x": self.x_nodes,
              "face-y": self.x_centers, "plate": self.x_nodes}[role]
        if role == "plate":
            return xs
        ys = {"center": self.y_centers, "node": self.y_nodes, "face-x": self.y_centers,
              "face-y": self.y_nodes}[role]
        return np.meshgrid(xs, ys, indexing="ij")

    def with_resolution(self, nx: int, ny: int | None = None) -> "GridSpec":
        return GridSpec(self.L, nx, ny if ny is not None else self.ny, self.dt, self.t_end)

    def to_dict(self) -> dict:
        return {"L": self.L, "nx": self.nx, "ny": self.ny, "dt": self.dt, "t_end": self.t_end}


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    role: str
    grid: GridSpec

    def __post_init__(self):
        if self.role not in ROLES:
            raise ShapeError(f"unknown role {self.role!r}")
        vals = _frozen(self.values)
        if vals.shape != self.grid.shape(self.role):
            raise ShapeError(f"{self.role} field needs shape {self.grid.shape(self.role)}, got {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("field contains non-finite values")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: GridSpec, role: str = "center") -> "ScalarField":
        return cls(np.zeros(grid.shape(role)), role, grid)

    @classmethod
    def from_function(cls, grid: GridSpec, role: str, fn) -> "ScalarField":
        if role == "plate":
            return cls(fn(grid.x_nodes), role, grid)
        X, Y = grid.coords(role)
        return cls(np.broadcast_to(fn(X, Y), X.shape), role, grid)

    def __add__(self, other):
        _check_same(self, other)
        return ScalarField(self.values + other.values, self.role, self.grid)

    def __sub__(self, other):
        _check_same(self, other)
        return ScalarField(self.values - other.values, self.role, self.grid)

    def __mul__(self, c):
        return ScalarField(self.values * c, self.role, self.grid)

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    u_x: np.ndarray
    u_y: np.ndarray
    grid: GridSpec
    no_slip: bool = False

    def __post_init__(self):
        ux, uy = _frozen(self.u_x), _frozen(self.u_y)
        if ux.shape != self.grid.shape("face-x") or uy.shape != self.grid.shape("face-y"):
            raise ShapeError(f"staggered layout mismatch: {ux.shape}, {uy.shape} on {self.grid.nx}x{self.grid.ny}")
        if not (np.all(np.isfinite(ux)) and np.all(np.isfinite(uy))):
            raise DomainError("vector field contains non-finite values")
        if self.no_slip:
            # B_c = bottom and lateral walls
            if np.any(ux[0] != 0) or np.any(ux[-1] != 0) or np.any(uy[:, 0] != 0):
                raise DomainError("no-slip field must vanish on the bottom and lateral faces")
        object.__setattr__(self, "u_x", ux)
        object.__setattr__(self, "u_y", uy)

    @classmethod
    def zeros(cls, grid: GridSpec, no_slip: bool = False) -> "VectorField":
        return cls(np.zeros(grid.shape("face-x")), np.zeros(grid.shape("face-y")), grid, no_slip)

    @classmethod
    def from_functions(cls, grid: GridSpec, fx, fy, no_slip: bool = False) -> "VectorField":
        Xx, Yx = grid.coords("face-x")
        Xy, Yy = grid.coords("face-y")
        ux = np.broadcast_to(fx(Xx, Yx), Xx.shape)
        uy = np.broadcast_to(fy(Xy, Yy), Xy.shape)
        return cls(ux, uy, grid, no_slip)

    def replace(self, u_x=None, u_y=None, no_slip=None) -> "VectorField":
        return VectorField(self.u_x if u_x is None else u_x, self.u_y if u_y is None else u_y,
                           self.grid, self.no_slip if no_slip is None else no_slip)

    def __add__(self, other):
        _check_same(self, other)
        return VectorField(self.u_x + other.u_x, self.u_y + other.u_y, self.grid)

    def __sub__(self, other):
        _check_same(self, other)
        return VectorField(self.u_x - other.u_x, self.u_y - other.u_y, self.grid)

    def __mul__(self, c):
        return VectorField(self.u_x * c, self.u_y * c, self.grid)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(max(np.abs(self.u_x).max(), np.abs(self.u_y).max()))


def _check_same(a, b):
    if a.grid != b.grid:
        raise ShapeError("fields live on different grids")
    if isinstance(a, ScalarField) and (not isinstance(b, ScalarField) or a.role != b.role):
        raise ShapeError("scalar fields carry different roles")


def divergence(f: VectorField) -> ScalarField:
    """Staggered divergence per cell on the flat rectangle."""
    if not isinstance(f, VectorField):
        raise ShapeError("divergence expects a VectorField")
    g = f.grid
    d = np.diff(f.u_x, axis=0) / g.hx + np.diff(f.u_y, axis=1) / g.hy
    return ScalarField(d, "center", g)


def gradient(s: ScalarField) -> VectorField:
    """Face-sampled gradient of a cell-centred scalar; zero on boundary faces.

    This is minus the adjoint of :func:`divergence` on fields that vanish on
    the boundary faces.
    """
    if s.role != "center":
        raise ShapeError("gradient expects a cell-centred scalar")
    g = s.grid
    ux = np.zeros(g.shape("face-x"))
    uy = np.zeros(g.shape("face-y"))
    ux[1:-1] = np.diff(s.values, axis=0) / g.hx
    uy[:, 1:-1] = np.diff(s.values, axis=1) / g.hy
    return VectorField(ux, uy, g)


def center_derivatives(f: VectorField) -> np.ndarray:
    """Reference derivatives of a staggered field at cell centres.

    Returns an array ``D`` of shape ``(nx, ny, 2, 2)`` with
    ``D[..., a, b] = d u_a / d x_b`` (x_0 = x, x_1 = y-hat).  Normal
    derivatives are exact face differences; cross derivatives use
    second-order centred differences (one-sided at the boundary) averaged to
    the centre.
    """
    g = f.grid
    D = np.empty((g.nx, g.ny, 2, 2))
    D[..., 0, 0] = np.diff(f.u_x, axis=0) / g.hx
    D[..., 1, 1] = np.diff(f.u_y, axis=1) / g.hy
    dux_dy = np.gradient(f.u_x, g.hy, axis=1, edge_order=2)
    D[..., 0, 1] = 0.5 * (dux_dy[1:] + dux_dy[:-1])
    duy_dx = np.gradient(f.u_y, g.hx, axis=0, edge_order=2)
    D[..., 1, 0] = 0.5 * (duy_dx[:, 1:] + duy_dx[:, :-1])
    return D


def sym_gradient(f: VectorField) -> np.ndarray:
    """Per-cell symmetric gradient, shape ``(nx, ny, 2, 2)``."""
    D = center_derivatives(f)
    return 0.5 * (D + np.swapaxes(D, -1, -2))


def trapezoid_weights(grid: GridSpec, role: str) -> np.ndarray:
    """Quadrature weights (area elements) for samples of the given role."""
    def w1(n, h, with_ends):
        if not with_ends:
            return np.full(n, h)
        w = np.full(n + 1, h)
        w[0] = w[-1] = 0.5 * h
        return w

    nx, ny, hx, hy = grid.nx, grid.ny, grid.hx, grid.hy
    if role == "plate":
        return w1(nx, hx, True)
    wx = w1(nx, hx, role in ("node", "face-x"))
    wy = w1(ny, hy, role in ("node", "face-y"))
    return np.outer(wx, wy)


def jacobian_weight(eta: ScalarField, role: str) -> np.ndarray:
    """The graph-map Jacobian eta(x) broadcast to samples of ``role``."""
    if eta.role != "plate":
        raise ShapeError("Jacobian weights come from a plate (nodal) eta")
    g = eta.grid
    e = eta.values
    if role in ("center", "face-y"):
        e = 0.5 * (e[1:] + e[:-1])
    if role == "plate":
        return e
    return np.broadcast_to(e[:, None], g.shape(role))


def l2_norm(f, weight: ScalarField | np.ndarray | None = None) -> float:
    """sqrt(sum values^2 * weight * dA) with trapezoid area elements.

    ``weight`` may be a field of the same role, a plate eta (in which case the
    graph-map Jacobian is used), or a raw array.  With no weight this is the
    flat L2 norm on Q.
    """
    if isinstance(f, VectorField):
        parts = [ScalarField(f.u_x, "face-x", f.grid), ScalarField(f.u_y, "face-y", f.grid)]
        return float(np.sqrt(sum(l2_norm(p, weight) ** 2 for p in parts)))
    w = _resolve_weight(f, weight)
    if np.any(w <= 0):
        raise DomainError("quadrature weight must be strictly positive")
    return float(np.sqrt(np.sum(f.values ** 2 * w * trapezoid_weights(f.grid, f.role))))


def _resolve_weight(f: ScalarField, weight) -> np.ndarray:
    if weight is None:
        return np.ones(f.values.shape)
    if isinstance(weight, ScalarField):
        if weight.role == "plate" and f.role != "plate":
            return jacobian_weight(weight, f.role)
        if weight.role != f.role:
            raise ShapeError("weight role does not match field role")
        return weight.values
    return np.broadcast_to(np.asarray(weight, dtype=float), f.values.shape)


# --- serialization -------------------------------------------------------

def _header(f: ScalarField) -> dict:
    return {"role": f.role, "nx": f.grid.nx, "ny": f.grid.ny, "L": f.grid.L,
            "dt": f.grid.dt, "t_end": f.grid.t_end, "shape": list(f.values.shape)}


def write_field(path, f) -> list:
    """Write a field as CSV (``.csv``) or flat little-endian float64 (``.bin``).

    The first line is a JSON header carrying the role tag and grid dims; data
    follow in row-major order (one CSV row per first index).  A VectorField is
    written as two files with ``_ux`` / ``_uy`` suffixes.  Returns the paths.
    """
    path = Path(path)
    if isinstance(f, VectorField):
        px = path.with_name(path.stem + "_ux" + path.suffix)
        py = path.with_name(path.stem + "_uy" + path.suffix)
        write_field(px, ScalarField(f.u_x, "face-x", f.grid))
        write_field(py, ScalarField(f.u_y, "face-y", f.grid))
        return [px, py]
    head = json.dumps(_header(f))
    if path.suffix == ".bin":
        with open(path, "wb") as fh:
            fh.write((head + "\n").encode())
            fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())
    else:
        vals = np.atleast_2d(f.values)
        with open(path, "w") as fh:
            fh.write("# " + head + "\n")
            for row in vals:
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    return [path]


def read_field(path) -> ScalarField:
    path = Path(path)
    if path.suffix == ".bin":
        with open(path, "rb") as fh:
            head = json.loads(fh.readline().decode())
            data = np.frombuffer(fh.read(), dtype="<f8")
    else:
        with open(path) as fh:
            head = json.loads(fh.readline()[2:])
            data = np.array([[float(v) for v in line.split(",")] for line in fh if line.strip()])
    grid = GridSpec(head["L"], head["nx"], head["ny"], head["dt"], head["t_end"])
    return ScalarField(np.asarray(data).reshape(head["shape"]), head["role"], grid)
