"""Incompressible Navier-Stokes on the moving graph domain, solved on the
reference rectangle with an incremental pressure-correction scheme.

One step on the new geometry eta^{n+1}:

1. predictor  (rho M/dt + mu K) v* = rho M (v^n/dt - N(v^n) + f) + hx hy B^T p^n - mu K_b v_b
2. pressure   A phi = -(rho/dt) (B v* + B_b v_b),    A = B diag(1/eta_f) B^T
3. correction v = v* + (dt/rho) diag(1/eta_f) B^T phi,   p = p^n + phi

B is the discrete mapped divergence times the cell Jacobian (see
:func:`geometry.mapped_divergence`), M the Jacobian-weighted face mass and K
the Hessian of a discrete dissipation functional
``Phi(u) = 1/2 int |grad u|^2 dx dy`` written in reference coordinates.  The
same K produces the viscous interface reaction, which makes the fluid-plate
power exchange exact at the discrete level.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, splu

from .errors import ContactError, DomainError, SolverError
from .geometry import (as_plate, mapped_divergence, mapped_velocity_gradient, normal_from_slope,
                       slope_nodes, slope_term, to_centers)
from .grid import GridSpec, ScalarField, VectorField

ForcingFn = Callable[[float, np.ndarray, np.ndarray, int], np.ndarray]


@dataclass(frozen=True)
class FluidParams:
    rho_f: float = 1.0
    mu_f: float = 1.0
    forcing: ForcingFn | None = None  # f(t, X, Y, component) at physical points
    stress_form: str = "gradient"     # "gradient": grad v - pI, "symmetric": 2 eps(v) - pI
    solver_tol: float = 1e-10
    max_iter: int = 500
    cfl_limit: float = 0.5

    def __post_init__(self):
        if self.rho_f <= 0 or self.mu_f <= 0:
            raise DomainError("fluid density and viscosity must be positive")
        if self.stress_form not in ("gradient", "symmetric"):
            raise DomainError(f"unknown stress form {self.stress_form!r}")


@dataclass(frozen=True)
class FluidState:
    v: VectorField
    p: ScalarField
    t: float = 0.0

    def __post_init__(self):
        if self.p.role != "center":
            raise DomainError("pressure lives at cell centres")
        if self.p.grid != self.v.grid:
            raise DomainError("velocity and pressure on different grids")
        if np.any(self.v.u_x[[0, -1], :] != 0) or np.any(self.v.u_y[:, 0] != 0):
            raise DomainError("velocity must vanish on the bottom and lateral walls")

    @property
    def grid(self) -> GridSpec:
        return self.v.grid

    @classmethod
    def rest(cls, grid: GridSpec, t: float = 0.0) -> "FluidState":
        return cls(VectorField.zeros(grid), ScalarField.zeros(grid, "center"), t)


# --- operator assembly ---------------------------------------------------------

def _diff1(points: np.ndarray) -> sp.csr_matrix:
    d = np.diff(points)
    n = points.size
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1).ravel()
    vals = np.stack([-1.0 / d, 1.0 / d], axis=1).ravel()
    return sp.csr_matrix((vals, (rows, cols)), shape=(n - 1, n))


def _avg1(n: int) -> sp.csr_matrix:
    rows = np.repeat(np.arange(n - 1), 2)
    cols = np.stack([np.arange(n - 1), np.arange(1, n)], axis=1).ravel()
    return sp.csr_matrix((np.full(rows.size, 0.5), (rows, cols)), shape=(n - 1, n))


def dissipation_stiffness(X: np.ndarray, Y: np.ndarray, wx: np.ndarray, wy: np.ndarray,
                          eta_fn, deta_fn) -> sp.csr_matrix:
    """Hessian of the quadratic form

        1/2 int K11 u_x^2 + 2 K12 u_x u_y + K22 u_y^2,
        K = [[eta, -y eta'], [-y eta', (1 + y^2 eta'^2) / eta]],

    for samples on the tensor grid X x Y (flattened C-order).  x-differences
    live on interval midpoints of each row and carry the row weight wy,
    y-differences carry the column weight wx; the mixed term lives on the
    cell corners.  Rows/columns holding boundary data get weight zero (or a
    half weight when the datum sits on the boundary itself).
    """
    nX, nY = X.size, Y.size
    dx, dy = np.diff(X), np.diff(Y)
    xm, ym = 0.5 * (X[1:] + X[:-1]), 0.5 * (Y[1:] + Y[:-1])
    Dx = sp.kron(_diff1(X), sp.identity(nY), format="csr")
    Dy = sp.kron(sp.identity(nX), _diff1(Y), format="csr")

    e_m, d_m = eta_fn(xm), deta_fn(xm)
    e_n, d_n = eta_fn(X), deta_fn(X)
    k11 = (e_m[:, None] * dx[:, None] * wy[None, :]).ravel()
    k22 = ((1.0 + ym[None, :] ** 2 * d_n[:, None] ** 2) / e_n[:, None]
           * dy[None, :] * wx[:, None]).ravel()
    K = Dx.T @ sp.diags(k11) @ Dx + Dy.T @ sp.diags(k22) @ Dy
    P = sp.kron(sp.identity(nX - 1), _avg1(nY)) @ Dx
    Q = sp.kron(_avg1(nX), sp.identity(nY - 1)) @ Dy
    k12 = (-ym[None, :] * d_m[:, None] * dx[:, None] * dy[None, :]).ravel()
    C = P.T @ sp.diags(k12) @ Q
    return (K + C + C.T).tocsr()


def _ux_interior_index(g: GridSpec) -> np.ndarray:
    idx = np.arange((g.nx + 1) * g.ny).reshape(g.nx + 1, g.ny)
    return idx[1:-1, :].ravel()


def _uy_interior_index(g: GridSpec) -> np.ndarray:
    idx = np.arange(g.nx * (g.ny + 1)).reshape(g.nx, g.ny + 1)
    return idx[:, 1:-1].ravel()


def _uy_top_index(g: GridSpec) -> np.ndarray:
    idx = np.arange(g.nx * (g.ny + 1)).reshape(g.nx, g.ny + 1)
    return idx[:, -1]


class _Pattern:
    """Sparse matrix with a fixed pattern and entries  sum_t coef_t * d[k_t].

    Built once per grid; filling in values for a new geometry is a single
    ``bincount``, far cheaper than sparse products.
    """

    def __init__(self, rows, cols, coef, kidx, shape, nd):
        rows, cols = np.asarray(rows), np.asarray(cols)
        key = rows.astype(np.int64) * shape[1] + cols
        uniq, inv = np.unique(key, return_inverse=True)
        self.rows, self.cols, self.coef, self.kidx = rows, cols, np.asarray(coef, float), np.asarray(kidx)
        self.inv = inv
        self.shape, self.nd, self.nnz = shape, nd, uniq.size
        self.indices = (uniq % shape[1]).astype(np.int32)
        r_u = uniq // shape[1]
        self.indptr = np.concatenate([[0], np.cumsum(np.bincount(r_u, minlength=shape[0]))]).astype(np.int32)

    def data(self, d) -> np.ndarray:
        return np.bincount(self.inv, weights=self.coef * d[self.kidx], minlength=self.nnz)

    def matrix(self, d) -> sp.csr_matrix:
        return sp.csr_matrix((self.data(d), self.indices, self.indptr), shape=self.shape)

    def restrict(self, row_sel, col_sel) -> "_Pattern":
        rmap = np.full(self.shape[0], -1)
        rmap[row_sel] = np.arange(len(row_sel))
        cmap = np.full(self.shape[1], -1)
        cmap[col_sel] = np.arange(len(col_sel))
        keep = (rmap[self.rows] >= 0) & (cmap[self.cols] >= 0)
        return _Pattern(rmap[self.rows[keep]], cmap[self.cols[keep]], self.coef[keep], self.kidx[keep],
                        (len(row_sel), len(col_sel)), self.nd)

    def with_diagonal(self) -> "_Pattern":
        """Append a diagonal whose values are d[nd:nd + n]."""
        n = self.shape[0]
        i = np.arange(n)
        return _Pattern(np.concatenate([self.rows, i]), np.concatenate([self.cols, i]),
                        np.concatenate([self.coef, np.ones(n)]), np.concatenate([self.kidx, self.nd + i]),
                        self.shape, self.nd + n)


def _product_triples(L: sp.csr_matrix, R: sp.csr_matrix):
    """Index triples of  L^T diag(d) R  for csr L (K x m) and R (K x p)."""
    la, lb = np.diff(L.indptr), np.diff(R.indptr)
    k_of_l = np.repeat(np.arange(L.shape[0]), la)
    b = lb[k_of_l]
    l_pos = np.repeat(np.arange(L.nnz), b)
    start = np.cumsum(b) - b
    off = np.arange(l_pos.size) - np.repeat(start, b)
    r_pos = np.repeat(R.indptr[k_of_l], b) + off
    return L.indices[l_pos], R.indices[r_pos], l_pos, r_pos, k_of_l[l_pos]


def _stiffness_pattern(X, Y, wx, wy) -> tuple[_Pattern, tuple]:
    """Pattern for :func:`dissipation_stiffness`; d = [k11 per x-edge, k22 per y-edge, k12 per corner]."""
    nX, nY = X.size, Y.size
    Dx = sp.kron(_diff1(X), sp.identity(nY), format="csr")
    Dy = sp.kron(sp.identity(nX), _diff1(Y), format="csr")
    P = (sp.kron(sp.identity(nX - 1), _avg1(nY)) @ Dx).tocsr()
    Q = (sp.kron(_avg1(nX), sp.identity(nY - 1)) @ Dy).tocsr()
    n11, n22 = Dx.shape[0], Dy.shape[0]
    parts = []
    for L, R, off in ((Dx, Dx, 0), (Dy, Dy, n11), (P, Q, n11 + n22), (Q, P, n11 + n22)):
        L.sort_indices()
        R.sort_indices()
        r, c, lp, rp, k = _product_triples(L, R)
        parts.append((r, c, L.data[lp] * R.data[rp], k + off))
    n = nX * nY
    cat = [np.concatenate([q[i] for q in parts]) for i in range(4)]
    return _Pattern(*cat, (n, n), n11 + n22 + P.shape[0]), (X, Y, wx, wy)


def _stiffness_coefficients(geom, e_fn, d_fn) -> np.ndarray:
    X, Y, wx, wy = geom
    dx, dy = np.diff(X), np.diff(Y)
    xm, ym = 0.5 * (X[1:] + X[:-1]), 0.5 * (Y[1:] + Y[:-1])
    e_m, d_m, e_n, d_n = e_fn(xm), d_fn(xm), e_fn(X), d_fn(X)
    k11 = (e_m[:, None] * dx[:, None] * wy[None, :]).ravel()
    k22 = ((1.0 + ym[None, :] ** 2 * d_n[:, None] ** 2) / e_n[:, None] * dy[None, :] * wx[:, None]).ravel()
    k12 = (-ym[None, :] * d_m[:, None] * dx[:, None] * dy[None, :]).ravel()
    return np.concatenate([k11, k22, k12])


class _Assembly:
    """Grid-dependent sparsity patterns of all fluid operators."""

    def __init__(self, g: GridSpec):
        nx, ny, hx, hy = g.nx, g.ny, g.hx, g.hy
        self.grid = g
        nfx = (nx + 1) * ny
        one = nx + 1  # index of the constant 1 in the B coefficient vector [eta, 1]
        I, J = np.meshgrid(np.arange(nx), np.arange(ny), indexing="ij")
        I, J = I.ravel(), J.ravel()
        c = I * ny + J
        rows, cols, coef, kidx = [], [], [], []

        def add(r, cl, cf, k):
            rows.append(r); cols.append(cl); coef.append(np.broadcast_to(cf, r.shape)); kidx.append(np.broadcast_to(k, r.shape))

        add(c, (I + 1) * ny + J, 1.0 / hx, I + 1)            # eta_{i+1} u_x / hx
        add(c, I * ny + J, -1.0 / hx, I)
        add(c, nfx + I * (ny + 1) + J + 1, 1.0 / hy, one)    # u_y differences
        add(c, nfx + I * (ny + 1) + J, -1.0 / hy, one)
        # -(y-hat S) differences, S_{i,l} = slope_i/2 (ubar_{i,l} + ubar_{i+1,l})
        yn = g.y_nodes
        for l_off, sgn in ((1, -1.0), (0, 1.0)):
            lrow = J + l_off
            ok = (lrow >= 1) & (lrow <= ny - 1)
            for kcol in (I, I + 1):
                for m_off in (-1, 0):
                    m = lrow + m_off
                    cf = sgn * yn[np.clip(lrow, 0, ny)] / hy * 0.5 * 0.5 / hx
                    # slope_i = (eta_{i+1} - eta_i) / hx
                    add(c[ok], (kcol * ny + m)[ok], cf[ok], (I + 1)[ok])
                    add(c[ok], (kcol * ny + m)[ok], -cf[ok], I[ok])
        rows, cols = np.concatenate(rows), np.concatenate(cols)
        coef, kidx = np.concatenate(coef), np.concatenate(kidx)
        ncell, nfy = nx * ny, nx * (ny + 1)
        self.B = _Pattern(rows, cols, coef, kidx, (ncell, nfx + nfy), nx + 2)
        self.ix = _ux_interior_index(g)
        self.iy = _uy_interior_index(g)
        self.it = _uy_top_index(g)
        cols_i = np.concatenate([self.ix, nfx + self.iy])
        self.Bi = self.B.restrict(np.arange(ncell), cols_i)
        self.Bb = self.B.restrict(np.arange(ncell), nfx + self.it)
        # A = Bi diag(1/w) Bi^T through the transposed pattern of Bi
        perm = sp.csr_matrix((np.arange(self.Bi.nnz, dtype=float), self.Bi.indices, self.Bi.indptr),
                             shape=self.Bi.shape).T.tocsr()
        perm.sort_indices()
        self.bt_perm = perm.data.astype(np.int64)
        self.bt_indices, self.bt_indptr = perm.indices, perm.indptr
        BT = sp.csr_matrix((np.ones(perm.nnz), perm.indices, perm.indptr), shape=perm.shape)
        r, cl, lp, rp, k = _product_triples(BT, BT)
        self.A = _Pattern(r, cl, np.ones(r.size), np.arange(r.size), (ncell, ncell), r.size)
        self.A_lp, self.A_rp, self.A_k = lp, rp, k

        Yx = np.concatenate([[0.0], g.y_centers, [1.0]])
        wcol = np.full(nx + 1, hx); wcol[[0, -1]] = 0.0
        wrow = np.full(ny + 2, hy); wrow[[0, -1]] = 0.0
        self.Kx_full, self.kx_geom = _stiffness_pattern(g.x_nodes, Yx, wcol, wrow)
        idx = np.arange((nx + 1) * (ny + 2)).reshape(nx + 1, ny + 2)
        kx_int = idx[1:-1, 1:-1].ravel()
        self.Kx = self.Kx_full.restrict(kx_int, kx_int)
        self.Ax = self.Kx.with_diagonal()
        Xy = np.concatenate([[0.0], g.x_centers, [g.L]])
        wcol = np.full(nx + 2, hx); wcol[[0, -1]] = 0.0
        wrow = np.full(ny + 1, hy); wrow[0] = 0.0; wrow[-1] = 0.5 * hy
        self.Ky, self.ky_geom = _stiffness_pattern(Xy, g.y_nodes, wcol, wrow)
        idy = np.arange((nx + 2) * (ny + 1)).reshape(nx + 2, ny + 1)
        self.ky_int, self.ky_top = idy[1:-1, 1:-1].ravel(), idy[1:-1, -1]
        self.Kyy = self.Ky.restrict(self.ky_int, self.ky_int)
        self.Ay = self.Kyy.with_diagonal()
        self.Kyb = self.Ky.restrict(self.ky_int, self.ky_top)
        self.Kyt = self.Ky.restrict(self.ky_top, np.arange(self.Ky.shape[1]))


_ASSEMBLY: dict = {}


def _assembly(g: GridSpec) -> _Assembly:
    a = _ASSEMBLY.get(g)
    if a is None:
        if len(_ASSEMBLY) > 16:
            _ASSEMBLY.clear()
        a = _ASSEMBLY[g] = _Assembly(g)
    return a


@dataclass
class MappedOperators:
    """Discrete operators of the fluid problem on one geometry eta."""
    grid: GridSpec
    eta: np.ndarray
    eta_t: np.ndarray
    eta_c: np.ndarray
    eta_t_c: np.ndarray
    slope: np.ndarray
    B: sp.csr_matrix            # cells x all faces (u_x then u_y, C-order), times the cell Jacobian
    Bi: sp.csr_matrix           # interior columns
    Bb: sp.csr_matrix           # top-interface columns
    wi: np.ndarray              # Jacobian face weights of interior unknowns
    A: sp.csr_matrix            # Bi diag(1/wi) Bi^T
    kx: np.ndarray              # stiffness coefficients, u_x grid
    ky: np.ndarray              # stiffness coefficients, u_y grid
    asm: _Assembly

    @property
    def nix(self) -> int:
        return self.asm.ix.size

    @property
    def mass(self) -> np.ndarray:
        g = self.grid
        return self.wi * g.hx * g.hy

    @property
    def Kx(self) -> sp.csr_matrix:
        return self.asm.Kx.matrix(self.kx)

    @property
    def Ky(self) -> sp.csr_matrix:
        """Stiffness on the extended u_y grid (wall traces and the interface row included)."""
        return self.asm.Ky.matrix(self.ky)

    @property
    def Kyy(self) -> sp.csr_matrix:
        return self.asm.Kyy.matrix(self.ky)

    def momentum_matrices(self, rho_over_dt: float, mu: float):
        mx, my = self.mass[:self.nix], self.mass[self.nix:]
        Ax = self.asm.Ax.matrix(np.concatenate([mu * self.kx, rho_over_dt * mx]))
        Ay = self.asm.Ay.matrix(np.concatenate([mu * self.ky, rho_over_dt * my]))
        return Ax, Ay

    def interface_coupling(self, vb: np.ndarray) -> np.ndarray:
        return self.asm.Kyb.matrix(self.ky) @ vb

    def top_rows(self, uy_ext: np.ndarray) -> np.ndarray:
        return self.asm.Kyt.matrix(self.ky) @ uy_ext


def mapped_operators(eta, eta_t=None, grid: GridSpec | None = None, floor: float = 0.0) -> MappedOperators:
    eta_f = as_plate(eta, grid)
    g = eta_f.grid
    e = eta_f.values
    if np.any(e <= floor):
        raise ContactError(f"fluid domain degenerate: min eta = {e.min():.3e}")
    et = np.zeros_like(e) if eta_t is None else np.asarray(getattr(eta_t, "values", eta_t), dtype=float)
    asm = _assembly(g)
    ec = to_centers(e)
    d = np.concatenate([e, [1.0]])
    B = asm.B.matrix(d)
    Bi = asm.Bi.matrix(d)
    Bb = asm.Bb.matrix(d)
    wi = np.concatenate([np.repeat(e[1:-1], g.ny), np.repeat(ec, g.ny - 1)])
    btd = Bi.data[asm.bt_perm]
    vals = btd[asm.A_lp] * btd[asm.A_rp] / wi[asm.A_k]
    A = asm.A.matrix(vals)

    sl = slope_nodes(e, g.hx)
    e_fn = lambda x: np.interp(x, g.x_nodes, e)  # noqa: E731
    d_fn = lambda x: np.interp(x, g.x_nodes, sl)  # noqa: E731
    kx = _stiffness_coefficients(asm.kx_geom, e_fn, d_fn)
    ky = _stiffness_coefficients(asm.ky_geom, e_fn, d_fn)
    return MappedOperators(g, e, et, ec, to_centers(et), sl, B, Bi, Bb, wi, A, kx, ky, asm)


# --- linear algebra --------------------------------------------------------------

class SolverCache:
    """Factorizations reused as preconditioners for nearby matrices.

    The first solve of each named system is direct; later solves of the same
    system run preconditioned CG with the stored factorization, which
    converges in a few iterations while the geometry changes little.
    """

    def __init__(self):
        self._lu: dict[str, object] = {}
        self.iterations: dict[str, int] = {}

    def clear(self):
        self._lu.clear()
        self.iterations.clear()

    def solve(self, key: str, A: sp.csr_matrix, b: np.ndarray, tol: float, max_iter: int, step=None):
        return _solve_spd(A, b, tol, max_iter, self, key, step)


def _solve_spd(A, b, tol, max_iter, cache: SolverCache | None, key: str, step=None) -> np.ndarray:
    if cache is None or key not in cache._lu:
        lu = splu(A.tocsc())
        if cache is not None:
            cache._lu[key] = lu
            cache.iterations[key] = 0
        return lu.solve(b)
    lu = cache._lu[key]
    M = LinearOperator(A.shape, matvec=lu.solve)
    count = [0]

    def cb(_):
        count[0] += 1

    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b)
    x0 = lu.solve(b)
    x, info = cg(A, b, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=M, callback=cb)
    cache.iterations[key] = cache.iterations.get(key, 0) + count[0]
    if info != 0:
        res = float(np.linalg.norm(b - A @ x) / bnorm)
        raise SolverError(f"{key} solve did not converge in {max_iter} iterations", residual=res, step=step)
    return x


def solve_poisson(ops: MappedOperators, rhs: np.ndarray, tol: float = 1e-10, max_iter: int = 500,
                  cache: SolverCache | None = None, step=None) -> np.ndarray:
    """Solve A phi = rhs on the mean-zero subspace (one cell pinned)."""
    A = ops.A[1:, 1:]
    phi = np.zeros(rhs.size)
    phi[1:] = _solve_spd(A, rhs[1:], tol, max_iter, cache, "poisson", step)
    return phi


# --- helpers ------------------------------------------------------------------------

def _split(ops: MappedOperators, vec: np.ndarray):
    return vec[:ops.nix], vec[ops.nix:]


def _interior(v: VectorField) -> np.ndarray:
    return np.concatenate([v.u_x[1:-1, :].ravel(), v.u_y[:, 1:-1].ravel()])


def _assemble(g: GridSpec, xi: np.ndarray, top: np.ndarray) -> VectorField:
    nix = (g.nx - 1) * g.ny
    ux = np.zeros((g.nx + 1, g.ny))
    ux[1:-1, :] = xi[:nix].reshape(g.nx - 1, g.ny)
    uy = np.zeros((g.nx, g.ny + 1))
    uy[:, 1:-1] = xi[nix:].reshape(g.nx, g.ny - 1)
    uy[:, -1] = top
    return VectorField(ux, uy, g)


def _full(v: VectorField) -> np.ndarray:
    return np.concatenate([v.u_x.ravel(), v.u_y.ravel()])


def top_velocity(eta_t: np.ndarray) -> np.ndarray:
    """Interface velocity at the top y-faces from nodal plate velocity."""
    return to_centers(np.asarray(eta_t, dtype=float))


def contravariant_w(v: VectorField, eta: np.ndarray) -> np.ndarray:
    return v.u_y - v.grid.y_nodes[None, :] * slope_term(eta, v)


def convection(v: VectorField, ops: MappedOperators) -> VectorField:
    """ALE convection (v . grad) v - (y-hat eta_t) d_y v at the velocity unknowns.

    In reference form  v1 d_xh u + ((W - y-hat eta_t) / eta) d_yh u  with W
    the contravariant vertical velocity; central differences, zero-trace
    ghosts at walls.
    """
    g = v.grid
    hx, hy = g.hx, g.hy
    e, ec = ops.eta, ops.eta_c
    ux, uy = v.u_x, v.u_y
    W = contravariant_w(v, e)

    nx_out = np.zeros_like(ux)
    Wbar = 0.25 * (W[:-1, :-1] + W[1:, :-1] + W[:-1, 1:] + W[1:, 1:])  # (nx-1, ny) at interior x-faces
    yc = g.y_centers[None, :]
    rel = (Wbar - yc * ops.eta_t[1:-1, None]) / e[1:-1, None]
    dxu = (ux[2:, :] - ux[:-2, :]) / (2 * hx)
    upad = np.concatenate([-ux[:, :1], ux, -ux[:, -1:]], axis=1)
    dyu = (upad[1:-1, 2:] - upad[1:-1, :-2]) / (2 * hy)
    nx_out[1:-1, :] = ux[1:-1, :] * dxu + rel * dyu

    ny_out = np.zeros_like(uy)
    ubar = 0.25 * (ux[:-1, :-1] + ux[1:, :-1] + ux[:-1, 1:] + ux[1:, 1:])  # (nx, ny-1) at interior y-faces
    yn = g.y_nodes[None, 1:-1]
    relv = (W[:, 1:-1] - yn * ops.eta_t_c[:, None]) / ec[:, None]
    vpad = np.concatenate([-uy[:1, :], uy, -uy[-1:, :]], axis=0)
    dxv = (vpad[2:, 1:-1] - vpad[:-2, 1:-1]) / (2 * hx)
    dyv = (uy[:, 2:] - uy[:, :-2]) / (2 * hy)
    ny_out[:, 1:-1] = ubar * dxv + relv * dyv
    return VectorField(nx_out, ny_out, g)


def _forcing(params: FluidParams, t: float, g: GridSpec, e: np.ndarray) -> np.ndarray | None:
    if params.forcing is None:
        return None
    Xx, Yx = g.coords("face-x")
    Xy, Yy = g.coords("face-y")
    fx = params.forcing(t, Xx, Yx * e[:, None], 0)
    fy = params.forcing(t, Xy, Yy * to_centers(e)[:, None], 1)
    return _interior(VectorField(np.asarray(fx, float), np.asarray(fy, float), g))


def cfl_number(v: VectorField, ops: MappedOperators, dt: float) -> float:
    g = v.grid
    W = contravariant_w(v, ops.eta)
    wrel = W - g.y_nodes[None, :] * ops.eta_t_c[:, None]
    return dt * float(np.abs(v.u_x).max() / g.hx + np.abs(wrel / ops.eta_c[:, None]).max() / g.hy)


@dataclass(frozen=True)
class StepInfo:
    divergence: float
    viscous_reaction: np.ndarray   # d Phi / d v_top at the interface faces (times mu)
    dissipation_rate: float        # mu v*^T K v* = 2 mu Phi(v*)
    cfl: float
    v_star: VectorField


def fluid_step_detailed(state: FluidState, eta, eta_t, params: FluidParams, dt: float,
                        cache: SolverCache | None = None, ops: MappedOperators | None = None,
                        step=None, warn_cfl: bool = True) -> tuple[FluidState, StepInfo]:
    """Advance the fluid by dt onto geometry ``eta`` moving with nodal velocity ``eta_t``."""
    g = state.grid
    if ops is None:
        ops = mapped_operators(as_plate(eta, g), eta_t)
    rho, mu = params.rho_f, params.mu_f
    vb = top_velocity(ops.eta_t)

    cfl = cfl_number(state.v, ops, dt)
    if warn_cfl and cfl > params.cfl_limit:
        warnings.warn(f"convective CFL {cfl:.2f} exceeds {params.cfl_limit}; "
                      f"try dt <= {dt * params.cfl_limit / cfl:.3e}", RuntimeWarning, stacklevel=2)

    m = ops.mass
    rhs = rho * m * (_interior(state.v) / dt - _interior(convection(state.v, ops)))
    f = _forcing(params, state.t + dt, g, ops.eta)
    if f is not None:
        rhs += rho * m * f
    rhs += g.hx * g.hy * (ops.Bi.T @ state.p.values.ravel())
    rx, ry = _split(ops, rhs)
    # interface data enters the u_y system through the stiffness coupling
    ry = ry - mu * ops.interface_coupling(vb)
    Ax, Ay = ops.momentum_matrices(rho / dt, mu)
    tol, it = params.solver_tol, params.max_iter
    ux_s = _solve_spd(Ax, rx, tol, it, cache, "momentum-x", step)
    uy_s = _solve_spd(Ay, ry, tol, it, cache, "momentum-y", step)
    vs_int = np.concatenate([ux_s, uy_s])

    d = ops.Bi @ vs_int + ops.Bb @ vb
    phi = solve_poisson(ops, -(rho / dt) * d, tol, it, cache, step)
    v_int = vs_int + (dt / rho) * (ops.Bi.T @ phi) / ops.wi
    p = state.p.values.ravel() + phi
    w = np.repeat(ops.eta_c, g.ny)
    p = p - np.sum(p * w) / np.sum(w)

    v_new = _assemble(g, v_int, vb)
    v_star = _assemble(g, vs_int, vb)
    div = float(np.abs(ops.B @ _full(v_new)).max() / ops.eta_c.min())
    # viscous reaction and dissipation from the predictor velocity
    uy_ext = np.zeros((g.nx + 2, g.ny + 1))
    uy_ext[1:-1, :] = v_star.u_y
    top_rows = ops.top_rows(uy_ext.ravel())
    react = mu * top_rows
    # v^T K v restricted to the rows of nonzero entries: interior and interface
    diss = mu * float(ux_s @ (ops.Kx @ ux_s) + uy_s @ (ops.Kyy @ uy_s + ops.interface_coupling(vb))
                      + vb @ top_rows)
    new = FluidState(v_new, ScalarField(p.reshape(g.nx, g.ny), "center", g), state.t + dt)
    return new, StepInfo(div, react, diss, cfl, v_star)


def fluid_step(state: FluidState, eta, eta_t, params: FluidParams, dt: float, **kw) -> FluidState:
    return fluid_step_detailed(state, eta, eta_t, params, dt, **kw)[0]


def project(v: VectorField, eta, eta_t=None, rho: float = 1.0) -> VectorField:
    """L2(Jacobian)-orthogonal projection onto mapped-solenoidal fields with the given top flux."""
    ops = mapped_operators(as_plate(eta, v.grid), eta_t)
    vb = top_velocity(ops.eta_t) if eta_t is not None else v.u_y[:, -1]
    vi = _interior(v)
    phi = solve_poisson(ops, -(ops.Bi @ vi + ops.Bb @ vb))
    return _assemble(v.grid, vi + (ops.Bi.T @ phi) / ops.wi, vb)


# --- interface load -------------------------------------------------------------------

def consistent_load(state: FluidState, info: StepInfo) -> np.ndarray:
    """Nodal plate load whose power equals the fluid's interface power.

    F_k = (p_{k-1/2} + p_{k+1/2}) / 2 - (R_{k-1/2} + R_{k+1/2}) / (2 hx), with
    p the top-cell pressure and R the viscous reaction on the interface faces.
    """
    g = state.grid
    pt = state.p.values[:, -1]
    out = np.zeros(g.nx + 1)
    out[1:-1] = 0.5 * (pt[1:] + pt[:-1]) - 0.5 * (info.viscous_reaction[1:] + info.viscous_reaction[:-1]) / g.hx
    return out


def _to_nodes(c: np.ndarray) -> np.ndarray:
    out = np.empty(c.size + 1)
    out[1:-1] = 0.5 * (c[1:] + c[:-1])
    out[0], out[-1] = c[0], c[-1]
    return out


def interface_gradient(v: VectorField, eta) -> np.ndarray:
    """Physical velocity gradient at the interface nodes, shape (nx+1, 2, 2)."""
    g = v.grid
    e = as_plate(eta, g).values
    hx, hy = g.hx, g.hy
    Dr = np.zeros((g.nx + 1, 2, 2))
    # u_x: zero trace at y-hat = 1, samples at 1 - hy/2 and 1 - 3hy/2
    Dr[:, 0, 1] = (-3.0 * v.u_x[:, -1] + v.u_x[:, -2] / 3.0) / hy
    top = v.u_y[:, -1]
    Dr[1:-1, 1, 0] = np.diff(top) / hx
    Dr[[0, -1], 1, 0] = [2 * top[0] / hx, -2 * top[-1] / hx]
    dyc = (3 * v.u_y[:, -1] - 4 * v.u_y[:, -2] + v.u_y[:, -3]) / (2 * hy)
    Dr[:, 1, 1] = _to_nodes(dyc)
    sl = slope_nodes(e, hx)
    D = np.empty_like(Dr)
    D[:, :, 0] = Dr[:, :, 0] - (sl / e)[:, None] * Dr[:, :, 1]
    D[:, :, 1] = Dr[:, :, 1] / e[:, None]
    return D


def interface_pressure(p: ScalarField) -> np.ndarray:
    top = 1.5 * p.values[:, -1] - 0.5 * p.values[:, -2]
    return _to_nodes(top)


def stress_normal_normal(state: FluidState, eta, params: FluidParams | None = None,
                         projection: str = "normal") -> ScalarField:
    """Pointwise interface load -((S - pI) n) . n per plate node.

    S = mu grad v or 2 mu eps(v) according to ``params.stress_form``.  With
    ``projection="vertical"`` the vertical traction -(0, 1) . (S - pI) n is
    returned instead.
    """
    params = params or FluidParams()
    g = state.grid
    e = as_plate(eta, g)
    D = interface_gradient(state.v, e)
    S = params.mu_f * (D if params.stress_form == "gradient" else D + np.swapaxes(D, 1, 2))
    p = interface_pressure(state.p)
    n = normal_from_slope(slope_nodes(e.values, g.hx))
    Sn = np.einsum("kab,kb->ka", S, n)
    if projection == "normal":
        val = p - np.einsum("ka,ka->k", Sn, n)
    elif projection == "vertical":
        val = p * n[:, 1] - Sn[:, 1]
    else:
        raise DomainError(f"unknown projection {projection!r}")
    return ScalarField(val, "plate", g)


# --- diagnostics -------------------------------------------------------------------------

def kinetic_energy(v: VectorField, eta, rho: float = 1.0) -> float:
    """1/2 rho ||v||^2 with the Jacobian-weighted face mass of the solver."""
    g = v.grid
    e = as_plate(eta, g).values
    mx = e[1:-1, None] * g.hx * g.hy
    my = to_centers(e)[:, None] * g.hx * g.hy
    return 0.5 * rho * float(np.sum(mx * v.u_x[1:-1] ** 2) + np.sum(my * v.u_y[:, 1:-1] ** 2))


def fluid_norm_sq(v: VectorField, eta) -> float:
    return 2.0 * kinetic_energy(v, eta, 1.0)


def gradient_norms(v: VectorField, eta) -> tuple[float, float]:
    """(||grad v||^2, ||eps v||^2) with cell-centre quadrature on Omega_eta."""
    g = v.grid
    e = as_plate(eta, g).values
    D = mapped_velocity_gradient(v, as_plate(eta, g))
    E = 0.5 * (D + np.swapaxes(D, -1, -2))
    w = to_centers(e)[:, None] * g.hx * g.hy
    return float(np.sum(w * np.sum(D ** 2, axis=(-1, -2)))), float(np.sum(w * np.sum(E ** 2, axis=(-1, -2))))


def korn_ratio(v: VectorField, eta) -> float:
    grad, eps = gradient_norms(v, eta)
    return grad / (2.0 * eps) if eps > 0 else float("nan")


def divergence_residual(v: VectorField, eta) -> float:
    return float(np.abs(mapped_divergence(v, eta).values).max())


def dual_norm_sq(r_int: np.ndarray, ops: MappedOperators) -> float:
    """r^T K^{-1} r on the interior unknowns (negative-Sobolev surrogate)."""
    rx, ry = _split(ops, r_int)
    Kyy = ops.Kyy
    zx = splu(ops.Kx.tocsc()).solve(rx)
    zy = splu(Kyy.tocsc()).solve(ry)
    return float(rx @ zx + ry @ zy)
