import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from plateflow.errors import DomainError, ShapeError
from plateflow.grid import (GridSpec, ScalarField, VectorField, divergence, gradient, l2_norm, read_field,
                            sym_gradient, trapezoid_weights, write_field)

grids = st.builds(GridSpec, L=st.sampled_from([1.0, 2.0, 3.0]), nx=st.integers(8, 24),
                  ny=st.integers(8, 16), dt=st.just(0.01), t_end=st.just(0.1))


def test_grid_rejects_tiny_or_degenerate():
    with pytest.raises(DomainError):
        GridSpec(nx=4, ny=8)
    with pytest.raises(DomainError):
        GridSpec(L=-1.0)
    with pytest.raises(DomainError):
        GridSpec(dt=0.1, t_end=0.01)


def test_field_shape_and_role_checks(grid):
    with pytest.raises(ShapeError):
        ScalarField(np.zeros((3, 3)), "center", grid)
    with pytest.raises(ShapeError):
        ScalarField(np.zeros(grid.shape("center")), "edge", grid)
    with pytest.raises(DomainError):
        ScalarField(np.full(grid.shape("center"), np.nan), "center", grid)


def test_fields_are_immutable(grid):
    f = ScalarField.zeros(grid)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0


def test_divergence_examples(grid):
    assert np.all(divergence(VectorField.zeros(grid)).values == 0)
    c = VectorField(np.full(grid.shape("face-x"), 2.0), np.full(grid.shape("face-y"), -3.0), grid)
    assert np.all(divergence(c).values == 0)
    lin = VectorField.from_functions(grid, lambda X, Y: X, lambda X, Y: -Y)
    assert np.abs(divergence(lin).values).max() <= 1e-12


def test_divergence_of_sampled_polynomial_matches_symbolic(grid):
    x, y = sp.symbols("x y")
    fx, fy = x ** 2 * y, x * y ** 2
    div = sp.lambdify((x, y), sp.diff(fx, x) + sp.diff(fy, y))
    v = VectorField.from_functions(grid, sp.lambdify((x, y), fx), sp.lambdify((x, y), fy))
    X, Y = grid.coords("center")
    # face differences of quadratics are exact at the cell centre
    assert np.abs(divergence(v).values - div(X, Y)).max() <= 1e-12


def test_divergence_grid_mismatch(grid):
    other = grid.with_resolution(20, 10)
    with pytest.raises(ShapeError):
        VectorField.zeros(grid) + VectorField.zeros(other)


def test_gradient_examples(grid):
    g = gradient(ScalarField(np.full(grid.shape("center"), 4.2), "center", grid))
    assert g.max_abs() == 0
    s = ScalarField.from_function(grid, "center", lambda X, Y: X)
    gv = gradient(s)
    assert np.allclose(gv.u_x[1:-1], 1.0, atol=1e-12)
    assert np.all(gv.u_y == 0)


@given(grids, st.integers(0, 2 ** 31))
def test_gradient_is_minus_adjoint_of_divergence(g, seed):
    r = np.random.default_rng(seed)
    p = ScalarField(r.standard_normal(g.shape("center")), "center", g)
    ux = r.standard_normal(g.shape("face-x"))
    uy = r.standard_normal(g.shape("face-y"))
    ux[[0, -1]] = 0.0
    uy[:, [0, -1]] = 0.0
    v = VectorField(ux, uy, g)
    gp = gradient(p)
    lhs = np.sum(gp.u_x * ux) + np.sum(gp.u_y * uy)
    rhs = -np.sum(p.values * divergence(v).values)
    assert abs(lhs - rhs) <= 1e-10 * (1 + abs(lhs))


@given(grids, st.floats(-3, 3), st.floats(-3, 3))
def test_divergence_linear_in_field(g, a, b):
    r = np.random.default_rng(0)
    u = VectorField(r.standard_normal(g.shape("face-x")), r.standard_normal(g.shape("face-y")), g)
    w = VectorField(r.standard_normal(g.shape("face-x")), r.standard_normal(g.shape("face-y")), g)
    lhs = divergence(u * a + w * b).values
    rhs = a * divergence(u).values + b * divergence(w).values
    assert np.abs(lhs - rhs).max() <= 1e-9 * (1 + np.abs(rhs).max())


def test_sym_gradient_examples(grid):
    shear = VectorField.from_functions(grid, lambda X, Y: Y, lambda X, Y: 0 * X)
    E = sym_gradient(shear)
    assert np.allclose(E[..., 0, 1], 0.5) and np.allclose(E[..., 1, 0], 0.5)
    assert np.allclose(E[..., 0, 0], 0) and np.allclose(E[..., 1, 1], 0)
    lin = VectorField.from_functions(grid, lambda X, Y: X, lambda X, Y: -Y)
    E = sym_gradient(lin)
    assert np.allclose(E[..., 0, 0], 1) and np.allclose(E[..., 1, 1], -1)
    assert np.allclose(E[..., 0, 1], 0)


def test_l2_norm_examples():
    g = GridSpec(L=1.0, nx=8, ny=8)
    assert l2_norm(ScalarField.zeros(g, "node")) == 0
    one = ScalarField(np.ones(g.shape("node")), "node", g)
    assert l2_norm(one, np.ones(g.shape("node"))) == pytest.approx(1.0, abs=1e-14)
    eta = ScalarField(np.full(g.nx + 1, 2.0), "plate", g)
    assert l2_norm(one, eta) == pytest.approx(np.sqrt(2.0), abs=1e-14)
    with pytest.raises(DomainError):
        l2_norm(one, np.zeros(g.shape("node")))


@given(grids)
def test_trapezoid_weights_integrate_area(g):
    for role in ("center", "node", "face-x", "face-y"):
        assert trapezoid_weights(g, role).sum() == pytest.approx(g.L, rel=1e-12)
    assert trapezoid_weights(g, "plate").sum() == pytest.approx(g.L, rel=1e-12)


@pytest.mark.parametrize("suffix", [".csv", ".bin"])
def test_field_round_trip(tmp_path, grid, rng, suffix):
    f = ScalarField(rng.standard_normal(grid.shape("face-y")), "face-y", grid)
    write_field(tmp_path / f"f{suffix}", f)
    back = read_field(tmp_path / f"f{suffix}")
    assert back.role == f.role and back.grid == f.grid
    assert np.array_equal(back.values, f.values)
