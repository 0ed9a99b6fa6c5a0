import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from plateflow.errors import DomainError, ShapeError
from plateflow.geometry import (build_domain_map, domain_volume, interface_normal, jacobian_matrices,
                                mapped_divergence, normal_from_slope, pushforward_sample)
from plateflow.grid import GridSpec, ScalarField, divergence
from plateflow.profiles import stream_velocity

from conftest import bump_eta


def plate(grid, values):
    return ScalarField(values, "plate", grid)


def test_identical_domains_give_unit_ratio(grid):
    e = plate(grid, bump_eta(grid))
    m = build_domain_map(e, e)
    assert np.all(m.gamma.values == 1.0)
    assert np.abs(m.dx_gamma.values).max() <= 1e-13


def test_constant_ratio(grid):
    m = build_domain_map(plate(grid, np.full(grid.nx + 1, 2.0)), plate(grid, np.ones(grid.nx + 1)))
    assert np.all(m.gamma.values == 0.5)
    assert np.all(m.dx_gamma.values == 0.0)
    J, Jinv, Jt, _ = jacobian_matrices(m, 0.3)
    assert np.allclose(J, np.diag([1.0, 0.5]))
    assert np.allclose(Jinv, np.diag([1.0, 2.0]))


def test_unit_ratio_jacobians_are_identity(grid):
    e = plate(grid, np.ones(grid.nx + 1))
    for M in jacobian_matrices(build_domain_map(e, e), np.linspace(0, 1, grid.nx + 1)):
        assert np.allclose(M, np.eye(2))


@given(st.floats(0.1, 3.0), st.floats(0.1, 3.0), st.floats(0.0, 2.0))
def test_jacobian_inverses(a, b, y):
    g = GridSpec(nx=8, ny=8)
    x = g.x_nodes
    m = build_domain_map(plate(g, a + 0.05 * x), plate(g, b + 0.1 * x ** 2))
    J, Jinv, Jt, Jtinv = jacobian_matrices(m, y)
    assert np.allclose(J @ Jinv, np.eye(2), atol=1e-12)
    assert np.allclose(Jt @ Jtinv, np.eye(2), atol=1e-12)


def test_ratio_matches_symbolic_oracle():
    x = sp.symbols("x")
    L = 2.0
    eta2 = 1 + sp.Rational(1, 10) * sp.sin(2 * sp.pi * x / L) * sp.sin(sp.pi * x / L) ** 2
    dg = sp.lambdify(x, sp.diff(eta2, x))
    errs = []
    for nx in (32, 64):
        g = GridSpec(L=L, nx=nx, ny=8)
        xs = g.x_nodes
        e2 = 1 + 0.1 * np.sin(2 * np.pi * xs / L) * np.sin(np.pi * xs / L) ** 2
        m = build_domain_map(plate(g, np.ones(nx + 1)), plate(g, e2))
        assert np.allclose(m.gamma.values, e2, atol=1e-15)
        errs.append(np.abs(m.dx_gamma.values - dg(xs)).max())
    assert errs[0] / errs[1] > 3.5


def test_nonpositive_height_rejected(grid):
    e = np.ones(grid.nx + 1)
    bad = e.copy()
    bad[3] = 0.0
    with pytest.raises(DomainError):
        build_domain_map(plate(grid, e), plate(grid, bad))


def test_grid_mismatch_rejected(grid):
    other = grid.with_resolution(20)
    with pytest.raises(ShapeError):
        build_domain_map(plate(grid, np.ones(17)), plate(other, np.ones(21)))


def test_normals():
    g = GridSpec(nx=8, ny=8)
    n = interface_normal(plate(g, np.ones(9))).n
    assert np.allclose(n, [0.0, 1.0])
    assert np.allclose(normal_from_slope(1.0), [-1 / np.sqrt(2), 1 / np.sqrt(2)])


@given(st.floats(-5, 5))
def test_normal_is_unit(s):
    assert np.linalg.norm(normal_from_slope(s)) == pytest.approx(1.0, rel=1e-14)


def test_identity_sampling(grid, rng):
    e = plate(grid, bump_eta(grid))
    m = build_domain_map(e, e)
    f = ScalarField(rng.standard_normal(grid.shape("center")), "center", grid)
    X, Yh = grid.coords("center")
    Y = Yh * (0.5 * (e.values[1:] + e.values[:-1]))[:, None]
    vals = pushforward_sample(m, f, X, Y * (np.interp(X, grid.x_nodes, e.values)
                                            / (0.5 * (e.values[1:] + e.values[:-1]))[:, None]))
    assert np.allclose(vals, f.values, atol=1e-12)


def test_out_of_domain_sample(grid):
    e = plate(grid, np.ones(grid.nx + 1))
    m = build_domain_map(e, e)
    f = ScalarField.zeros(grid)
    with pytest.raises(DomainError):
        pushforward_sample(m, f, np.array([0.5]), np.array([1.5]))
    with pytest.raises(DomainError):
        pushforward_sample(m, f, np.array([-1.0]), np.array([0.5]))


def test_flat_mapped_divergence_is_flat_divergence(grid, rng):
    ux = rng.standard_normal(grid.shape("face-x"))
    uy = rng.standard_normal(grid.shape("face-y"))
    from plateflow.grid import VectorField
    v = VectorField(ux, uy, grid)
    assert np.allclose(mapped_divergence(v, plate(grid, np.ones(grid.nx + 1))).values, divergence(v).values)


@given(st.integers(0, 2 ** 31), st.floats(-0.5, 0.5))
def test_stream_velocities_are_mapped_solenoidal(seed, amp):
    g = GridSpec(nx=16, ny=8)
    r = np.random.default_rng(seed)
    psi = r.standard_normal(g.shape("node"))
    psi[[0, -1], :] = 0.0
    psi[:, 0] = 0.0
    eta = bump_eta(g, amp)
    v = stream_velocity(psi, eta, g)
    assert np.abs(mapped_divergence(v, plate(g, eta)).values).max() <= 1e-10 * (1 + v.max_abs())


def test_domain_volume(grid):
    assert domain_volume(plate(grid, np.ones(grid.nx + 1))) == pytest.approx(grid.L)
    e = bump_eta(grid, 0.3)  # odd mode: no net area change
    assert domain_volume(plate(grid, e)) == pytest.approx(grid.L, abs=1e-12)
