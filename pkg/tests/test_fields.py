import numpy as np
import pytest
from hypothesis import given, strategies as st

from katolab.errors import GridMismatchError, InvalidWidthError
from katolab.fields import (NO_PENETRATION, NO_SLIP, VelocityField, advection, divergence, from_functions,
                            from_streamfunction, gradient, grad_norm_sq, helmholtz_solve, inner, l2_norm_sq,
                            laplacian, leray_project, load_field, save_field, solve_neumann,
                            strip_derivative_norm_sq, sup_norm, wall_trace, zeros)
from katolab.geometry import ChannelGrid, strip_weights

from dense import dense_divergence, dense_gradient, dense_laplacian, dense_projection

G8 = ChannelGrid(8, 8)


def random_field(g, rng, bc=NO_SLIP):
    U = VelocityField(rng.standard_normal(g.u_shape), rng.standard_normal(g.v_shape), g, bc)
    return U


def rel(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


# -- oracle equivalence -------------------------------------------------------

def test_divergence_matches_dense(rng):
    U = random_field(G8, rng)
    assert rel(divergence(U).ravel(), dense_divergence(G8) @ U.flat()) < 1e-12


def test_gradient_matches_dense(rng):
    p = rng.standard_normal((8, 8))
    assert rel(gradient(p, G8).flat(), dense_gradient(G8) @ p.ravel()) < 1e-12


def test_projection_matches_dense(rng):
    U = random_field(G8, rng)
    assert rel(leray_project(U).flat(), dense_projection(G8, U.flat())) < 1e-8


def test_laplacian_and_helmholtz_match_dense(rng):
    U = random_field(G8, rng)
    U.v[0] = U.v[-1] = 0.0
    L = dense_laplacian(G8)
    assert rel(laplacian(U).flat(), L @ U.flat()) < 1e-12
    c = 0.013
    X = helmholtz_solve(U, c)
    assert rel(X.flat() - c * (L @ X.flat()), U.flat()) < 1e-10


# -- projector properties ---------------------------------------------------

@given(seed=st.integers(0, 2 ** 32 - 1), nx=st.sampled_from([8, 12, 16]), ny=st.sampled_from([8, 10, 16]))
def test_projector_idempotent_orthogonal(seed, nx, ny):
    g = ChannelGrid(nx, ny)
    U = random_field(g, np.random.default_rng(seed))
    P = leray_project(U)
    assert np.max(np.abs(divergence(P))) < 1e-10
    assert np.all(P.v[0] == 0) and np.all(P.v[-1] == 0)
    PP = leray_project(P)
    assert np.max(np.abs(PP.flat() - P.flat())) < 1e-10 * max(1.0, np.max(np.abs(P.flat())))
    scale = l2_norm_sq(U)
    assert abs(inner(P, U - P)) < 1e-9 * scale


def test_projection_leaves_divfree_unchanged(rng):
    g = ChannelGrid(16, 16)
    psi = np.zeros((17, 16))
    psi[1:-1] = rng.standard_normal((15, 16))
    U = from_streamfunction(g, psi)
    assert np.max(np.abs(divergence(U))) < 1e-10
    assert np.max(np.abs(leray_project(U).flat() - U.flat())) < 1e-10 * np.max(np.abs(U.flat()))


def test_projection_annihilates_gradients(rng):
    g = ChannelGrid(16, 12)
    phi = rng.standard_normal((12, 16))
    P = leray_project(gradient(phi, g))
    assert np.max(np.abs(P.flat())) < 1e-10


@given(seed=st.integers(0, 2 ** 32 - 1))
def test_integration_by_parts(seed):
    rng = np.random.default_rng(seed)
    g = ChannelGrid(12, 10)
    p = rng.standard_normal((10, 12))
    V = random_field(g, rng)
    V.v[0] = V.v[-1] = 0.0
    lhs = inner(gradient(p, g), V)
    rhs = -np.sum(p * divergence(V)) * g.cell_area
    assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_neumann_solver_residual(rng):
    g = ChannelGrid(16, 24)
    f = rng.standard_normal((24, 16))
    p = solve_neumann(f, g)
    assert abs(p.mean()) < 1e-12
    assert np.max(np.abs(divergence(gradient(p, g)) - (f - f.mean()))) < 1e-9


# -- advection ----------------------------------------------------------------

@given(seed=st.integers(0, 2 ** 32 - 1))
def test_advection_skew(seed):
    rng = np.random.default_rng(seed)
    g = ChannelGrid(10, 12)
    a = leray_project(random_field(g, rng))
    U = random_field(g, rng)
    U.v[0] = U.v[-1] = 0.0
    N = advection(a, U)
    assert abs(inner(N, U)) < 1e-12 * l2_norm_sq(U) * np.max(np.abs(a.flat())) / g.dx


def test_advection_of_smooth_field_is_consistent():
    # periodic torus: u = (sin 2 pi y, 0) is a steady shear, (u . grad) u = 0
    g = ChannelGrid(32, 32, periodic_y=True)
    U = from_functions(g, lambda x, y: np.sin(2 * np.pi * y), lambda x, y: 0 * x)
    assert np.max(np.abs(advection(U, U).flat())) < 1e-12
    # u = (sin 2 pi x cos 2 pi y, -cos 2 pi x sin 2 pi y): (u . grad) u = -grad p, p = (cos 4pi x + cos 4 pi y)/4 * ...
    tg = from_functions(g, lambda x, y: np.sin(2 * np.pi * x) * np.cos(2 * np.pi * y),
                        lambda x, y: -np.cos(2 * np.pi * x) * np.sin(2 * np.pi * y))
    xu, yu = g.u_coords()
    exact_u = -np.pi * np.sin(4 * np.pi * xu)  # -(u . grad) u, x component
    err = np.max(np.abs(advection(tg, tg).u - exact_u))
    assert err < 0.5 * (2 * np.pi / 32) ** 2 * np.pi * 16


# -- functionals ----------------------------------------------------------------

def sin_shear(g):
    return from_functions(g, lambda x, y: np.sin(np.pi * y), lambda x, y: 0 * x, NO_SLIP)


def test_grad_norm_sin_profile():
    errs = []
    for n in (32, 64):
        g = ChannelGrid(n, n)
        errs.append(abs(grad_norm_sq(sin_shear(g)) - np.pi ** 2 / 2))
    assert errs[1] < 20 * (1 / 64) ** 2
    assert errs[0] / errs[1] > 3.0  # second order


def test_grad_norm_trivial():
    g = ChannelGrid(16, 16)
    U = from_functions(g, lambda x, y: 1 + 0 * x, lambda x, y: 0 * x, NO_PENETRATION)
    assert grad_norm_sq(U) == pytest.approx(0.0, abs=1e-20)
    assert grad_norm_sq(sin_shear(g), weights=np.zeros((16, 16))) == 0.0


def test_strip_functional_example():
    g = ChannelGrid(64, 200)
    exact = 2 * np.pi ** 2 * (0.05 + np.sin(0.2 * np.pi) / (4 * np.pi))
    val = strip_derivative_norm_sq(sin_shear(g), 0.1, "n_tau")
    assert val == pytest.approx(exact, rel=2e-3)
    assert strip_derivative_norm_sq(sin_shear(g), 0.1, "tau_tau") == 0.0
    full = grad_norm_sq(sin_shear(g))
    assert strip_derivative_norm_sq(sin_shear(g), 0.5, "n_tau") == pytest.approx(full, rel=1e-12)


def test_strip_functional_errors():
    g = ChannelGrid(8, 8)
    with pytest.raises(ValueError):
        strip_derivative_norm_sq(zeros(g), 0.1, "tau_n")
    with pytest.raises(InvalidWidthError):
        strip_derivative_norm_sq(zeros(g), 0.0, "n_tau")


def test_l2_examples():
    g = ChannelGrid(64, 64)
    assert l2_norm_sq(zeros(g)) == 0.0 and sup_norm(zeros(g)) == 0.0
    one = from_functions(g, lambda x, y: 1 + 0 * x, lambda x, y: 0 * x)
    assert l2_norm_sq(one) == pytest.approx(1.0, abs=1e-14)
    U = from_functions(g, lambda x, y: np.sin(2 * np.pi * x) * np.sin(np.pi * y), lambda x, y: 0 * x)
    assert l2_norm_sq(U) == pytest.approx(0.25, abs=1e-3)


def test_bridge_identity_divfree(rng):
    g = ChannelGrid(24, 24)
    U = leray_project(random_field(g, rng))
    w = strip_weights(g, 0.2)
    a = strip_derivative_norm_sq(U, 0.2, "tau_tau", w)
    b = strip_derivative_norm_sq(U, 0.2, "n_n", w)
    assert abs(a - b) <= 1e-10 * a


def test_wall_trace_frames():
    g = ChannelGrid(32, 64)
    U = from_functions(g, lambda x, y: np.sin(2 * np.pi * x) * (1 + y), lambda x, y: 0 * x, NO_PENETRATION)
    bottom, top = wall_trace(U)
    s = np.arange(32) / 32
    np.testing.assert_allclose(bottom, np.sin(2 * np.pi * s), atol=1e-12)
    # top wall: s = 1 - x and tau = (-1, 0)
    np.testing.assert_allclose(top, -2 * np.sin(2 * np.pi * (1 - s)), atol=1e-12)


def test_field_roundtrip(tmp_path, rng):
    for g in (ChannelGrid(8, 12), ChannelGrid(10, 8, periodic_y=True)):
        U = random_field(g, rng, NO_PENETRATION)
        save_field(tmp_path / "f.bin", U)
        V = load_field(tmp_path / "f.bin")
        assert V.grid == g and V.bc == NO_PENETRATION
        np.testing.assert_array_equal(V.flat(), U.flat())


def test_grid_mismatch():
    with pytest.raises(GridMismatchError):
        zeros(ChannelGrid(8, 8)) + zeros(ChannelGrid(8, 10))
    with pytest.raises(GridMismatchError):
        VelocityField(np.zeros((8, 8)), np.zeros((8, 8)), ChannelGrid(8, 8))
