"""Discrete field algebra on the staggered (MAC) channel grid.

Layout (see ``ChannelGrid``): ``u[j, i]`` at ``(i dx, (j+1/2) dy)``, ``v[j, i]`` at
``((i+1/2) dx, j dy)``, scalars at cell centres.  The discrete divergence and
gradient are negative adjoints of each other, so projection is exact to
round-off and every energy manipulation has an exact discrete counterpart.

Fast solvers diagonalize the operators: real FFT in x, and in y a DCT-II
(Neumann pressure), DST-II (no-slip ``u`` with ghost reflection ``u_g = -u``) or
DST-I (``v`` with Dirichlet wall nodes).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .errors import GridMismatchError, InvalidWidthError, NumericalFailureError
from .geometry import ChannelGrid, strip_weights

NO_SLIP = "no-slip"
NO_PENETRATION = "no-penetration"
FREE = "free"
_BC_CODES = {NO_SLIP: 0, NO_PENETRATION: 1, FREE: 2}


@dataclass
class VelocityField:
    u: np.ndarray
    v: np.ndarray
    grid: ChannelGrid
    bc: str = NO_SLIP

    def __post_init__(self):
        if self.u.shape != self.grid.u_shape or self.v.shape != self.grid.v_shape:
            raise GridMismatchError(
                f"component shapes {self.u.shape}, {self.v.shape} do not match grid {self.grid}"
            )
        if self.bc not in _BC_CODES:
            raise ValueError(f"unknown boundary tag {self.bc!r}")

    def copy(self, bc=None):
        return VelocityField(self.u.copy(), self.v.copy(), self.grid, bc or self.bc)

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other):
        self._check(other)
        return VelocityField(self.u + other.u, self.v + other.v, self.grid, self.bc)

    def __sub__(self, other):
        self._check(other)
        return VelocityField(self.u - other.u, self.v - other.v, self.grid, self.bc)

    def __mul__(self, c):
        return VelocityField(self.u * c, self.v * c, self.grid, self.bc)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def flat(self):
        return np.concatenate([self.u.ravel(), self.v.ravel()])

    @classmethod
    def from_flat(cls, data, grid, bc=NO_SLIP):
        nu = grid.nx * grid.ny
        return cls(data[:nu].reshape(grid.u_shape).copy(), data[nu:].reshape(grid.v_shape).copy(), grid, bc)


def zeros(grid, bc=NO_SLIP) -> VelocityField:
    return VelocityField(np.zeros(grid.u_shape), np.zeros(grid.v_shape), grid, bc)


def from_functions(grid, fu, fv, bc=NO_SLIP) -> VelocityField:
    """Sample analytic components at the staggered face positions."""
    xu, yu = grid.u_coords()
    xv, yv = grid.v_coords()
    return VelocityField(np.asarray(fu(xu, yu), float) * np.ones(grid.u_shape),
                         np.asarray(fv(xv, yv), float) * np.ones(grid.v_shape), grid, bc)


def from_streamfunction(grid, psi, bc=NO_SLIP) -> VelocityField:
    """Discrete curl of a corner-valued streamfunction: u = -d_y psi, v = d_x psi.

    ``psi`` has shape (ny+1, nx) on corners (ny, nx when periodic in y).  The
    result has zero discrete divergence by construction.
    """
    if grid.periodic_y:
        u = -(np.roll(psi, -1, axis=0) - psi) / grid.dy
    else:
        u = -(psi[1:] - psi[:-1]) / grid.dy
    v = (np.roll(psi, -1, axis=1) - psi) / grid.dx
    if not grid.periodic_y:
        v = v.copy()
    return VelocityField(u, v, grid, bc)


# ---------------------------------------------------------------------------
# div / grad

def divergence(U: VelocityField) -> np.ndarray:
    g = U.grid
    du = (np.roll(U.u, -1, axis=1) - U.u) / g.dx
    if g.periodic_y:
        dv = (np.roll(U.v, -1, axis=0) - U.v) / g.dy
    else:
        dv = (U.v[1:] - U.v[:-1]) / g.dy
    return du + dv


def gradient(p: np.ndarray, grid: ChannelGrid, bc=NO_PENETRATION) -> VelocityField:
    """Face gradient of a cell-centred scalar; zero normal component on walls."""
    gu = (p - np.roll(p, 1, axis=1)) / grid.dx
    if grid.periodic_y:
        gv = (p - np.roll(p, 1, axis=0)) / grid.dy
    else:
        gv = np.zeros(grid.v_shape)
        gv[1:-1] = (p[1:] - p[:-1]) / grid.dy
    return VelocityField(gu, gv, grid, bc)


@lru_cache(maxsize=32)
def _eigs(nx, ny, periodic_y, kind):
    dx, dy = 1.0 / nx, 1.0 / ny
    kx = np.arange(nx // 2 + 1)
    lx = -(2.0 - 2.0 * np.cos(2 * np.pi * kx / nx)) / dx ** 2
    if periodic_y:
        ky = np.arange(ny)
        ly = -(2.0 - 2.0 * np.cos(2 * np.pi * ky / ny)) / dy ** 2
    elif kind == "neumann":
        m = np.arange(ny)
        ly = -(2.0 - 2.0 * np.cos(np.pi * m / ny)) / dy ** 2
    elif kind == "dst2":
        m = np.arange(1, ny + 1)
        ly = -(2.0 - 2.0 * np.cos(np.pi * m / ny)) / dy ** 2
    elif kind == "dst1":
        m = np.arange(1, ny)
        ly = -(2.0 - 2.0 * np.cos(np.pi * m / ny)) / dy ** 2
    else:
        raise ValueError(kind)
    return ly[:, None] + lx[None, :]


def _forward(a, grid, kind):
    ah = sfft.rfft(a, axis=1)
    if grid.periodic_y:
        return sfft.fft(ah, axis=0)
    if kind == "neumann":
        return sfft.dct(ah, type=2, axis=0, norm="ortho")
    if kind == "dst2":
        return sfft.dst(ah, type=2, axis=0, norm="ortho")
    return sfft.dst(ah, type=1, axis=0, norm="ortho")


def _backward(ah, grid, kind):
    if grid.periodic_y:
        ah = sfft.ifft(ah, axis=0)
    elif kind == "neumann":
        ah = sfft.idct(ah, type=2, axis=0, norm="ortho")
    elif kind == "dst2":
        ah = sfft.idst(ah, type=2, axis=0, norm="ortho")
    else:
        ah = sfft.idst(ah, type=1, axis=0, norm="ortho")
    return sfft.irfft(ah, n=grid.nx, axis=1)


def scalar_laplacian(p: np.ndarray, grid: ChannelGrid) -> np.ndarray:
    """div(grad p) with zero-flux walls."""
    return divergence(gradient(p, grid))


def solve_neumann(f: np.ndarray, grid: ChannelGrid, check=True) -> np.ndarray:
    """Zero-mean solution of div(grad p) = f with zero-flux walls.

    The mean of ``f`` is removed first (compatibility condition).
    """
    f = f - f.mean()
    lam = _eigs(grid.nx, grid.ny, grid.periodic_y, "neumann")
    fh = _forward(f, grid, "neumann")
    with np.errstate(divide="ignore", invalid="ignore"):
        ph = fh / lam
    ph[0, 0] = 0.0
    p = _backward(ph, grid, "neumann")
    if check:
        res = np.max(np.abs(scalar_laplacian(p, grid) - f))
        scale = max(1.0, np.max(np.abs(f)))
        if not np.isfinite(res) or res > 1e-8 * scale:
            raise NumericalFailureError("Neumann solve failed", res)
    return p


def leray_project(U: VelocityField, return_potential=False):
    """Orthogonal projection onto discretely divergence-free fields with zero normal trace.

    Returns ``U + grad(pi)`` where ``div grad pi = -div U`` with the wall
    normal velocity removed; ``pi`` has zero mean.
    """
    g = U.grid
    w = U.copy()
    if not g.periodic_y:
        w.v[0] = 0.0
        w.v[-1] = 0.0
    pi = solve_neumann(-divergence(w), g)
    gp = gradient(pi, g)
    out = VelocityField(w.u + gp.u, w.v + gp.v, g, U.bc)
    if return_potential:
        return out, pi
    return out


# ---------------------------------------------------------------------------
# viscous operator

def laplacian(U: VelocityField) -> VelocityField:
    """Vector Laplacian with no-slip walls (ghost reflection for u, Dirichlet nodes for v)."""
    g = U.grid
    u, v = U.u, U.v
    lu = (np.roll(u, -1, 1) - 2 * u + np.roll(u, 1, 1)) / g.dx ** 2
    lv = (np.roll(v, -1, 1) - 2 * v + np.roll(v, 1, 1)) / g.dx ** 2
    if g.periodic_y:
        lu += (np.roll(u, -1, 0) - 2 * u + np.roll(u, 1, 0)) / g.dy ** 2
        lv += (np.roll(v, -1, 0) - 2 * v + np.roll(v, 1, 0)) / g.dy ** 2
    else:
        up = np.vstack([-u[:1], u, -u[-1:]])
        lu += (up[2:] - 2 * u + up[:-2]) / g.dy ** 2
        lv[1:-1] += (v[2:] - 2 * v[1:-1] + v[:-2]) / g.dy ** 2
        lv[0] = 0.0
        lv[-1] = 0.0
    return VelocityField(lu, lv, g, U.bc)


def helmholtz_solve(R: VelocityField, c: float) -> VelocityField:
    """Solve (I - c * laplacian) X = R with no-slip walls (c >= 0)."""
    if c < 0:
        raise ValueError("Helmholtz coefficient must be nonnegative")
    g = R.grid
    if c == 0:
        out = R.copy()
        if not g.periodic_y:
            out.v[0] = 0.0
            out.v[-1] = 0.0
        return out
    if g.periodic_y:
        lam = _eigs(g.nx, g.ny, True, "neumann")
        u = _backward(_forward(R.u, g, "neumann") / (1 - c * lam), g, "neumann")
        v = _backward(_forward(R.v, g, "neumann") / (1 - c * lam), g, "neumann")
        out = VelocityField(u, v, g, R.bc)
    else:
        lu = _eigs(g.nx, g.ny, False, "dst2")
        lv = _eigs(g.nx, g.ny, False, "dst1")
        u = _backward(_forward(R.u, g, "dst2") / (1 - c * lu), g, "dst2")
        v = np.zeros(g.v_shape)
        v[1:-1] = _backward(_forward(R.v[1:-1], g, "dst1") / (1 - c * lv), g, "dst1")
        out = VelocityField(u, v, g, R.bc)
    if not (np.all(np.isfinite(out.u)) and np.all(np.isfinite(out.v))):
        raise NumericalFailureError("Helmholtz solve produced non-finite values")
    return out


def dirichlet_form(U: VelocityField) -> float:
    """-<laplacian U, U>: the discrete ||grad U||^2 dissipated by the implicit viscous step."""
    return -inner(laplacian(U), U)


# ---------------------------------------------------------------------------
# advection

def advection(a: VelocityField, U: VelocityField) -> VelocityField:
    """Skew-symmetric discretization of -(a . grad) U.

    Divergence-form fluxes with centred interpolation, minus half the
    flux-divergence correction; ``<advection(a, U), U> = 0`` for any ``a``
    and any ``U`` with zero wall normal velocity.
    """
    g = a.grid
    dx, dy = g.dx, g.dy
    au, av, u, v = a.u, a.v, U.u, U.v
    rx = lambda f, s: np.roll(f, s, axis=1)
    ry = lambda f, s: np.roll(f, s, axis=0)

    # u control volumes
    fe = 0.5 * (au + rx(au, -1))
    fw = rx(fe, 1)
    if g.periodic_y:
        cflux = 0.5 * (rx(av, 1) + av)
        fs = cflux
        fn = ry(cflux, -1)
    else:
        cflux = 0.5 * (rx(av, 1) + av)
        fs = cflux[:-1]
        fn = cflux[1:]
    ue = 0.5 * (u + rx(u, -1))
    uw = 0.5 * (u + rx(u, 1))
    un = 0.5 * (u + ry(u, -1))
    us = 0.5 * (u + ry(u, 1))
    conv_u = (fe * ue - fw * uw) / dx + (fn * un - fs * us) / dy
    divf_u = (fe - fw) / dx + (fn - fs) / dy
    nu_ = -(conv_u - 0.5 * u * divf_u)

    # v control volumes
    if g.periodic_y:
        xflux = 0.5 * (ry(au, 1) + au)
        yflux = 0.5 * (av + ry(av, -1))
        fn_v, fs_v = yflux, ry(yflux, 1)
        vc, vn, vs = v, ry(v, -1), ry(v, 1)
    else:
        xflux = 0.5 * (au[:-1] + au[1:])
        yflux = 0.5 * (av[:-1] + av[1:])
        fn_v, fs_v = yflux[1:], yflux[:-1]
        vc, vn, vs = v[1:-1], v[2:], v[:-2]
    fe_v = rx(xflux, -1)
    fw_v = xflux
    ve = 0.5 * (vc + rx(vc, -1))
    vw = 0.5 * (vc + rx(vc, 1))
    conv_v = (fe_v * ve - fw_v * vw) / dx + (fn_v * 0.5 * (vc + vn) - fs_v * 0.5 * (vc + vs)) / dy
    divf_v = (fe_v - fw_v) / dx + (fn_v - fs_v) / dy
    nv = -(conv_v - 0.5 * vc * divf_v)
    if g.periodic_y:
        out_v = nv
    else:
        out_v = np.zeros(g.v_shape)
        out_v[1:-1] = nv
    return VelocityField(nu_, out_v, g, U.bc)


def max_speed(U: VelocityField) -> float:
    return float(max(np.max(np.abs(U.u)), np.max(np.abs(U.v))))


# ---------------------------------------------------------------------------
# norms and functionals

def _v_weights(grid):
    if grid.periodic_y:
        return None
    w = np.ones(grid.ny + 1)
    w[0] = w[-1] = 0.5
    return w[:, None]


def inner(U: VelocityField, V: VelocityField) -> float:
    """Discrete L2 inner product (trapezoidal weight 1/2 on wall v-faces)."""
    g = U.grid
    w = _v_weights(g)
    sv = np.sum(U.v * V.v) if w is None else np.sum(w * U.v * V.v)
    return float(g.cell_area * (np.sum(U.u * V.u) + sv))


def l2_norm_sq(U: VelocityField) -> float:
    return inner(U, U)


def sup_norm(U: VelocityField) -> float:
    return max_speed(U)


def _wall_derivative(f, dy, known_wall):
    """Second-order d/dy at the first and last cell-centre rows."""
    if known_wall:
        bottom = (3.0 * f[0] + f[1]) / (3.0 * dy)
        top = -(3.0 * f[-1] + f[-2]) / (3.0 * dy)
    else:
        bottom = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dy)
        top = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dy)
    return bottom, top


def cell_gradients(U: VelocityField):
    """The four velocity derivatives at cell centres: (du/dx, du/dy, dv/dx, dv/dy).

    du/dx and dv/dy are the exact MAC differences (so du/dx + dv/dy is the
    discrete divergence).  du/dy uses centred differences of the x-averaged u
    with second-order one-sided differences in the wall rows; the wall value
    is taken as zero for no-slip fields and extrapolated otherwise.
    """
    g = U.grid
    u, v = U.u, U.v
    ux = (np.roll(u, -1, 1) - u) / g.dx
    ubar = 0.5 * (u + np.roll(u, -1, 1))
    if g.periodic_y:
        vy = (np.roll(v, -1, 0) - v) / g.dy
        vbar = 0.5 * (v + np.roll(v, -1, 0))
        uy = (np.roll(ubar, -1, 0) - np.roll(ubar, 1, 0)) / (2 * g.dy)
    else:
        vy = (v[1:] - v[:-1]) / g.dy
        vbar = 0.5 * (v[1:] + v[:-1])
        uy = np.empty_like(ubar)
        uy[1:-1] = (ubar[2:] - ubar[:-2]) / (2 * g.dy)
        uy[0], uy[-1] = _wall_derivative(ubar, g.dy, U.bc == NO_SLIP)
    vx = (np.roll(vbar, -1, 1) - np.roll(vbar, 1, 1)) / (2 * g.dx)
    return ux, uy, vx, vy


def full_weights(grid: ChannelGrid) -> np.ndarray:
    return np.full((grid.ny, grid.nx), grid.cell_area)


def grad_norm_sq(U: VelocityField, weights=None) -> float:
    """Weighted sum of |grad U|^2 over cells; default weights give ||grad U||^2_{L2(D)}."""
    if weights is None:
        weights = full_weights(U.grid)
    ux, uy, vx, vy = cell_gradients(U)
    return float(np.sum(weights * (ux ** 2 + uy ** 2 + vx ** 2 + vy ** 2)))


_SELECTORS = ("n_tau", "n_n", "tau_tau")


def strip_derivative_norm_sq(U: VelocityField, delta: float, which: str, weights=None) -> float:
    """Strip integral of one squared wall-frame derivative over both wall strips.

    n_tau -> d_y u_x, n_n -> d_y u_y, tau_tau -> d_x u_x (signs of tau, n drop
    out after squaring).
    """
    if which not in _SELECTORS:
        raise ValueError(f"unknown derivative selector {which!r}; expected one of {_SELECTORS}")
    if weights is None:
        if not 0 < delta <= 0.5:
            raise InvalidWidthError(f"strip width must lie in (0, 1/2], got {delta}")
        weights = strip_weights(U.grid, delta)
    ux, uy, vx, vy = cell_gradients(U)
    d = {"n_tau": uy, "n_n": vy, "tau_tau": ux}[which]
    return float(np.sum(weights * d ** 2))


def wall_trace(U: VelocityField):
    """Tangential velocity extrapolated to each wall, in the wall's own frame.

    Returns (bottom, top), each sampled at s = m / nx.  The bottom wall has
    s = x; the top wall has s = 1 - x and tau = (-1, 0).
    """
    u = U.u
    nx = U.grid.nx
    bottom = (15.0 * u[0] - 10.0 * u[1] + 3.0 * u[2]) / 8.0
    top = (15.0 * u[-1] - 10.0 * u[-2] + 3.0 * u[-3]) / 8.0
    return bottom, -top[(-np.arange(nx)) % nx]


# ---------------------------------------------------------------------------
# binary snapshots: magic, nx, ny, staggering tag, bc code, then u, v as <f8

_MAGIC = b"KLVF"
_HEADER = struct.Struct("<4sIIBB")


def save_field(path, U: VelocityField):
    tag = 2 if U.grid.periodic_y else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, U.grid.nx, U.grid.ny, tag, _BC_CODES[U.bc]))
        fh.write(np.ascontiguousarray(U.u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(U.v, dtype="<f8").tobytes())


def load_field(path) -> VelocityField:
    with open(path, "rb") as fh:
        magic, nx, ny, tag, bc = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a velocity snapshot")
        grid = ChannelGrid(nx, ny, periodic_y=(tag == 2))
        data = np.frombuffer(fh.read(), dtype="<f8")
    bcname = {v: k for k, v in _BC_CODES.items()}[bc]
    return VelocityField.from_flat(data.astype(float), grid, bcname)
