"""Channel grid, boundary curves and collar coordinates.

Collar coordinates follow the convention that the curve is traversed with the
fluid on its left, so ``n = (-tau_2, tau_1)`` points into the fluid and
``alpha`` is the inward distance to the boundary.  Curves are re-parameterized
to constant speed, which makes ``h = 1 - alpha * kappa`` with ``kappa`` the
signed curvature.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateCollarError, FrameUnavailableError, InvalidWidthError

__all__ = [
    "ChannelGrid",
    "BoundaryCurve",
    "ChannelBoundary",
    "LocalFrame",
    "StripSpec",
    "local_frame",
    "strip_weights",
    "curve_from_spec",
]


@dataclass(frozen=True)
class ChannelGrid:
    """MAC grid on [0,1) x [0,1], periodic in x, walls at y = 0 and y = 1.

    ``u`` lives on vertical faces ``(i*dx, (j+1/2)*dy)`` with shape (ny, nx);
    ``v`` lives on horizontal faces ``((i+1/2)*dx, j*dy)`` with shape
    (ny+1, nx), rows 0 and ny being the walls.  With ``periodic_y`` the walls
    are replaced by periodicity (used only for the torus test problems) and
    ``v`` has shape (ny, nx).
    """

    nx: int
    ny: int
    periodic_y: bool = False

    def __post_init__(self):
        if self.nx < 8 or self.ny < 8:
            raise ValueError(f"grid must have at least 8x8 cells, got {self.nx}x{self.ny}")

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def u_shape(self):
        return (self.ny, self.nx)

    @property
    def v_shape(self):
        return (self.ny, self.nx) if self.periodic_y else (self.ny + 1, self.nx)

    @property
    def xc(self):
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def yc(self):
        return (np.arange(self.ny) + 0.5) * self.dy

    @property
    def xf(self):
        return np.arange(self.nx) * self.dx

    @property
    def yf(self):
        n = self.ny if self.periodic_y else self.ny + 1
        return np.arange(n) * self.dy

    def u_coords(self):
        return np.meshgrid(self.xf, self.yc)

    def v_coords(self):
        return np.meshgrid(self.xc, self.yf)

    def cell_coords(self):
        return np.meshgrid(self.xc, self.yc)

    def corner_coords(self):
        """Cell corners including both walls: shape (ny+1, nx) (or (ny, nx) if periodic)."""
        return np.meshgrid(self.xf, self.yf)


@dataclass(frozen=True)
class LocalFrame:
    s: float
    alpha: float
    tau: np.ndarray
    normal: np.ndarray
    h: float


class BoundaryCurve:
    """Closed smooth curve stored as a constant-speed trigonometric series.

    ``z(s) = gamma_1(s) + i gamma_2(s) = sum_k c_k exp(2 pi i k s)``, s in [0, 1),
    with |z'(s)| = length for every s.  Orientation is counterclockwise so the
    enclosed region is the fluid.
    """

    def __init__(self, coeffs, n_samples=None):
        coeffs = np.asarray(coeffs, dtype=complex)
        n = coeffs.size
        k = np.fft.fftfreq(n, d=1.0 / n)
        if np.sum(k * np.abs(coeffs) ** 2) < 0:
            # reverse orientation: s -> -s
            coeffs = coeffs[(-np.arange(n)) % n]
        # coefficients below round-off only cost evaluation time
        keep = np.abs(coeffs) > 1e-16 * np.max(np.abs(coeffs))
        self._c = coeffs[keep]
        self._k = k[keep]
        self.n_modes = n
        m = n_samples or max(256, 8 * int(np.max(np.abs(self._k))))
        self.s = np.arange(m) / m
        self.gamma = self.point(self.s)
        self.d1 = self.derivative(self.s, 1)
        self.d2 = self.derivative(self.s, 2)
        self.length = float(np.mean(np.abs(self.d1)))
        kappa = self.curvature(self.s)
        self.max_curvature = float(np.max(np.abs(kappa)))
        self.collar_width = 0.4 / self.max_curvature if self.max_curvature > 0 else 0.4

    # -- constructors -------------------------------------------------------
    @classmethod
    def circle(cls, radius=1.0, center=(0.0, 0.0), n_modes=16):
        c = np.zeros(n_modes, dtype=complex)
        c[0] = center[0] + 1j * center[1]
        c[1] = radius
        return cls(c)

    @classmethod
    def from_fourier(cls, a1, b1, a2, b2, n_modes=None, n_dense=2048):
        """Curve from raw cosine/sine coefficients of gamma_1, gamma_2 in t.

        ``gamma_i(t) = sum_k a_i[k] cos(2 pi k t) + b_i[k] sin(2 pi k t)``.
        The curve is re-parameterized to constant speed before storage.
        """
        a1, b1, a2, b2 = (np.atleast_1d(np.asarray(x, dtype=float)) for x in (a1, b1, a2, b2))
        K = max(len(a1), len(b1), len(a2), len(b2))
        pad = lambda x: np.pad(x, (0, K - len(x)))
        a1, b1, a2, b2 = map(pad, (a1, b1, a2, b2))
        kk = np.arange(K)

        def raw(t, order):
            w = 2 * np.pi * kk
            ph = np.outer(t, w)
            if order == 0:
                cs, sn = np.cos(ph), np.sin(ph)
                return cs @ a1 + sn @ b1, cs @ a2 + sn @ b2
            if order == 1:
                cs, sn = np.cos(ph) * w, np.sin(ph) * w
                return -sn @ a1 + cs @ b1, -sn @ a2 + cs @ b2
            raise ValueError(order)

        t = np.arange(n_dense) / n_dense
        g1, g2 = raw(t, 1)
        speed = np.hypot(g1, g2)
        if np.min(speed) <= 0:
            raise ConfigError("boundary parameterization has a stationary point")
        sh = np.fft.fft(speed)
        kf = np.fft.fftfreq(n_dense, d=1.0 / n_dense)
        total = sh[0].real / n_dense
        ih = np.zeros_like(sh)
        nz = kf != 0
        ih[nz] = sh[nz] / (2j * np.pi * kf[nz])

        const = ih.sum().real / n_dense
        target = t * total
        tt = t.copy()
        prev = np.inf
        for _ in range(50):
            ph = np.exp(2j * np.pi * np.outer(tt, kf))
            f = total * tt + (ph @ ih).real / n_dense - const - target
            step = f / ((ph @ sh).real / n_dense)
            tt -= step
            size = np.max(np.abs(step))
            # quadratic convergence stalls at round-off; stop once steps stop shrinking
            if size < 1e-15 or (size < 1e-12 and size >= 0.5 * prev):
                break
            prev = size
        x, y = raw(tt, 0)
        z = x + 1j * y
        c = np.fft.fft(z) / n_dense
        if n_modes is not None:
            keep = np.abs(kf) <= n_modes
            c = np.where(keep, c, 0)
        return cls(c)

    # -- evaluation ---------------------------------------------------------
    def _series(self, s, order):
        s = np.asarray(s, dtype=float)
        ph = np.exp(2j * np.pi * np.multiply.outer(s, self._k))
        return ph @ (self._c * (2j * np.pi * self._k) ** order)

    def point(self, s):
        return self._series(s, 0)

    def derivative(self, s, order=1):
        return self._series(s, order)

    def curvature(self, s):
        d1, d2 = self._series(s, 1), self._series(s, 2)
        return np.imag(np.conj(d1) * d2) / np.abs(d1) ** 3

    def curvature_derivative(self, s):
        """d kappa / d(arc length)."""
        d1, d3 = self._series(s, 1), self._series(s, 3)
        sp = np.abs(d1)
        return np.imag(np.conj(d1) * d3) / sp ** 3 / sp

    def tangent(self, s):
        d1 = self._series(s, 1)
        t = d1 / np.abs(d1)
        return np.stack([t.real, t.imag], axis=-1)

    def normal(self, s):
        d1 = self._series(s, 1)
        n = 1j * d1 / np.abs(d1)
        return np.stack([n.real, n.imag], axis=-1)

    def metric_factor(self, s, alpha):
        return 1.0 - np.asarray(alpha) * self.curvature(s)

    def collar_point(self, s, alpha):
        """Cartesian point at inward distance alpha from gamma(s)."""
        n = self.normal(s)
        p = self.point(s)
        return np.stack([p.real, p.imag], axis=-1) + np.asarray(alpha)[..., None] * n

    def frame(self, x, collar_width=None):
        width = self.collar_width if collar_width is None else collar_width
        p = complex(x[0], x[1])
        dist = np.abs(self.gamma - p)
        m = dist.size
        is_min = (dist <= np.roll(dist, 1)) & (dist <= np.roll(dist, -1))
        cands = np.flatnonzero(is_min)
        refined = []
        for idx in cands:
            s = self.s[idx]
            for _ in range(60):
                z, d1, d2 = (self._series(s, o) for o in (0, 1, 2))
                f = np.real(np.conj(z - p) * d1)
                fp = np.abs(d1) ** 2 + np.real(np.conj(z - p) * d2)
                if fp <= 0:
                    break
                ds = f / fp
                ds = np.clip(ds, -0.5 / m, 0.5 / m)
                s = s - ds
                if abs(ds) < 1e-15:
                    break
            s = s % 1.0
            refined.append((float(np.abs(self._series(s, 0) - p)), s))
        refined.sort()
        alpha, s = refined[0]
        for d, s2 in refined[1:]:
            sep = abs(s2 - s)
            sep = min(sep, 1 - sep)
            if sep > 1e-6 and abs(d - alpha) <= 1e-10 * max(1.0, alpha):
                raise DegenerateCollarError(f"point {tuple(x)} is equidistant from s={s:.6f} and s={s2:.6f}")
        tau = self.tangent(s)
        n = self.normal(s)
        z = self._series(s, 0)
        offset = np.array([p.real - z.real, p.imag - z.imag])
        if offset @ n < -1e-14 * max(1.0, alpha):
            raise FrameUnavailableError(f"point {tuple(x)} lies outside the domain")
        if alpha >= width:
            raise FrameUnavailableError(f"point {tuple(x)} at distance {alpha:.4g} exceeds collar width {width:.4g}")
        h = float(1.0 - alpha * self.curvature(s))
        return LocalFrame(s=float(s), alpha=float(alpha), tau=tau, normal=n, h=h)


class ChannelBoundary:
    """The two walls of the periodic channel as a boundary with two components.

    Bottom wall: gamma(s) = (s, 0), tau = (1, 0), n = (0, 1).
    Top wall: gamma(s) = (1 - s, 1), tau = (-1, 0), n = (0, -1).
    """

    length = 1.0
    max_curvature = 0.0
    collar_width = 0.4

    def curvature(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def curvature_derivative(self, s):
        return np.zeros_like(np.asarray(s, dtype=float))

    def metric_factor(self, s, alpha):
        return np.ones(np.broadcast(np.asarray(s), np.asarray(alpha)).shape)

    def frame(self, x, collar_width=None):
        width = self.collar_width if collar_width is None else collar_width
        xx, yy = float(x[0]), float(x[1])
        if yy < 0 or yy > 1:
            raise FrameUnavailableError(f"point {tuple(x)} lies outside the channel")
        if yy == 0.5:
            raise DegenerateCollarError("channel mid-line is equidistant from both walls")
        if yy < 0.5:
            s, alpha, tau, n = xx % 1.0, yy, np.array([1.0, 0.0]), np.array([0.0, 1.0])
        else:
            s, alpha, tau, n = (1.0 - xx) % 1.0, 1.0 - yy, np.array([-1.0, 0.0]), np.array([0.0, -1.0])
        if alpha >= width:
            raise FrameUnavailableError(f"point {tuple(x)} at distance {alpha:.4g} exceeds collar width {width:.4g}")
        return LocalFrame(s=s, alpha=alpha, tau=tau, normal=n, h=1.0)


def local_frame(curve, x, collar_width=None) -> LocalFrame:
    """Collar coordinates (s, alpha, tau, n, h) of point ``x`` near ``curve``.

    Raises FrameUnavailableError outside the collar and DegenerateCollarError
    when the nearest boundary point is not unique.
    """
    return curve.frame(np.asarray(x, dtype=float), collar_width)


@dataclass(frozen=True)
class StripSpec:
    """Deterministic strip width rule delta0(nu) = c_delta * nu**theta."""

    c_delta: float = 1.0
    theta: float = 0.5
    walls: str = "both"

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError("theta must lie in (0, 1) so that delta0 -> 0 and nu/delta0 -> 0")
        if self.c_delta <= 0:
            raise ValueError("c_delta must be positive")
        if self.walls not in ("both", "bottom", "top"):
            raise ValueError(f"unknown wall selector {self.walls!r}")

    def delta0(self, nu):
        return min(0.5, self.c_delta * nu ** self.theta)


def strip_weights(grid: ChannelGrid, delta: float, walls: str = "both") -> np.ndarray:
    """Cell-centred quadrature weights of the wall strip {alpha < delta}.

    Cells cut by the strip edge get the covered fraction of their area.
    """
    if not delta > 0:
        raise InvalidWidthError(f"strip width must be positive, got {delta}")
    if delta > 0.5:
        raise InvalidWidthError(f"strip width must not exceed 1/2, got {delta}")
    dy = grid.dy
    lo = np.arange(grid.ny) * dy
    hi = lo + dy
    bottom = np.clip(np.minimum(hi, delta) - lo, 0.0, dy) / dy
    top = np.clip(hi - np.maximum(lo, 1.0 - delta), 0.0, dy) / dy
    if walls == "bottom":
        frac = bottom
    elif walls == "top":
        frac = top
    else:
        frac = np.minimum(bottom + top, 1.0)
    return np.repeat(frac[:, None] * grid.cell_area, grid.nx, axis=1)


_CIRCLE = re.compile(r"^circle[\{\(]?\s*([0-9.eE+-]*)\s*[\}\)]?$")


def curve_from_spec(spec):
    """Boundary from a config entry: "channel", "circle{R}", or a Fourier table.

    A Fourier table is a mapping with keys a1, b1, a2, b2 (lists of cosine and
    sine coefficients of gamma_1 and gamma_2).
    """
    if isinstance(spec, str):
        key = spec.strip().lower()
        if key == "channel":
            return ChannelBoundary()
        m = _CIRCLE.match(key)
        if m:
            radius = float(m.group(1)) if m.group(1) else 1.0
            return BoundaryCurve.circle(radius)
        raise ConfigError(f"unknown boundary keyword {spec!r}")
    try:
        return BoundaryCurve.from_fourier(spec["a1"], spec["b1"], spec["a2"], spec["b2"])
    except KeyError as exc:
        raise ConfigError(f"Fourier boundary table missing {exc}") from None
