"""Kato's boundary corrector built from the Euler boundary trace.

In collar coordinates (s, alpha) the corrector is

    v_tau = g(s) xi(alpha/delta),
    v_n   = -h^{-1} d_tau g(s) * delta * Xi(alpha/delta),

with ``g`` the tangential Euler velocity on the wall, ``xi`` a cutoff with zero
mean and ``Xi`` its primitive.  Because ``Xi(r) = 0`` for ``r >= 1`` the field
is supported in the strip of width delta, and d_tau v_tau + d_n(h v_n) = 0
holds identically.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidWidthError
from .fields import VelocityField
from .geometry import ChannelBoundary, ChannelGrid
from .regression import regress_slope


def _smoothstep(t):
    return t ** 3 * (10 - 15 * t + 6 * t ** 2)


def _smoothstep_d1(t):
    return 30 * t ** 2 * (1 - t) ** 2


def _smoothstep_d2(t):
    return 60 * t - 180 * t ** 2 + 120 * t ** 3


def _smoothstep_int(t):
    return 2.5 * t ** 4 - 3 * t ** 5 + t ** 6


def _bump_int(q):
    # primitive of (1 - q^2)^3 from -1
    F = lambda s: s - s ** 3 + 0.6 * s ** 5 - s ** 7 / 7.0
    return F(q) - F(-1.0)


class Cutoff:
    """xi = eta - (m1/m2) phi.

    eta is a quintic smoothstep (1 on [0, 0.15], 0 beyond 0.35) and phi the
    C^2 bump (1 - q^2)^3 on [0.4, 0.95]; m1, m2 are their masses so that
    the integral of xi over [0, inf) vanishes.
    """

    def __init__(self, plateau=0.15, ramp_end=0.35, bump_start=0.4, bump_end=0.95):
        self.a, self.b, self.c, self.d = plateau, ramp_end, bump_start, bump_end
        self.plateau = plateau
        self.support = bump_end
        self.m1 = self.a + 0.5 * (self.b - self.a)
        self.m2 = 0.5 * (self.d - self.c) * (32.0 / 35.0)
        self.ratio = self.m1 / self.m2
        if self.ratio > 1:
            raise ValueError("bump mass too small: xi would leave [-1, 1]")

    def _t(self, r):
        return np.clip((r - self.a) / (self.b - self.a), 0.0, 1.0)

    def _q(self, r):
        return np.clip((2 * r - (self.c + self.d)) / (self.d - self.c), -1.0, 1.0)

    def eta(self, r):
        return 1.0 - _smoothstep(self._t(np.asarray(r, float)))

    def xi(self, r):
        r = np.asarray(r, dtype=float)
        q = self._q(r)
        return 1.0 - _smoothstep(self._t(r)) - self.ratio * (1 - q ** 2) ** 3

    def dxi(self, r):
        r = np.asarray(r, dtype=float)
        t, q = self._t(r), self._q(r)
        ramp = -_smoothstep_d1(t) / (self.b - self.a)
        bump = -6 * q * (1 - q ** 2) ** 2 * (2.0 / (self.d - self.c))
        return ramp - self.ratio * bump

    def d2xi(self, r):
        r = np.asarray(r, dtype=float)
        t, q = self._t(r), self._q(r)
        inside_ramp = (r > self.a) & (r < self.b)
        ramp = np.where(inside_ramp, -_smoothstep_d2(t) / (self.b - self.a) ** 2, 0.0)
        bump = (-6 * (1 - q ** 2) ** 2 + 24 * q ** 2 * (1 - q ** 2)) * (2.0 / (self.d - self.c)) ** 2
        return ramp - self.ratio * bump

    def Xi(self, r):
        """Primitive of xi from 0."""
        r = np.asarray(r, dtype=float)
        t, q = self._t(r), self._q(r)
        eta_int = np.where(r <= self.a, r, self.a + (self.b - self.a) * (t - _smoothstep_int(t)))
        phi_int = 0.5 * (self.d - self.c) * _bump_int(q)
        return eta_int - self.ratio * phi_int


def build_cutoff() -> Cutoff:
    return Cutoff()


class TraceSeries:
    """Periodic trace g(s) on a boundary component of length L, as a trigonometric interpolant."""

    def __init__(self, samples, length=1.0):
        samples = np.asarray(samples, dtype=float)
        self.samples = samples
        self.n = samples.size
        self.length = float(length)
        self._c = np.fft.fft(samples) / self.n
        self._k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        if self.n % 2 == 0:
            # split the Nyquist coefficient so the interpolant is real
            self._c = np.append(self._c, 0.0)
            self._k = np.append(self._k, self.n // 2)
            self._c[self.n // 2] *= 0.5
            self._c[-1] = self._c[self.n // 2]
            self._k[self.n // 2] = -self.n // 2
        amp = np.abs(self._c)
        total = np.sum(amp ** 2)
        high = np.sum(amp[np.abs(self._k) > self.n / 4] ** 2)
        self.under_resolved = bool(total > 0 and high > 1e-10 * total)

    def __call__(self, s, order=0):
        """d^order g / d(arc length)^order at boundary parameter s."""
        s = np.asarray(s, dtype=float)
        # collar grids repeat each s across many alpha, so evaluate once per value
        su, inv = np.unique(s, return_inverse=True)
        ph = np.exp(2j * np.pi * np.multiply.outer(su, self._k))
        w = (2j * np.pi * self._k / self.length) ** order
        return np.real(ph @ (self._c * w))[inv].reshape(s.shape)


@dataclass
class CorrectorField:
    delta: float
    cutoff: Cutoff
    boundary: object
    traces: list
    under_resolved: bool = False

    def collar(self, s, alpha, component=0):
        """Corrector components and their analytic derivatives at collar points.

        Keys: v_tau, v_n, dtau_vtau, dn_vtau, dtau_vn, dn_vn, h.
        """
        s = np.asarray(s, dtype=float)
        alpha = np.asarray(alpha, dtype=float)
        g = self.traces[component]
        d, cut = self.delta, self.cutoff
        r = alpha / d
        xi, dxi, Xi = cut.xi(r), cut.dxi(r), cut.Xi(r)
        kappa = self.boundary.curvature(s)
        dkappa = self.boundary.curvature_derivative(s)
        h = 1.0 - alpha * kappa
        g0, g1, g2 = g(s), g(s, 1), g(s, 2)
        v_tau = g0 * xi
        v_n = -g1 * d * Xi / h
        return {
            "h": h,
            "v_tau": v_tau,
            "v_n": v_n,
            "dtau_vtau": g1 * xi,
            "dn_vtau": g0 * dxi / d,
            "dtau_vn": -(alpha * dkappa / h ** 2 * g1 + g2 / h) * d * Xi,
            "dn_vn": -g1 * (kappa / h ** 2 * d * Xi + xi / h),
        }

    def divergence_residual(self, s, alpha, component=0):
        """d_tau v_tau + d_n(h v_n) from the analytic derivative formulas."""
        c = self.collar(s, alpha, component)
        kappa = self.boundary.curvature(np.asarray(s, dtype=float))
        return c["dtau_vtau"] + c["h"] * c["dn_vn"] - kappa * c["v_n"]

    def on_grid(self, grid: ChannelGrid) -> VelocityField:
        """Assemble the corrector on the staggered channel grid (both walls)."""
        if not isinstance(self.boundary, ChannelBoundary):
            raise TypeError("grid assembly is only available for the channel")
        xu, yu = grid.u_coords()
        xv, yv = grid.v_coords()
        bottom, top = 0, (1 if len(self.traces) > 1 else 0)
        u = self._part(xu % 1.0, yu, bottom, "v_tau") - self._part((1.0 - xu) % 1.0, 1.0 - yu, top, "v_tau")
        v = self._part(xv % 1.0, yv, bottom, "v_n") - self._part((1.0 - xv) % 1.0, 1.0 - yv, top, "v_n")
        return VelocityField(u, v, grid, "free")

    def _part(self, s, alpha, component, key):
        out = np.zeros_like(alpha)
        m = alpha < self.delta
        if np.any(m):
            out[m] = self.collar(s[m], alpha[m], component)[key]
        return out

    def gradient_magnitude(self, s, alpha, component=0):
        c = self.collar(s, alpha, component)
        return np.sqrt(c["dtau_vtau"] ** 2 + c["dn_vtau"] ** 2 + c["dtau_vn"] ** 2 + c["dn_vn"] ** 2)


def build_corrector(trace, delta, boundary=None, cutoff=None) -> CorrectorField:
    """Corrector of width ``delta`` matching the tangential trace on each boundary component.

    ``trace`` is an array of samples of v^E_tau at s = m/n, or a sequence of
    such arrays (bottom, top) for the channel.
    """
    boundary = ChannelBoundary() if boundary is None else boundary
    if not 0 < delta <= boundary.collar_width:
        raise InvalidWidthError(f"corrector width {delta} outside (0, collar width {boundary.collar_width}]")
    arrs = [trace] if np.ndim(trace) == 1 else list(trace)
    series = [TraceSeries(a, boundary.length) for a in arrs]
    under = any(t.under_resolved for t in series)
    if under:
        warnings.warn("boundary trace is under-resolved (fewer than 4 samples per shortest wavelength)")
    return CorrectorField(delta=float(delta), cutoff=cutoff or build_cutoff(), boundary=boundary,
                          traces=series, under_resolved=under)


def kato_alpha(dissipation_a):
    """(2 nu int ||d_n u_tau||^2_{L2(strip)} dt)^(1/3)."""
    if dissipation_a < 0:
        raise ValueError(f"dissipation must be nonnegative, got {dissipation_a}")
    return float(dissipation_a) ** (1.0 / 3.0)


def select_delta(nu, delta0, dissipation_a):
    """delta = min(nu / alpha, delta0) with alpha = dissipation_a^(1/3); alpha = 0 gives delta0."""
    alpha = kato_alpha(dissipation_a)
    if alpha == 0:
        return float(delta0)
    return float(min(nu / alpha, delta0))


EXPECTED_EXPONENTS = {
    "v_l2": 0.5,
    "dt_v_l2": 0.5,
    "grad_v_l2": -0.5,
    "v_sup": 0.0,
    "grad_v_sup": -1.0,
    "rho_grad_v_sup": 0.0,
    "rho2_grad_v_sup": 1.0,
}


def corrector_norms(corr: CorrectorField, corr_dot=None, n_s=256, n_alpha=800):
    """L2 and sup functionals of a channel corrector by fine collar quadrature."""
    d = corr.delta
    s = np.arange(n_s) / n_s
    # Gauss-Legendre on the smooth pieces of the cutoff, scaled to [0, delta]
    cut = corr.cutoff
    breaks = np.array([0.0, cut.a, cut.b, cut.c, cut.d]) * d
    xg, wg = np.polynomial.legendre.leggauss(24)
    a_nodes, a_w = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        a_nodes.append(0.5 * (hi - lo) * xg + 0.5 * (hi + lo))
        a_w.append(0.5 * (hi - lo) * wg)
    a_nodes, a_w = np.concatenate(a_nodes), np.concatenate(a_w)
    a_fine = np.linspace(0.0, d, n_alpha)
    S, A = np.meshgrid(s, a_nodes, indexing="ij")
    Sf, Af = np.meshgrid(s, a_fine, indexing="ij")
    W = a_w[None, :] / n_s * corr.boundary.length
    out = {k: 0.0 for k in EXPECTED_EXPONENTS}
    sup = {"v_sup": 0.0, "grad_v_sup": 0.0, "rho_grad_v_sup": 0.0, "rho2_grad_v_sup": 0.0}
    for comp in range(len(corr.traces)):
        c = corr.collar(S, A, comp)
        h = c["h"]
        out["v_l2"] += np.sum(W * h * (c["v_tau"] ** 2 + c["v_n"] ** 2))
        out["grad_v_l2"] += np.sum(W * h * (c["dtau_vtau"] ** 2 + c["dn_vtau"] ** 2 + c["dtau_vn"] ** 2 + c["dn_vn"] ** 2))
        if corr_dot is not None:
            cd = corr_dot.collar(S, A, comp)
            out["dt_v_l2"] += np.sum(W * h * (cd["v_tau"] ** 2 + cd["v_n"] ** 2))
        cf = corr.collar(Sf, Af, comp)
        gm = corr.gradient_magnitude(Sf, Af, comp)
        sup["v_sup"] = max(sup["v_sup"], float(np.max(np.hypot(cf["v_tau"], cf["v_n"]))))
        sup["grad_v_sup"] = max(sup["grad_v_sup"], float(np.max(gm)))
        sup["rho_grad_v_sup"] = max(sup["rho_grad_v_sup"], float(np.max(Af * gm)))
        sup["rho2_grad_v_sup"] = max(sup["rho2_grad_v_sup"], float(np.max(Af ** 2 * gm)))
    for k in ("v_l2", "grad_v_l2", "dt_v_l2"):
        out[k] = float(np.sqrt(out[k]))
    out.update(sup)
    if corr_dot is None:
        out["dt_v_l2"] = None
    return out


def verify_scalings(trace, deltas, trace_rate=None, boundary=None):
    """Fit log-log slopes of the corrector functionals against delta.

    ``trace_rate`` (time derivative of the trace, e.g. a difference quotient
    of two Euler snapshots) enables the d_t v functional.  Returns a dict
    mapping functional name to {"slope", "r2", "expected", "values", "skipped"}.
    """
    deltas = np.asarray(sorted(deltas), dtype=float)
    if deltas.size < 5:
        raise ValueError("need at least 5 widths for the scaling fit")
    rows = []
    for d in deltas:
        corr = build_corrector(trace, d, boundary)
        corr_dot = build_corrector(trace_rate, d, boundary) if trace_rate is not None else None
        rows.append(corrector_norms(corr, corr_dot))
    report = {}
    for name, expected in EXPECTED_EXPONENTS.items():
        vals = [r[name] for r in rows]
        entry = {"expected": expected, "values": vals, "slope": None, "r2": None, "skipped": False}
        if any(v is None for v in vals) or not all(v > 0 for v in vals):
            entry["skipped"] = True
        else:
            slope, _, r2 = regress_slope(deltas, vals)
            entry["slope"], entry["r2"] = slope, r2
        report[name] = entry
    return report
