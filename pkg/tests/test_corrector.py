import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from katolab.corrector import (EXPECTED_EXPONENTS, TraceSeries, build_corrector, build_cutoff, corrector_norms,
                               kato_alpha, select_delta, verify_scalings)
from katolab.errors import InvalidWidthError
from katolab.fields import wall_trace
from katolab.geometry import BoundaryCurve, ChannelGrid

CUT = build_cutoff()
N = 64
S = np.arange(N) / N


def _generic_trace():
    return 0.7 * np.sin(2 * np.pi * S) + 0.3 * np.cos(4 * np.pi * S) + 0.1


def _ellipse():
    return BoundaryCurve.from_fourier([0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.6])


# -- cutoff -------------------------------------------------------------------

def test_cutoff_examples():
    assert CUT.xi(0.0) == 1.0
    assert CUT.xi(0.05) == 1.0
    assert CUT.xi(1.2) == 0.0
    assert abs(CUT.Xi(1.2)) < 1e-15
    assert CUT.Xi(0.15) == pytest.approx(0.15, abs=1e-15)


def test_cutoff_invariants():
    r = np.linspace(0, 1.5, 30001)
    x = CUT.xi(r)
    assert x.min() >= -1.0 and x.max() <= 1.0
    assert np.all(x[r >= 1.0] == 0)
    assert CUT.ratio <= 1.0
    pts = [0, CUT.a, CUT.b, CUT.c, CUT.d, 1.0]
    total = sum(integrate.quad(lambda t: float(CUT.xi(t)), lo, hi, epsabs=1e-14, limit=200)[0]
                for lo, hi in zip(pts[:-1], pts[1:]))
    assert abs(total) < 1e-12
    # closed-form primitive against quadrature
    for q in (0.1, 0.25, 0.37, 0.6, 0.9, 1.0):
        ref = integrate.quad(lambda t: float(CUT.xi(t)), 0, q, points=pts[1:-1], epsabs=1e-14)[0]
        assert CUT.Xi(q) == pytest.approx(ref, abs=1e-12)


def test_cutoff_c2():
    # values and first two derivatives are continuous: their jumps shrink with eps
    for b in (CUT.a, CUT.b, CUT.c, CUT.d):
        for f in (CUT.xi, CUT.dxi, CUT.d2xi):
            jumps = [abs(float(f(b + e)) - float(f(b - e))) for e in (1e-6, 1e-8)]
            assert jumps[1] < 0.05 * jumps[0] + 1e-12
    # analytic derivatives against differences
    r = np.linspace(0.01, 0.99, 400)
    r = r[np.min(np.abs(r[:, None] - np.array([CUT.a, CUT.b, CUT.c, CUT.d])), axis=1) > 1e-5]
    h = 1e-6
    np.testing.assert_allclose(CUT.dxi(r), (CUT.xi(r + h) - CUT.xi(r - h)) / (2 * h), atol=1e-6)
    np.testing.assert_allclose(CUT.d2xi(r), (CUT.dxi(r + h) - CUT.dxi(r - h)) / (2 * h), atol=1e-5)


# -- trace interpolation --------------------------------------------------------

def test_trace_series_derivatives():
    g = TraceSeries(np.sin(2 * np.pi * S))
    s = np.linspace(0, 1, 37)
    np.testing.assert_allclose(g(s), np.sin(2 * np.pi * s), atol=1e-13)
    np.testing.assert_allclose(g(s, 1), 2 * np.pi * np.cos(2 * np.pi * s), atol=1e-11)
    np.testing.assert_allclose(g(s, 2), -(2 * np.pi) ** 2 * np.sin(2 * np.pi * s), atol=1e-9)
    assert not g.under_resolved


def test_under_resolved_flag():
    coarse = np.sin(2 * np.pi * 5 * np.arange(12) / 12)
    with pytest.warns(UserWarning):
        corr = build_corrector(coarse, 0.1)
    assert corr.under_resolved


# -- construction ----------------------------------------------------------------

def test_sin_trace_example():
    corr = build_corrector(np.sin(2 * np.pi * S), 0.1)
    s, a = np.meshgrid(np.linspace(0, 1, 23), np.linspace(0, 0.2, 41), indexing="ij")
    c = corr.collar(s, a)
    expect = -2 * np.pi * np.cos(2 * np.pi * s) * 0.1 * CUT.Xi(a / 0.1)
    np.testing.assert_allclose(c["v_n"], expect, atol=1e-12)
    out = a >= 0.1
    assert np.max(np.abs(c["v_tau"][out])) == 0.0
    assert np.max(np.abs(c["v_n"][out])) < 1e-15


def test_zero_trace():
    corr = build_corrector(np.zeros(N), 0.1)
    U = corr.on_grid(ChannelGrid(32, 32))
    assert np.all(U.flat() == 0)
    rep = verify_scalings(np.zeros(N), [0.2, 0.1, 0.05, 0.025, 0.0125])
    assert all(e["skipped"] for e in rep.values())
    assert all(v == 0 for e in rep.values() for v in e["values"] if v is not None)


def test_constant_trace_tangential_parts_vanish():
    corr = build_corrector(np.full(N, 0.4), 0.1)
    s, a = np.meshgrid(S, np.linspace(0, 0.1, 30), indexing="ij")
    c = corr.collar(s, a)
    for k in ("v_n", "dtau_vtau", "dtau_vn", "dn_vn"):
        assert np.max(np.abs(c[k])) < 1e-13


@pytest.mark.parametrize("boundary", [None, "circle", "ellipse"])
def test_derivative_formulas_against_differences(boundary):
    curve = {None: None, "circle": BoundaryCurve.circle(1.0), "ellipse": _ellipse()}[boundary]
    L = 1.0 if curve is None else curve.length
    delta = 0.08
    corr = build_corrector(_generic_trace(), delta, curve)
    s = np.linspace(0.03, 0.97, 17)
    a = np.linspace(0.005, 0.9 * delta, 13)
    s, a = np.meshgrid(s, a, indexing="ij")
    c = corr.collar(s, a)
    eps_s, eps_a = 1e-4, 1e-4 * delta
    p, m = corr.collar(s + eps_s, a), corr.collar(s - eps_s, a)
    for key in ("vtau", "vn"):
        v = "v_tau" if key == "vtau" else "v_n"
        fd = (p[v] - m[v]) / (2 * eps_s * L)
        np.testing.assert_allclose(c["dtau_" + key], fd, atol=1e-5 * max(1, np.max(np.abs(fd))))
    p, m = corr.collar(s, a + eps_a), corr.collar(s, a - eps_a)
    for key in ("vtau", "vn"):
        v = "v_tau" if key == "vtau" else "v_n"
        fd = (p[v] - m[v]) / (2 * eps_a)
        np.testing.assert_allclose(c["dn_" + key], fd, rtol=1e-5, atol=1e-5 * np.max(np.abs(fd)))


@pytest.mark.parametrize("boundary", [None, "circle", "ellipse"])
def test_collar_divergence_identity(boundary):
    curve = {None: None, "circle": BoundaryCurve.circle(1.0), "ellipse": _ellipse()}[boundary]
    for delta in (0.2, 0.05, 0.01):
        if curve is not None and delta > curve.collar_width:
            continue
        corr = build_corrector(_generic_trace(), delta, curve)
        s, a = np.meshgrid(np.linspace(0, 1, 101), np.linspace(0, 1.2 * delta, 301), indexing="ij")
        assert np.max(np.abs(corr.divergence_residual(s, a))) <= 1e-8


def test_trace_match_on_grid():
    g = ChannelGrid(64, 64)
    bottom = np.sin(2 * np.pi * S)
    top = 0.5 * np.cos(2 * np.pi * S)
    corr = build_corrector([bottom, top], 0.3)
    U = corr.on_grid(g)
    b, t = wall_trace(U)
    xu = np.arange(64) / 64
    # the wall trace interpolates two face rows, so agreement is second order in dy
    assert np.max(np.abs(b - np.sin(2 * np.pi * xu))) < 5 * g.dy ** 2 * (2 * np.pi) ** 2
    assert np.max(np.abs(t - 0.5 * np.cos(2 * np.pi * xu))) < 5 * g.dy ** 2 * (2 * np.pi) ** 2


def test_support_on_grid():
    g = ChannelGrid(64, 64)
    corr = build_corrector(_generic_trace(), 0.1)
    U = corr.on_grid(g)
    xu, yu = g.u_coords()
    xv, yv = g.v_coords()
    far_u = (yu >= 0.1) & (yu <= 0.9)
    far_v = (yv >= 0.1) & (yv <= 0.9)
    assert np.max(np.abs(U.u[far_u])) == 0.0
    assert np.max(np.abs(U.v[far_v])) < 1e-15


@given(a=st.floats(-5, 5, allow_nan=False), seed=st.integers(0, 1000))
def test_linearity(a, seed):
    tr = np.random.default_rng(seed).standard_normal(8)
    trace = np.fft.irfft(np.fft.rfft(tr), N) * N / 8   # smooth, band-limited
    s, al = np.meshgrid(np.linspace(0, 1, 9), np.linspace(0, 0.1, 7), indexing="ij")
    c1 = build_corrector(trace, 0.1).collar(s, al)
    c2 = build_corrector(2 * trace, 0.1).collar(s, al)
    np.testing.assert_array_equal(c2["v_tau"], 2 * c1["v_tau"])
    np.testing.assert_array_equal(c2["v_n"], 2 * c1["v_n"])
    ca = build_corrector(a * trace, 0.1).collar(s, al)
    np.testing.assert_allclose(ca["v_tau"], a * c1["v_tau"], rtol=1e-12, atol=1e-14)


def test_width_errors():
    with pytest.raises(InvalidWidthError):
        build_corrector(_generic_trace(), 0.5)
    with pytest.raises(InvalidWidthError):
        build_corrector(_generic_trace(), 0.0)
    with pytest.raises(InvalidWidthError):
        build_corrector(_generic_trace(), 0.3, BoundaryCurve.circle(0.5))


# -- scalings -----------------------------------------------------------------

def test_scalings_generic_trace():
    deltas = [0.2, 0.1, 0.05, 0.025, 0.0125]
    rep = verify_scalings(_generic_trace(), deltas, trace_rate=np.cos(2 * np.pi * S))
    assert set(rep) == set(EXPECTED_EXPONENTS)
    for name, e in rep.items():
        assert not e["skipped"]
        assert abs(e["slope"] - e["expected"]) <= 0.1, name


def test_scalings_without_rate_skip_dt():
    rep = verify_scalings(_generic_trace(), [0.2, 0.1, 0.05, 0.025, 0.0125])
    assert rep["dt_v_l2"]["skipped"] and rep["dt_v_l2"]["slope"] is None
    with pytest.raises(ValueError):
        verify_scalings(_generic_trace(), [0.2, 0.1, 0.05])


def test_norms_of_constant_trace():
    corr = build_corrector(np.ones(N), 0.1)
    n = corrector_norms(corr)
    # v = (xi, 0): ||v||^2 = delta * int xi^2, sup |v| = 1
    ref = integrate.quad(lambda r: float(CUT.xi(r)) ** 2, 0, 1, points=[CUT.a, CUT.b, CUT.c, CUT.d])[0]
    assert n["v_l2"] == pytest.approx(np.sqrt(0.1 * ref), rel=1e-10)
    assert n["v_sup"] == pytest.approx(1.0, abs=1e-12)


# -- width selection ------------------------------------------------------------

def test_select_delta_examples():
    assert select_delta(1e-3, 0.05, 0.0) == 0.05
    assert select_delta(1e-3, 0.05, 2 * 1e-3 * 0.5) == pytest.approx(0.01, rel=1e-12)
    assert kato_alpha(2 * 1e-3 * 0.5) == pytest.approx(0.1, rel=1e-12)
    assert select_delta(1e-3, 0.05, 1e-9) == 0.05
    with pytest.raises(ValueError):
        select_delta(1e-3, 0.05, -1e-12)


def test_kato_bound_vanishes_on_synthetic_sequence():
    vals = []
    for k in range(1, 12):
        nu = 10.0 ** -k
        d0 = np.sqrt(nu)
        diss = nu ** 0.5
        delta = select_delta(nu, d0, diss)
        vals.append(max(kato_alpha(diss), nu / delta))
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < 1e-1 * vals[0]
