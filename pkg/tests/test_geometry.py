import numpy as np
import pytest
from hypothesis import given, strategies as st

from katolab.errors import DegenerateCollarError, FrameUnavailableError, InvalidWidthError
from katolab.geometry import (BoundaryCurve, ChannelBoundary, ChannelGrid, StripSpec, curve_from_spec,
                              local_frame, strip_weights)


from functools import lru_cache


@lru_cache(maxsize=None)
def ellipse():
    return BoundaryCurve.from_fourier([0.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.6])


def test_grid_spacing():
    g = ChannelGrid(16, 32)
    assert g.dx == 1 / 16 and g.dy == 1 / 32
    assert g.u_shape == (32, 16) and g.v_shape == (33, 16)
    with pytest.raises(ValueError):
        ChannelGrid(4, 16)


def test_unit_circle_frame():
    f = local_frame(BoundaryCurve.circle(1.0), (0.9, 0.0))
    assert f.alpha == pytest.approx(0.1, abs=1e-12)
    assert f.h == pytest.approx(0.9, abs=1e-12)
    np.testing.assert_allclose(f.normal, [-1.0, 0.0], atol=1e-12)


def test_channel_bottom_frame():
    f = local_frame(ChannelBoundary(), (0.3, 0.02))
    assert f.alpha == pytest.approx(0.02) and f.h == 1.0
    np.testing.assert_array_equal(f.tau, [1.0, 0.0])
    np.testing.assert_array_equal(f.normal, [0.0, 1.0])


def test_channel_top_frame():
    f = local_frame(ChannelBoundary(), (0.3, 0.95))
    assert f.alpha == pytest.approx(0.05) and f.s == pytest.approx(0.7)
    np.testing.assert_array_equal(f.normal, [0.0, -1.0])


def test_circle_radius_two_metric_factor():
    c = BoundaryCurve.circle(2.0)
    f = local_frame(c, (0.0, 1.5))
    assert f.alpha == pytest.approx(0.5, abs=1e-12)
    assert f.h == pytest.approx(0.75, abs=1e-12)


def test_frame_errors():
    with pytest.raises(FrameUnavailableError):
        local_frame(BoundaryCurve.circle(1.0), (0.2, 0.0))
    with pytest.raises(FrameUnavailableError):
        local_frame(BoundaryCurve.circle(1.0), (1.1, 0.0))
    with pytest.raises(DegenerateCollarError):
        local_frame(ChannelBoundary(), (0.4, 0.5))
    with pytest.raises(FrameUnavailableError):
        local_frame(ChannelBoundary(), (0.4, 1.2))


def test_constant_speed_and_closure():
    c = ellipse()
    sp = np.abs(c.derivative(np.linspace(0, 1, 777, endpoint=False)))
    assert np.ptp(sp) / np.mean(sp) <= 1e-10
    assert abs(c.point(0.0) - c.point(1.0 - 1e-15)) < 1e-12
    # ellipse perimeter, Ramanujan's approximation is accurate to ~1e-10 here
    a, b = 1.0, 0.6
    hh = ((a - b) / (a + b)) ** 2
    assert c.length == pytest.approx(np.pi * (a + b) * (1 + 3 * hh / (10 + np.sqrt(4 - 3 * hh))), rel=1e-8)


def test_frame_vectors_orthonormal():
    c = ellipse()
    s = np.linspace(0, 1, 50, endpoint=False)
    t, n = c.tangent(s), c.normal(s)
    np.testing.assert_allclose(np.linalg.norm(t, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1, atol=1e-12)
    np.testing.assert_allclose(np.sum(t * n, axis=1), 0, atol=1e-12)


def test_circle_curvature_and_h():
    R = 1.5
    c = BoundaryCurve.circle(R, center=(0.3, -0.2))
    s = np.linspace(0, 1, 40, endpoint=False)
    np.testing.assert_allclose(c.curvature(s), 1 / R, atol=1e-10)
    alpha = np.linspace(0, R / 2 * 0.79, 40)
    np.testing.assert_allclose(c.metric_factor(s, alpha), 1 - alpha / R, atol=1e-8)


@given(s=st.floats(0.0, 0.999), frac=st.floats(0.01, 0.95))
def test_frame_round_trip(s, frac):
    c = ellipse()
    alpha = frac * c.collar_width
    x = c.collar_point(s, alpha)
    f = local_frame(c, x)
    ds = min(abs(f.s - s), 1 - abs(f.s - s))
    assert ds < 1e-8 and abs(f.alpha - alpha) < 1e-8
    assert f.h > 0.6


def test_channel_h_is_one():
    b = ChannelBoundary()
    assert np.all(b.metric_factor(np.linspace(0, 1, 5), np.linspace(0, 0.3, 5)) == 1.0)


def test_strip_weights_examples():
    g = ChannelGrid(32, 40)
    assert strip_weights(g, 0.5).sum() == pytest.approx(1.0, abs=1e-14)
    assert abs(strip_weights(g, 0.1).sum() - 0.2) <= 2 * g.dy
    w = strip_weights(g, 0.4 * g.dy)
    rows = np.flatnonzero(w.sum(axis=1))
    assert set(rows.tolist()) == {0, g.ny - 1}


@given(d1=st.floats(1e-4, 0.5), d2=st.floats(1e-4, 0.5))
def test_strip_weights_monotone(d1, d2):
    g = ChannelGrid(16, 24)
    lo, hi = sorted((d1, d2))
    assert np.all(strip_weights(g, lo) <= strip_weights(g, hi) + 1e-15)


@pytest.mark.parametrize("delta", [0.0, -0.1, 0.6])
def test_strip_weights_invalid(delta):
    with pytest.raises(InvalidWidthError):
        strip_weights(ChannelGrid(8, 8), delta)


def test_strip_spec():
    s = StripSpec(c_delta=1.0, theta=0.5)
    assert s.delta0(1e-4) == pytest.approx(1e-2)
    with pytest.raises(ValueError):
        StripSpec(theta=1.0)
    with pytest.raises(ValueError):
        StripSpec(c_delta=0)


def test_curve_from_spec():
    assert isinstance(curve_from_spec("channel"), ChannelBoundary)
    assert curve_from_spec("circle{2}").length == pytest.approx(4 * np.pi)
    c = curve_from_spec({"a1": [0, 1], "b1": [0, 0], "a2": [0, 0], "b2": [0, 1]})
    assert c.length == pytest.approx(2 * np.pi)
