import numpy as np
import pytest

from katolab.errors import StepRejectedError
from katolab.euler import energy_identity_residual_euler, run_euler, step_euler_pathwise
from katolab.fields import NO_PENETRATION, divergence, l2_norm_sq, zeros
from katolab.geometry import ChannelGrid
from katolab.initial import cellular, taylor_green
from katolab.noise import NoiseBasis, default_modes, refine_path, sample_path, uniform_times
from katolab.regression import regress_slope

G = ChannelGrid(32, 32)
TORUS = ChannelGrid(32, 32, periodic_y=True)


def _noise(grid, T, M, seed=0, modes=None):
    m = default_modes() if modes is None else modes
    return sample_path(m, uniform_times(T, M), seed), NoiseBasis(m, grid)


def _unsteady_torus():
    return taylor_green(TORUS, k=1) + 0.3 * taylor_green(TORUS, k=2) + 0.2 * taylor_green(TORUS, amplitude=1.0, k=3)


def test_rest_state():
    w = zeros(G, NO_PENETRATION)
    out = step_euler_pathwise(zeros(G, NO_PENETRATION), w, w, w, 0.01)
    assert np.all(out.flat() == 0)
    p, B = _noise(G, 0.25, 8, modes=[])
    r = run_euler(zeros(G), p, B)
    assert np.all(r.energy == 0)


def test_taylor_green_steady():
    # TG is a steady Euler flow; the discrete flow drifts only by spatial error
    p, B = _noise(TORUS, 0.25, 32, modes=[])
    r = run_euler(taylor_green(TORUS), p, B)
    drift = np.sqrt(l2_norm_sq(r.snapshots[-1] - r.snapshots[0]) / l2_norm_sq(r.snapshots[0]))
    assert drift < 1e-10


def test_rk4_time_order_on_torus():
    u0 = _unsteady_torus()
    T = 0.2
    ref = run_euler(u0, *_noise(TORUS, T, 512, modes=[])).snapshots[-1]
    Ms = [32, 64, 128]
    errs = [np.sqrt(l2_norm_sq(run_euler(u0, *_noise(TORUS, T, M, modes=[])).snapshots[-1] - ref)) for M in Ms]
    slope, _, _ = regress_slope([T / M for M in Ms], errs)
    assert slope > 3.5


def test_fixed_W_order():
    u0 = cellular(G, amplitude=0.5)
    p, B = _noise(G, 0.25, 32, seed=3, modes=default_modes(amplitude=2.0))
    ref = run_euler(u0, p, B, substeps=32).snapshots[-1]
    subs = [1, 2, 4]
    errs = [np.sqrt(l2_norm_sq(run_euler(u0, p, B, substeps=s).snapshots[-1] - ref)) for s in subs]
    slope, _, _ = regress_slope([1.0 / s for s in subs], errs)
    assert slope >= 1.8


def test_residual_zero_noise_small():
    p, B = _noise(G, 0.25, 64, modes=[])
    res = energy_identity_residual_euler(run_euler(cellular(G, amplitude=0.5), p, B))
    assert res[0] == 0.0
    assert np.max(np.abs(res)) < 1e-8


def test_residual_decreases_under_refinement():
    m = default_modes(amplitude=2.0)
    u0 = cellular(G, amplitude=0.5)
    rms = []
    paths = [sample_path(m, uniform_times(0.25, 32), s) for s in range(6)]
    B = NoiseBasis(m, G)
    for f in (1, 2, 4):
        r = [energy_identity_residual_euler(run_euler(u0, refine_path(p, f) if f > 1 else p, B))[-1]
             for p in paths]
        rms.append(np.sqrt(np.mean(np.square(r))))
    assert rms[0] > rms[1] > rms[2]


def test_walls_and_divergence():
    p, B = _noise(G, 0.25, 32, seed=2)
    r = run_euler(cellular(G, amplitude=0.5), p, B, snapshot_every=8)
    assert len(r.snapshots) == len(r.v_snapshots) == len(r.snapshot_steps)
    for u in r.snapshots:
        assert u.bc == NO_PENETRATION
        assert np.max(np.abs(u.v[0])) < 1e-12 and np.max(np.abs(u.v[-1])) < 1e-12
        assert np.max(np.abs(divergence(u))) < 1e-10


def test_cfl_rejection():
    p, B = _noise(G, 1.0, 8, modes=[])
    with pytest.raises(StepRejectedError):
        run_euler(cellular(G, amplitude=50.0), p, B)
