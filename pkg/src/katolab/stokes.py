"""Linear stochastic Stokes system dz = nu P lap z dt + dW, z(0) = 0, no-slip walls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .fields import NO_SLIP, VelocityField, helmholtz_solve, l2_norm_sq, leray_project, zeros
from .noise import NoiseBasis, NoisePath
from .stepping import snapshot_schedule


def step_stokes(z: VelocityField, nu: float, dt: float, dW: VelocityField) -> VelocityField:
    """Semi-implicit Euler-Maruyama: (I - nu dt lap) z* = z + dW, then project."""
    return leray_project(helmholtz_solve(z + dW, nu * dt))


@dataclass
class StokesRun:
    grid: object
    nu: float
    times: np.ndarray            # every step
    deviation: np.ndarray        # ||z(t_k) - W(t_k)||_{L2} at every step
    energy: np.ndarray           # ||z(t_k)||^2
    snapshot_steps: np.ndarray
    snapshots: list = field(repr=False)
    path_digest: str = ""
    seed: int = 0

    def series(self):
        return {"t": self.times, "energy": self.energy, "deviation": self.deviation}


def run_stokes(grid, nu, path: NoisePath, basis: NoiseBasis, snapshot_every=1) -> StokesRun:
    if basis.grid != grid:
        raise GridMismatchError("noise basis and solver grid differ")
    M = path.n_steps
    keep = set(snapshot_schedule(M, snapshot_every).tolist())
    z = zeros(grid, NO_SLIP)
    W = zeros(grid, NO_SLIP)
    dev = np.zeros(M + 1)
    energy = np.zeros(M + 1)
    snaps, steps = [z.copy()], [0]
    for k in range(M):
        dt = path.times[k + 1] - path.times[k]
        dW = basis.field(path.increments[k]) if len(basis) else zeros(grid)
        z = step_stokes(z, nu, dt, dW)
        W = W + dW
        dev[k + 1] = np.sqrt(l2_norm_sq(z - W))
        energy[k + 1] = l2_norm_sq(z)
        if k + 1 in keep:
            snaps.append(z.copy())
            steps.append(k + 1)
    return StokesRun(grid=grid, nu=nu, times=path.times.copy(), deviation=dev, energy=energy,
                     snapshot_steps=np.array(steps), snapshots=snaps, path_digest=path.digest(), seed=path.seed)


def stokes_deviation(run: StokesRun, W_snapshots=None) -> float:
    """sup_t ||z(t) - W(t)||_{L2}.

    With ``W_snapshots`` (fields at the run's snapshot steps) the deviation is
    recomputed against them instead of the series recorded during the run.
    """
    if W_snapshots is None:
        return float(np.max(run.deviation))
    if len(W_snapshots) != len(run.snapshots):
        raise GridMismatchError("W snapshots do not match the run's snapshot schedule")
    out = 0.0
    for z, W in zip(run.snapshots, W_snapshots):
        if W.grid != z.grid:
            raise GridMismatchError("W lives on a different grid than the Stokes run")
        out = max(out, np.sqrt(l2_norm_sq(z - W)))
    return float(out)
