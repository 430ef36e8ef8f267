"""Stochastic Navier-Stokes with no-slip walls and the Ito energy identity."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError
from .fields import (NO_SLIP, VelocityField, advection, dirichlet_form, helmholtz_solve, inner,
                     l2_norm_sq, leray_project, zeros)
from .noise import NoiseBasis, NoisePath
from .stepping import check_cfl, cumulative_trapezoid, snapshot_schedule


def step_ns(u: VelocityField, nu: float, dt: float, dW: VelocityField) -> VelocityField:
    """Explicit skew-symmetric advection, additive noise, implicit diffusion, projection."""
    check_cfl(u, dt)
    rhs = u + dt * advection(u, u) + dW
    return leray_project(helmholtz_solve(rhs, nu * dt))


@dataclass
class NSRun:
    grid: object
    nu: float
    times: np.ndarray        # every step
    energy: np.ndarray       # ||u||^2
    dissipation: np.ndarray  # discrete ||grad u||^2 matching the viscous step
    ito: np.ndarray          # sum_{m<k} <u(t_m), dW_m>
    trace_q0: float
    snapshot_steps: np.ndarray
    snapshots: list = field(repr=False)
    path_digest: str = ""
    seed: int = 0

    def series(self):
        return {"t": self.times, "energy": self.energy, "enstrophy": self.dissipation,
                "ito": self.ito, "residual": energy_identity_residual_ns(self)}


def run_ns(u0: VelocityField, nu, path: NoisePath, basis: NoiseBasis, snapshot_every=1) -> NSRun:
    grid = u0.grid
    if basis.grid != grid:
        raise GridMismatchError("noise basis and solver grid differ")
    M = path.n_steps
    keep = set(snapshot_schedule(M, snapshot_every).tolist())
    u = u0.copy(bc=NO_SLIP)
    energy = np.zeros(M + 1)
    diss = np.zeros(M + 1)
    ito = np.zeros(M + 1)
    energy[0] = l2_norm_sq(u)
    diss[0] = dirichlet_form(u)
    snaps, steps = [u.copy()], [0]
    for k in range(M):
        dt = path.times[k + 1] - path.times[k]
        dW = basis.field(path.increments[k]) if len(basis) else zeros(grid)
        ito[k + 1] = ito[k] + inner(u, dW)
        u = step_ns(u, nu, dt, dW)
        energy[k + 1] = l2_norm_sq(u)
        diss[k + 1] = dirichlet_form(u)
        if k + 1 in keep:
            snaps.append(u.copy())
            steps.append(k + 1)
    return NSRun(grid=grid, nu=nu, times=path.times.copy(), energy=energy, dissipation=diss, ito=ito,
                 trace_q0=basis.trace_q0(), snapshot_steps=np.array(steps), snapshots=snaps,
                 path_digest=path.digest(), seed=path.seed)


def energy_identity_residual_ns(run: NSRun) -> np.ndarray:
    """||u(t)||^2 + 2 nu int ||grad u||^2 - ||u0||^2 - t tr Q0 - 2 sum <u(t_k), dW_k>."""
    t = run.times
    return (run.energy + 2.0 * run.nu * cumulative_trapezoid(run.dissipation, t)
            - run.energy[0] - t * run.trace_q0 - 2.0 * run.ito)
