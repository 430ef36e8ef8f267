"""Finite-dimensional Q-Wiener forcing with interior-supported modes.

W(t) = sum_j sqrt(lam_j) sigma_j beta_j(t), where sigma_j is the discrete
curl of a compactly supported bump streamfunction and beta_j are independent
Brownian motions.  Paths store increments on a master time grid so that
Brownian-bridge refinement keeps the coarse nodes exactly.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .errors import OffGridTimeError
from .fields import VelocityField, from_streamfunction, inner
from .geometry import ChannelGrid


def bump(r):
    """exp(-1/(1 - r^2)) on |r| < 1, zero elsewhere."""
    r = np.asarray(r, dtype=float)
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


@dataclass(frozen=True)
class NoiseMode:
    center: tuple
    width: float
    lam: float
    amplitude: float = 1.0

    def streamfunction(self, x, y):
        dxp = (x - self.center[0] + 0.5) % 1.0 - 0.5
        return self.amplitude * self.width * bump(dxp / self.width) * bump((y - self.center[1]) / self.width)

    def distance_to_wall(self):
        return min(self.center[1] - self.width, 1.0 - self.center[1] - self.width)


def default_modes(n=6, amplitude=1.0, width=0.2, margin=0.05):
    """Six bumps on a 3 x 2 lattice with lam_j = 2^-j (j = 1..n)."""
    # second row shifted in x to break the mirror symmetry of the lattice
    lattice = [(x + 0.08 * row, y) for row, y in enumerate((0.35, 0.65)) for x in (1 / 6, 1 / 2, 5 / 6)]
    modes = []
    for j in range(n):
        c = lattice[j % len(lattice)]
        w = width * (1.0 - 0.1 * (j // len(lattice)))
        modes.append(NoiseMode(center=c, width=w, lam=2.0 ** -(j + 1), amplitude=amplitude))
    for m in modes:
        if m.distance_to_wall() < 2 * margin - 1e-12:
            raise ValueError(f"mode {m} reaches into the wall margin")
    return modes


class NoiseBasis:
    """Modes realized on a grid: sqrt(lam_j) * sigma_j as stacked arrays."""

    def __init__(self, modes, grid: ChannelGrid):
        self.modes = list(modes)
        self.grid = grid
        n = len(self.modes)
        self.U = np.zeros((n,) + grid.u_shape)
        self.V = np.zeros((n,) + grid.v_shape)
        xc, yc = grid.corner_coords()
        self._norms = np.zeros(n)
        for j, m in enumerate(self.modes):
            s = from_streamfunction(grid, m.streamfunction(xc, yc))
            self._norms[j] = inner(s, s)
            self.U[j] = np.sqrt(m.lam) * s.u
            self.V[j] = np.sqrt(m.lam) * s.v

    def __len__(self):
        return len(self.modes)

    def mode_field(self, j) -> VelocityField:
        m = self.modes[j]
        return VelocityField(self.U[j] / np.sqrt(m.lam), self.V[j] / np.sqrt(m.lam), self.grid)

    def field(self, coeffs) -> VelocityField:
        """sum_j coeffs[j] * sqrt(lam_j) * sigma_j."""
        coeffs = np.asarray(coeffs, dtype=float)
        if len(self) == 0:
            return VelocityField(np.zeros(self.grid.u_shape), np.zeros(self.grid.v_shape), self.grid)
        return VelocityField(np.tensordot(coeffs, self.U, axes=1), np.tensordot(coeffs, self.V, axes=1), self.grid)

    def trace_q0(self):
        return float(sum(m.lam * nsq for m, nsq in zip(self.modes, self._norms)))


def trace_Q0(modes, grid=None):
    """sum_j lam_j ||sigma_j||^2 by grid quadrature.

    ``modes`` is a NoiseBasis, or a mode list together with a grid.
    """
    if isinstance(modes, NoiseBasis):
        return modes.trace_q0()
    if len(modes) == 0:
        return 0.0
    return NoiseBasis(modes, grid).trace_q0()


@dataclass(frozen=True)
class NoisePath:
    times: np.ndarray
    increments: np.ndarray  # (M, N)
    seed: int
    refinement: int = 1

    @property
    def n_steps(self):
        return self.increments.shape[0]

    @property
    def n_modes(self):
        return self.increments.shape[1]

    @property
    def T(self):
        return float(self.times[-1])

    def values(self):
        """beta_j(t_k) for k = 0..M: shape (M+1, N)."""
        out = np.zeros((self.n_steps + 1, self.n_modes))
        np.cumsum(self.increments, axis=0, out=out[1:])
        return out

    def index_of(self, t):
        k = int(np.searchsorted(self.times, t - 1e-12 * max(1.0, abs(t))))
        if k >= len(self.times) or abs(self.times[k] - t) > 1e-12 * max(1.0, abs(t)):
            raise OffGridTimeError(f"t={t} is not a node of the noise grid")
        return k

    def digest(self):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.times, dtype="<f8").tobytes())
        h.update(np.ascontiguousarray(self.increments, dtype="<f8").tobytes())
        return h.hexdigest()


def uniform_times(T, M):
    return np.linspace(0.0, T, M + 1)


def sample_path(modes, times, seed) -> NoisePath:
    """Independent N(0, t_{k+1} - t_k) increments for each mode, deterministic in seed."""
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("time grid needs at least one step")
    dt = np.diff(times)
    if times[0] != 0.0 or np.any(dt <= 0):
        raise ValueError("time grid must start at 0 and be strictly increasing")
    n = len(modes)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((dt.size, n))
    return NoisePath(times=times, increments=z * np.sqrt(dt)[:, None], seed=int(seed))


def refine_path(path: NoisePath, factor) -> NoisePath:
    """Insert factor-1 Brownian-bridge points into every interval.

    Coarse-node values are unchanged; refining by 2 twice and by 4 once agree
    in distribution.
    """
    if isinstance(factor, bool) or not isinstance(factor, (int, np.integer)) or factor < 2:
        raise ValueError(f"refinement factor must be an integer >= 2, got {factor!r}")
    f = int(factor)
    ss = np.random.SeedSequence(entropy=path.seed, spawn_key=(path.refinement, f))
    rng = np.random.default_rng(ss)
    M, N = path.increments.shape
    t0 = path.times[:-1]
    dt = np.diff(path.times)
    fine_t = (t0[:, None] + dt[:, None] * np.arange(f)[None, :] / f).ravel()
    fine_t = np.append(fine_t, path.times[-1])
    z = rng.standard_normal((M, f - 1, N))
    # bridge from 0 at the left node to increment D at the right node
    D = path.increments
    prev = np.zeros((M, N))
    pieces = np.empty((M, f, N))
    h = dt / f
    for m in range(1, f):
        remaining = (f - m + 1) * h  # time from previous point to right node
        mean = prev + (h / remaining)[:, None] * (D - prev)
        var = h * (remaining - h) / remaining
        cur = mean + np.sqrt(var)[:, None] * z[:, m - 1]
        pieces[:, m - 1] = cur - prev
        prev = cur
    pieces[:, f - 1] = D - prev
    return NoisePath(times=fine_t, increments=pieces.reshape(M * f, N), seed=path.seed,
                     refinement=path.refinement * f)


def restrict_path(path: NoisePath, factor) -> NoisePath:
    """Sum increments over blocks of ``factor`` steps (inverse of refinement on coarse nodes)."""
    f = int(factor)
    M = path.n_steps
    if M % f:
        raise ValueError("step count not divisible by factor")
    inc = path.increments.reshape(M // f, f, -1).sum(axis=1)
    return NoisePath(times=path.times[::f].copy(), increments=inc, seed=path.seed,
                     refinement=max(1, path.refinement // f))


def evaluate_W(path: NoisePath, basis: NoiseBasis, t) -> VelocityField:
    """W(t_k) = sum_j sqrt(lam_j) sigma_j sum_{m<k} dbeta_j^m at a grid time t_k."""
    k = path.index_of(t)
    return basis.field(path.increments[:k].sum(axis=0) if path.n_modes else [])


def increment_field(path: NoisePath, basis: NoiseBasis, k) -> VelocityField:
    return basis.field(path.increments[k] if path.n_modes else [])


# -- persistence: little-endian, header then times and increments ------------

_MAGIC = b"KLNP"
_HEADER = struct.Struct("<4sIqQQQ")


def save_path(filename, path: NoisePath):
    with open(filename, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, path.seed, path.refinement, path.n_steps, path.n_modes))
        fh.write(np.ascontiguousarray(path.times, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(path.increments, dtype="<f8").tobytes())


def load_path(filename) -> NoisePath:
    with open(filename, "rb") as fh:
        magic, version, seed, refinement, M, N = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _MAGIC or version != 1:
            raise ValueError(f"{filename} is not a noise path file")
        times = np.frombuffer(fh.read(8 * (M + 1)), dtype="<f8").astype(float)
        inc = np.frombuffer(fh.read(8 * M * N), dtype="<f8").astype(float).reshape(M, N)
    return NoisePath(times=times, increments=inc, seed=int(seed), refinement=int(refinement))
