"""Time-grid bookkeeping shared by the three solvers."""

import csv

import numpy as np

from .errors import StepRejectedError
from .fields import max_speed

CFL_LIMIT = 0.5


def check_cfl(U, dt):
    g = U.grid
    h = min(g.dx, g.dy)
    speed = max_speed(U)
    cfl = speed * dt / h
    if cfl > CFL_LIMIT:
        raise StepRejectedError(cfl, CFL_LIMIT * h / speed)


def snapshot_schedule(n_steps, every):
    """Step indices to keep: 0, every, 2 every, ..., n_steps, each with its successor.

    Pairs (k, k+1) let one-step consistency checks run on stored snapshots.
    """
    if every is None or every <= 1:
        return np.arange(n_steps + 1)
    base = set(range(0, n_steps + 1, every)) | {n_steps}
    keep = base | {k + 1 for k in base if k < n_steps}
    return np.array(sorted(keep))


def cumulative_trapezoid(y, t):
    y = np.asarray(y, dtype=float)
    out = np.zeros_like(y)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(t))
    return out


def fmt(x):
    return format(float(x), ".17g")


def write_series_csv(filename, columns):
    """Write equal-length columns with 17 significant digits, fixed column order."""
    names = list(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    with open(filename, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow([fmt(x) for x in row])
