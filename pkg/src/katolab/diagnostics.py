"""Functionals of coupled NS / Euler / Stokes runs.

Dissipations are integrated in time by the trapezoidal rule over the stored
snapshots, so they are only as fine as the snapshot cadence.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .corrector import select_delta
from .errors import CouplingViolationError, GridMismatchError
from .fields import (VelocityField, advection, grad_norm_sq, helmholtz_solve, l2_norm_sq, leray_project,
                     strip_derivative_norm_sq)
from .geometry import StripSpec, strip_weights
from .stepping import cumulative_trapezoid

R1_NOTE = ("R1 uses unit constants and the L2 norm of W - z in place of the H4 norm; "
           "only its decay in nu is meaningful")

DEFAULT_EPSILONS = (0.02, 0.05, 0.1, 0.2)


@dataclass
class DiagnosticsRecord:
    nu: float
    delta0: float
    seed: int
    times: np.ndarray
    D_global: np.ndarray
    D_a: np.ndarray
    D_b: np.ndarray
    D_c: np.ndarray
    E: np.ndarray
    sup_E: float
    alpha: float
    delta: float
    bridge_rel: float = 0.0      # max over snapshots of the d_n u_n vs d_tau u_tau strip mismatch
    R1: float = float("nan")
    R2: float = float("nan")
    R3_int: float = float("nan")
    splitting: float = float("nan")
    stokes_dev: float = float("nan")
    extra: dict = field(default_factory=dict)

    @property
    def kato_bound(self):
        """max{alpha, nu / delta0}, the quantity bounding int R3."""
        return max(self.alpha, self.nu / self.delta0)

    def row(self):
        """Scalar summary in a fixed column order."""
        return {
            "nu": self.nu, "seed": self.seed, "delta0": self.delta0,
            "sup_E": self.sup_E, "D_global": self.D_global[-1], "D_a": self.D_a[-1],
            "D_b": self.D_b[-1], "D_c": self.D_c[-1], "alpha": self.alpha, "delta": self.delta,
            "kato_bound": self.kato_bound, "R1": self.R1, "R2": self.R2, "R3_int": self.R3_int,
            "splitting": self.splitting, "stokes_dev": self.stokes_dev, "bridge_rel": self.bridge_rel,
        }

    def series(self):
        return {"t": self.times, "D_global": self.D_global, "D_a": self.D_a, "D_b": self.D_b,
                "D_c": self.D_c, "E": self.E}


ROW_COLUMNS = list(DiagnosticsRecord(0, 1, 0, *([np.zeros(1)] * 6), 0, 0, 0).row())


def check_coupling(*runs):
    """All runs must share grid and noise path (compared by digest of the increments)."""
    ref = runs[0]
    for r in runs[1:]:
        if r.path_digest != ref.path_digest or getattr(r, "seed", None) != getattr(ref, "seed", None):
            raise CouplingViolationError(
                f"runs were driven by different noise paths (seed {ref.seed} vs {r.seed})")
        if r.grid != ref.grid:
            raise GridMismatchError("runs live on different grids")
        if len(r.times) != len(ref.times) or not np.array_equal(r.times, ref.times):
            raise GridMismatchError("runs use different time grids")


def _matched(a, b):
    """Indices into a.snapshots and b.snapshots at the common snapshot steps."""
    common = np.intersect1d(a.snapshot_steps, b.snapshot_steps)
    if common.size == 0:
        raise GridMismatchError("runs have no snapshot step in common")
    ia = {int(k): i for i, k in enumerate(a.snapshot_steps)}
    ib = {int(k): i for i, k in enumerate(b.snapshot_steps)}
    return common, [ia[int(k)] for k in common], [ib[int(k)] for k in common]


def strip_bridge_mismatch(U: VelocityField, delta) -> float:
    """Relative gap between the strip integrals of (d_tau u_tau)^2 and (d_n u_n)^2."""
    w = strip_weights(U.grid, delta)
    a = strip_derivative_norm_sq(U, delta, "tau_tau", w)
    b = strip_derivative_norm_sq(U, delta, "n_n", w)
    scale = max(a, b)
    return 0.0 if scale == 0 else abs(a - b) / scale


def kato_functionals(ns_run, euler_run, strip: StripSpec) -> DiagnosticsRecord:
    """Global and strip dissipations of u^nu and the L2 gap to u^E at matched snapshots."""
    check_coupling(ns_run, euler_run)
    nu = float(ns_run.nu)
    d0 = strip.delta0(nu) if nu > 0 else 0.5
    steps, i_ns, i_e = _matched(ns_run, euler_run)
    t = ns_run.times[steps]
    w0 = strip_weights(ns_run.grid, d0, strip.walls)
    g, a, b, c, E, bridge = [], [], [], [], [], 0.0
    for i, j in zip(i_ns, i_e):
        U = ns_run.snapshots[i]
        g.append(grad_norm_sq(U))
        a.append(strip_derivative_norm_sq(U, d0, "n_tau", w0))
        b.append(strip_derivative_norm_sq(U, d0, "n_n", w0))
        c.append(strip_derivative_norm_sq(U, d0, "tau_tau", w0))
        scale = max(b[-1], c[-1])
        if scale > 0:
            bridge = max(bridge, abs(b[-1] - c[-1]) / scale)
        diff = U - euler_run.snapshots[j].copy(bc=U.bc)
        E.append(np.sqrt(l2_norm_sq(diff)))
    D = {k: nu * cumulative_trapezoid(np.array(v), t) for k, v in
         (("g", g), ("a", a), ("b", b), ("c", c))}
    E = np.array(E)
    dissipation_a = 2.0 * D["a"][-1]
    alpha = float(dissipation_a ** (1.0 / 3.0))
    return DiagnosticsRecord(nu=nu, delta0=d0, seed=int(ns_run.seed), times=t, D_global=D["g"], D_a=D["a"],
                             D_b=D["b"], D_c=D["c"], E=E, sup_E=float(E.max()), alpha=alpha,
                             delta=select_delta(nu, d0, dissipation_a) if nu > 0 else d0,
                             bridge_rel=float(bridge))


def gronwall_remainders(ns_run, euler_run, stokes_run, corrector, delta, delta0):
    """(R1, R2, int R3) with unit constants.

    R1 = delta + delta^2 nu + nu + nu/delta + sup_t ||W - z||^2_{L2},
    R2 = nu^2 sup_t ||u||^2, int R3 = (delta^2 / nu) int ||d_n u_tau||^2_{L2(strip delta)} dt.
    """
    check_coupling(ns_run, euler_run, stokes_run)
    nu = float(ns_run.nu)
    if nu <= 0:
        raise ValueError("remainders need nu > 0")
    if corrector is not None and abs(corrector.delta - delta) > 1e-14 * max(1.0, delta):
        raise ValueError(f"corrector width {corrector.delta} differs from delta {delta}")
    w0 = strip_weights(ns_run.grid, delta0)
    t = ns_run.times[ns_run.snapshot_steps]
    a0 = [strip_derivative_norm_sq(U, delta0, "n_tau", w0) for U in ns_run.snapshots]
    expected = select_delta(nu, delta0, 2.0 * nu * cumulative_trapezoid(np.array(a0), t)[-1])
    if abs(expected - delta) > 1e-12 * max(1.0, expected):
        warnings.warn(f"delta={delta} is not the selected width {expected}; remainders computed anyway")
    dev = float(np.max(stokes_run.deviation))
    R1 = delta + delta ** 2 * nu + nu + nu / delta + dev ** 2
    R2 = nu ** 2 * float(np.max(ns_run.energy))
    w = strip_weights(ns_run.grid, delta)
    a = [strip_derivative_norm_sq(U, delta, "n_tau", w) for U in ns_run.snapshots]
    R3 = delta ** 2 / nu * float(cumulative_trapezoid(np.array(a), t)[-1])
    return float(R1), float(R2), float(R3)


def splitting_residual(ns_run, stokes_run) -> float:
    """sup over stored step pairs of ||v(t+dt) - P H^{-1}(v(t) + dt N(u(t)))||, v = u - z.

    N is the advection term evaluated at u, H = I - nu dt lap.  Pairs (k, k+1)
    must both be stored in each run.
    """
    check_coupling(ns_run, stokes_run)
    if ns_run.nu != stokes_run.nu:
        raise ValueError("NS and Stokes runs use different viscosities")
    steps, i_ns, i_st = _matched(ns_run, stokes_run)
    at = dict(zip(steps.tolist(), zip(i_ns, i_st)))
    nu = ns_run.nu
    out, n_pairs = 0.0, 0
    for k in steps.tolist():
        if k + 1 not in at:
            continue
        (a, b), (a1, b1) = at[k], at[k + 1]
        u, z = ns_run.snapshots[a], stokes_run.snapshots[b]
        v = u - z
        v_next = ns_run.snapshots[a1] - stokes_run.snapshots[b1]
        dt = ns_run.times[k + 1] - ns_run.times[k]
        pred = leray_project(helmholtz_solve(v + dt * advection(u, u), nu * dt))
        out = max(out, np.sqrt(l2_norm_sq(v_next - pred)))
        n_pairs += 1
    if n_pairs == 0:
        raise GridMismatchError("no consecutive snapshot pair available")
    return float(out)


@dataclass(frozen=True)
class ProbabilityEstimate:
    p: float
    lower: float
    upper: float
    n: int
    k: int


def convergence_in_probability(errors, eps, level=0.95) -> ProbabilityEstimate:
    """Fraction of paths with sup-error above eps and a binomial confidence interval.

    Clopper-Pearson interval in general; at k = 0 (k = n) the one-sided
    rule-of-three bound 3/n (1 - 3/n) is used.
    """
    e = np.asarray(errors, dtype=float).ravel()
    n = e.size
    if n == 0:
        raise ValueError("empty ensemble")
    if n < 20:
        warnings.warn(f"only {n} ensemble members; the interval is wide")
    k = int(np.sum(e > eps))
    a = 1.0 - level
    if k == 0:
        lo, hi = 0.0, min(1.0, 3.0 / n)
    elif k == n:
        lo, hi = max(0.0, 1.0 - 3.0 / n), 1.0
    else:
        lo = float(stats.beta.ppf(a / 2, k, n - k + 1))
        hi = float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return ProbabilityEstimate(p=k / n, lower=lo, upper=hi, n=n, k=k)


def spearman(x, y) -> float:
    """Spearman rank correlation; nan when either vector is constant."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.size < 2 or np.ptp(x) == 0 or np.ptp(y) == 0:
        return float("nan")
    return float(stats.spearmanr(x, y).statistic)


def rank_correlations(records, keys=("D_global", "D_a", "D_b", "D_c")):
    """Per-seed Spearman correlation across nu of sup_E with each dissipation, and the median over seeds."""
    by_seed = {}
    for r in records:
        by_seed.setdefault(r["seed"], []).append(r)
    per_seed = {}
    for s, rows in sorted(by_seed.items()):
        rows = sorted(rows, key=lambda r: -r["nu"])
        per_seed[s] = {k: spearman([r["sup_E"] for r in rows], [r[k] for r in rows]) for k in keys}
    median = {k: float(np.nanmedian([v[k] for v in per_seed.values()])) if per_seed else float("nan")
              for k in keys}
    return {"per_seed": per_seed, "median": median}


def nonincreasing_fraction(values, rtol=1e-12):
    """Fraction of adjacent pairs with values[i+1] <= values[i] (up to rtol)."""
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 1.0
    ok = v[1:] <= v[:-1] * (1 + rtol) + 1e-300
    return float(np.mean(ok))


def exceedance_by_nu(records, eps):
    """{nu: ProbabilityEstimate} of sup_E > eps, ordered by decreasing nu."""
    by_nu = {}
    for r in records:
        by_nu.setdefault(r["nu"], []).append(r["sup_E"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {nu: convergence_in_probability(by_nu[nu], eps) for nu in sorted(by_nu, reverse=True)}
