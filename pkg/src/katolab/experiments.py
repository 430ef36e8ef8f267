"""Configuration, viscosity sweeps with common noise, manifests and replay checks.

A config is an INI file::

    [grid]       nx, ny
    [time]       T, and dt or steps
    [viscosity]  values (strictly decreasing)
    [ensemble]   seeds ("0-19" or a comma list)
    [noise]      modes, amplitude, width
    [initial]    kind plus builder parameters
    [strip]      c_delta, theta
    [output]     directory, snapshot_every, save_paths  (optional)
    [corrector]  deltas                                   (corrector-scalings only)

Physics keys have no defaults; a missing key raises ConfigError.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import os
import time
import traceback
import warnings
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import __version__
from .corrector import EXPECTED_EXPONENTS, build_corrector, verify_scalings
from .diagnostics import (DEFAULT_EPSILONS, R1_NOTE, ROW_COLUMNS, exceedance_by_nu, gronwall_remainders,
                          kato_functionals, nonincreasing_fraction, rank_correlations, splitting_residual)
from .errors import ConfigError, KatoLabError
from .euler import run_euler
from .fields import max_speed, wall_trace
from .geometry import ChannelGrid, StripSpec
from .initial import initial_field
from .noise import NoiseBasis, default_modes, sample_path, save_path, uniform_times
from .ns import run_ns
from .regression import regress_slope
from .stepping import CFL_LIMIT, fmt, write_series_csv
from .stokes import run_stokes, stokes_deviation

WORKERS_ENV = "KATOLAB_WORKERS"

# thresholds used by the post-processing checks
SPEARMAN_MIN = 0.7
KATO_MONOTONE_MIN = 0.8
BRIDGE_MAX = 0.05
EXCEEDANCE_EPS = 0.1


# -- configuration ----------------------------------------------------------

def _floats(text):
    return [float(x) for x in text.replace(";", ",").split(",") if x.strip()]


def _seeds(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


@dataclasses.dataclass(frozen=True)
class RunConfig:
    nx: int
    ny: int
    T: float
    steps: int
    nus: tuple
    seeds: tuple
    noise: dict
    initial: dict
    strip: StripSpec
    output_dir: str = "out"
    snapshot_every: int = 16
    save_paths: bool = False
    deltas: tuple = ()
    source: str = ""

    @property
    def dt(self):
        return self.T / self.steps

    @property
    def grid(self):
        return ChannelGrid(self.nx, self.ny)

    def modes(self):
        n = int(self.noise["modes"])
        if n == 0:
            return []
        return default_modes(n=n, amplitude=float(self.noise["amplitude"]), width=float(self.noise["width"]))

    def canonical(self):
        d = dataclasses.asdict(self)
        d.pop("source")
        d.pop("output_dir")
        d["strip"] = dataclasses.asdict(self.strip)
        return d

    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, **kw):
        return dataclasses.replace(self, **kw)

    def validate(self, need=("initial",)):
        if self.nx < 8 or self.ny < 8:
            raise ConfigError("grid needs at least 8 cells per direction")
        if not self.T > 0 or self.steps < 1:
            raise ConfigError("T must be positive with at least one step")
        nus = np.array(self.nus, dtype=float)
        if nus.size == 0 or np.any(nus < 0):
            raise ConfigError("viscosity list must be nonempty and nonnegative")
        if np.any(np.diff(nus) >= 0):
            raise ConfigError("viscosity list must be strictly decreasing")
        if not self.seeds:
            raise ConfigError("no seeds given")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")
        if "initial" in need:
            if not self.initial:
                raise ConfigError("missing [initial] section")
            self._check_cfl()
        if "deltas" in need and len(self.deltas) < 5:
            raise ConfigError("[corrector] deltas needs at least 5 widths")
        return self

    def speed_bound(self):
        """|u0|_max plus three standard deviations of the noise sup-norm at time T."""
        g = self.grid
        u0 = initial_field(g, self.initial)
        modes = self.modes()
        if not modes:
            return max_speed(u0)
        B = NoiseBasis(modes, g)
        per_mode = [max_speed(B.mode_field(j)) ** 2 * m.lam for j, m in enumerate(modes)]
        return max_speed(u0) + 3.0 * np.sqrt(self.T * sum(per_mode))

    def _check_cfl(self):
        g = self.grid
        cfl = self.speed_bound() * self.dt / min(g.dx, g.dy)
        if cfl > CFL_LIMIT:
            raise ConfigError(f"dt={self.dt:.4g} gives an expected CFL number {cfl:.3f} > {CFL_LIMIT}")


def _get(cp, section, key, conv=str):
    if not cp.has_section(section):
        raise ConfigError(f"missing [{section}] section")
    if not cp.has_option(section, key):
        raise ConfigError(f"missing key {key!r} in [{section}]")
    try:
        return conv(cp.get(section, key))
    except ValueError as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}") from None


def parse_config(text, source="", base_dir=None) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    T = _get(cp, "time", "T", float)
    if cp.has_option("time", "steps"):
        steps = _get(cp, "time", "steps", int)
    else:
        dt = _get(cp, "time", "dt", float)
        steps = int(round(T / dt))
        if steps < 1 or abs(steps * dt - T) > 1e-9 * T:
            raise ConfigError(f"T={T} is not a whole number of steps dt={dt}")
    noise = {"modes": _get(cp, "noise", "modes", int)}
    if noise["modes"] > 0:
        noise["amplitude"] = _get(cp, "noise", "amplitude", float)
        noise["width"] = _get(cp, "noise", "width", float)
    initial = dict(cp.items("initial")) if cp.has_section("initial") else {}
    if initial and "kind" not in initial:
        raise ConfigError("missing key 'kind' in [initial]")
    try:
        strip = StripSpec(c_delta=_get(cp, "strip", "c_delta", float), theta=_get(cp, "strip", "theta", float),
                          walls=cp.get("strip", "walls", fallback="both"))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"bad [strip]: {exc}") from None
    out = cp.get("output", "directory", fallback="out")
    if base_dir is not None and not os.path.isabs(out):
        out = os.path.normpath(os.path.join(base_dir, out))
    deltas = tuple(_floats(cp.get("corrector", "deltas"))) if cp.has_option("corrector", "deltas") else ()
    return RunConfig(
        nx=_get(cp, "grid", "nx", int), ny=_get(cp, "grid", "ny", int), T=T, steps=steps,
        nus=tuple(_floats(_get(cp, "viscosity", "values"))), seeds=tuple(_seeds(_get(cp, "ensemble", "seeds"))),
        noise=noise, initial=initial, strip=strip, output_dir=out,
        snapshot_every=cp.getint("output", "snapshot_every", fallback=16),
        save_paths=cp.getboolean("output", "save_paths", fallback=False), deltas=deltas, source=source)


def load_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    return parse_config(path.read_text(), source=str(path), base_dir=str(path.parent))


# -- small IO helpers -------------------------------------------------------

def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, obj):
    """Atomic write: temp file in the same directory, then rename."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    os.replace(tmp, path)


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, tuple)):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _clean(x):
    """nan -> None so that the JSON is standard."""
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (float, np.floating)) and not np.isfinite(x):
        return None
    return x


def nu_tag(nu):
    return format(float(nu), ".6g")


def worker_count(default=1):
    raw = os.environ.get(WORKERS_ENV)
    if raw is None or raw.strip() == "":
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return n


# -- the sweep --------------------------------------------------------------

def run_cell(cfg: RunConfig, seed):
    """One seed: one Euler run, then NS and Stokes at every nu on the same path.

    Returns plain data only (rows and series), so the parent process does all
    the writing.
    """
    grid = cfg.grid
    modes = cfg.modes()
    basis = NoiseBasis(modes, grid)
    path = sample_path(modes, uniform_times(cfg.T, cfg.steps), seed)
    u0 = initial_field(grid, cfg.initial)
    every = cfg.snapshot_every
    digests = {"path": path.digest()}
    euler = run_euler(u0, path, basis, snapshot_every=every)
    digests["euler"] = euler.path_digest
    out = {"seed": seed, "rows": [], "series": {"euler": euler.series()}, "failures": {}}
    if cfg.save_paths:
        out["path"] = path
    for nu in cfg.nus:
        tag = nu_tag(nu)
        try:
            ns = run_ns(u0, nu, path, basis, snapshot_every=every)
            st = run_stokes(grid, nu, path, basis, snapshot_every=every)
            digests[f"ns_{tag}"] = ns.path_digest
            digests[f"stokes_{tag}"] = st.path_digest
            rec = kato_functionals(ns, euler, cfg.strip)
            rec.stokes_dev = stokes_deviation(st)
            rec.splitting = splitting_residual(ns, st)
            if nu > 0:
                t_bot, t_top = wall_trace(euler.snapshots[-1])
                with warnings.catch_warnings():
                    # the flag is kept on the corrector; coarse sweeps trip it routinely
                    warnings.simplefilter("ignore")
                    corr = build_corrector([t_bot, t_top], rec.delta)
                rec.R1, rec.R2, rec.R3_int = gronwall_remainders(ns, euler, st, corr, rec.delta, rec.delta0)
            out["rows"].append(rec.row())
            out["series"][f"ns_{tag}"] = ns.series()
            out["series"][f"stokes_{tag}"] = st.series()
            out["series"][f"diag_{tag}"] = rec.series()
        except KatoLabError as exc:
            out["failures"][tag] = f"{type(exc).__name__}: {exc}"
    if len(set(digests.values())) != 1:
        out["failures"]["coupling"] = "solvers consumed different noise increments"
    out["digest"] = digests["path"]
    return out


def _run_cell_safe(cfg, seed):
    try:
        return run_cell(cfg, seed)
    except Exception as exc:  # recorded in the manifest; the sweep goes on
        return {"seed": seed, "error": f"{type(exc).__name__}: {exc}", "trace": traceback.format_exc()}


def _cell_file(out, seed):
    return out / "cells" / f"seed{seed}.json"


def _store_cell(out, cfg, res):
    """Write one finished cell: per-run CSVs plus a JSON fragment with its rows."""
    seed = res["seed"]
    runs = out / "runs"
    files = []
    for name, cols in res["series"].items():
        f = runs / f"seed{seed}_{name}.csv"
        write_series_csv(f, cols)
        files.append(f)
    if "path" in res:
        f = out / "paths" / f"seed{seed}.klnp"
        save_path(f, res["path"])
        files.append(f)
    frag = {"seed": seed, "rows": res["rows"], "failures": res["failures"], "path_digest": res["digest"],
            "files": sorted(str(f.relative_to(out)) for f in files)}
    _write_json(_cell_file(out, seed), _clean(frag))
    return frag


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow([str(int(r[c])) if c == "seed" else fmt(np.nan if r[c] is None else r[c])
                        for c in ROW_COLUMNS])


def read_sweep_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [{k: (int(v) if k == "seed" else float(v)) for k, v in r.items()} for r in rows]


def summarize(rows, nus, epsilons=DEFAULT_EPSILONS):
    """Post-processing checks on the sweep table; pure function of the rows."""
    corr = rank_correlations(rows)
    by_seed = {}
    for r in rows:
        by_seed.setdefault(r["seed"], []).append(r)
    kato = {}
    for s, rs in sorted(by_seed.items()):
        rs = sorted(rs, key=lambda r: -r["nu"])
        kato[s] = nonincreasing_fraction([r["kato_bound"] for r in rs])
    exceed = {}
    for eps in epsilons:
        est = exceedance_by_nu(rows, eps)
        exceed[format(eps, "g")] = {nu_tag(nu): {"p": e.p, "lower": e.lower, "upper": e.upper, "n": e.n}
                                    for nu, e in est.items()}
    p_main = [exceed[format(EXCEEDANCE_EPS, "g")][nu_tag(nu)]["p"] for nu in nus
              if nu_tag(nu) in exceed[format(EXCEEDANCE_EPS, "g")]]
    checks = {
        "spearman_median": corr["median"],
        "spearman_ok": bool(all(v >= SPEARMAN_MIN for v in corr["median"].values())),
        "kato_bound_monotone_fraction": kato,
        "kato_bound_ok": bool(all(v >= KATO_MONOTONE_MIN for v in kato.values())),
        "exceedance_nonincreasing": bool(nonincreasing_fraction(p_main) == 1.0),
        "bridge_max": float(max((r["bridge_rel"] for r in rows), default=0.0)),
    }
    checks["bridge_ok"] = checks["bridge_max"] <= BRIDGE_MAX
    return {"rank_correlations": corr, "exceedance": exceed, "checks": checks}


def _inventory(out):
    files = [out / "sweep.csv", out / "summary.json"]
    for sub in ("runs", "paths"):
        if (out / sub).is_dir():
            files.extend(sorted((out / sub).iterdir()))
    return {str(f.relative_to(out)): _sha256(f) for f in files if f.is_file()}


def run_sweep(cfg: RunConfig, workers=None, resume=True, log=print):
    """Run (or resume) the sweep described by ``cfg``; returns the final manifest."""
    cfg.validate()
    out = Path(cfg.output_dir)
    for sub in ("runs", "cells") + (("paths",) if cfg.save_paths else ()):
        (out / sub).mkdir(parents=True, exist_ok=True)
    man_path = out / "manifest.json"
    manifest = {
        "config_hash": cfg.digest(), "config": _clean(cfg.canonical()), "config_source": cfg.source,
        "version": __version__, "seeds": list(cfg.seeds), "nus": list(cfg.nus),
        "r1_note": R1_NOTE, "status": "running", "cells": {}, "failures": {}, "wall_clock": {},
    }
    if man_path.exists():
        old = json.loads(man_path.read_text())
        if old.get("config_hash") != manifest["config_hash"]:
            raise ConfigError(f"{out} holds a sweep with a different config; choose another directory")
        if resume:
            manifest["cells"] = old.get("cells", {})
            manifest["wall_clock"] = old.get("wall_clock", {})
    manifest["started"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    _write_json(man_path, manifest)

    done = {int(s) for s, st in manifest["cells"].items() if st == "done" and _cell_file(out, s).exists()}
    todo = [s for s in cfg.seeds if s not in done]
    if done:
        log(f"resuming: {len(done)} of {len(cfg.seeds)} cells already complete")
    n_workers = worker_count() if workers is None else int(workers)

    def collect(res, elapsed):
        s = res["seed"]
        if "error" in res:
            manifest["cells"][str(s)] = "failed"
            manifest["failures"][str(s)] = res["error"]
            log(f"seed {s}: failed ({res['error']})")
        else:
            frag = _store_cell(out, cfg, res)
            manifest["cells"][str(s)] = "done"
            for tag, why in frag["failures"].items():
                manifest["failures"][f"{s}/{tag}"] = why
            log(f"seed {s}: done in {elapsed:.1f}s")
        manifest["wall_clock"][str(s)] = round(elapsed, 3)
        _write_json(man_path, manifest)

    if n_workers <= 1 or len(todo) <= 1:
        for s in todo:
            t0 = time.perf_counter()
            collect(_run_cell_safe(cfg, s), time.perf_counter() - t0)
    else:
        t0 = time.perf_counter()
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futs = {pool.submit(_run_cell_safe, cfg, s): s for s in todo}
            for fut in as_completed(futs):
                collect(fut.result(), time.perf_counter() - t0)

    rows = []
    for s in cfg.seeds:
        f = _cell_file(out, s)
        if f.exists():
            rows.extend(json.loads(f.read_text())["rows"])
    rows = [{k: (np.nan if v is None else v) for k, v in r.items()} for r in rows]
    rows.sort(key=lambda r: (r["seed"], -r["nu"]))
    write_sweep_csv(out / "sweep.csv", rows)
    summary = summarize(rows, cfg.nus)
    summary["config_hash"] = manifest["config_hash"]
    summary["r1_note"] = R1_NOTE
    _write_json(out / "summary.json", _clean(summary))
    manifest["inventory"] = _inventory(out)
    manifest["status"] = "complete" if not manifest["failures"] else "complete_with_failures"
    manifest["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    _write_json(man_path, manifest)
    return manifest


def verify(manifest_path, log=print):
    """Recheck file hashes against the manifest and rerun the post-processing checks."""
    man_path = Path(manifest_path)
    if man_path.is_dir():
        man_path = man_path / "manifest.json"
    manifest = json.loads(man_path.read_text())
    out = man_path.parent
    mismatched = []
    for rel, digest in manifest.get("inventory", {}).items():
        f = out / rel
        if not f.is_file() or _sha256(f) != digest:
            mismatched.append(rel)
    rows = read_sweep_csv(out / "sweep.csv")
    summary = summarize(rows, manifest["nus"])
    checks = summary["checks"]
    result = {
        "files_checked": len(manifest.get("inventory", {})),
        "hash_mismatches": mismatched,
        "checks": checks,
        "ok": not mismatched and checks["spearman_ok"] and checks["kato_bound_ok"]
        and checks["exceedance_nonincreasing"] and checks["bridge_ok"],
    }
    log(json.dumps(_clean(result), indent=2, sort_keys=True))
    return result


# -- the two small studies --------------------------------------------------

def stokes_slope(cfg: RunConfig, log=print):
    """Fit sup_t ||z - W|| against nu on one fixed path (first seed of the config)."""
    cfg.validate(need=())
    grid = cfg.grid
    modes = cfg.modes()
    if not modes:
        raise ConfigError("stokes-slope needs noise modes")
    basis = NoiseBasis(modes, grid)
    path = sample_path(modes, uniform_times(cfg.T, cfg.steps), cfg.seeds[0])
    nus = [nu for nu in cfg.nus if nu > 0]
    dev = [stokes_deviation(run_stokes(grid, nu, path, basis, snapshot_every=cfg.steps)) for nu in nus]
    slope, intercept, r2 = regress_slope(nus, dev)
    report = {"nus": nus, "deviation": dev, "slope": slope, "intercept": intercept, "r2": r2,
              "seed": cfg.seeds[0], "T": cfg.T, "steps": cfg.steps}
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "stokes_slope.json", report)
    log(f"slope {slope:.4f}  R^2 {r2:.5f}")
    return report


def corrector_scalings(cfg: RunConfig, log=print):
    """Corrector functionals against delta from the Euler wall trace at time T.

    The d_t v functional uses the trace difference quotient over the last
    step (the corrector is linear in the trace).
    """
    cfg.validate(need=("initial", "deltas"))
    grid = cfg.grid
    modes = cfg.modes()
    basis = NoiseBasis(modes, grid)
    path = sample_path(modes, uniform_times(cfg.T, cfg.steps), cfg.seeds[0])
    u0 = initial_field(grid, cfg.initial)
    # a cadence of steps - 1 stores the last step together with its predecessor
    euler = run_euler(u0, path, basis, snapshot_every=max(1, cfg.steps - 1))
    kept = euler.snapshot_steps.tolist()
    tr = wall_trace(euler.snapshots[-1])
    tr_prev = wall_trace(euler.snapshots[kept.index(cfg.steps - 1)])
    rate = [(a - b) / cfg.dt for a, b in zip(tr, tr_prev)]
    report = verify_scalings(list(tr), cfg.deltas, trace_rate=rate)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    slim = {k: {"slope": v["slope"], "r2": v["r2"], "expected": v["expected"], "skipped": v["skipped"]}
            for k, v in report.items()}
    _write_json(out / "corrector_scalings.json", _clean(slim))
    for k, v in slim.items():
        s = "skipped" if v["skipped"] else f"{v['slope']:+.4f} (expected {EXPECTED_EXPONENTS[k]:+.1f})"
        log(f"{k:16s} {s}")
    return report
