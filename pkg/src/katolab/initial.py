"""Analytic initial velocities."""

import numpy as np

from .errors import ConfigError
from .fields import NO_PENETRATION, VelocityField, from_functions, from_streamfunction, leray_project


def vortex_pair(grid, amplitude=1.0, radius=0.1, separation=0.25, center=(0.5, 0.5), angle=-90.0,
                bc=NO_PENETRATION) -> VelocityField:
    """Counter-rotating Gaussian vortex pair, projected onto divergence-free fields.

    ``angle`` is the propagation direction in degrees (-90 drives the pair
    toward the bottom wall).  ``amplitude`` scales the streamfunction so that
    the peak speed of an isolated vortex is about ``amplitude``.
    """
    xc, yc = grid.corner_coords()
    th = np.deg2rad(angle)
    # the pair propagates perpendicular to the line joining the cores
    off = 0.5 * separation * np.array([np.sin(th), -np.cos(th)])
    psi = np.zeros_like(xc)
    scale = amplitude * radius * np.sqrt(np.e / 2.0)
    for sign, c in ((1.0, np.add(center, off)), (-1.0, np.subtract(center, off))):
        dxp = np.sin(np.pi * (xc - c[0])) / np.pi
        psi += sign * scale * np.exp(-(dxp ** 2 + (yc - c[1]) ** 2) / radius ** 2)
    U = from_streamfunction(grid, psi, bc)
    return leray_project(U)


def taylor_green(grid, amplitude=1.0, k=1, bc=NO_PENETRATION) -> VelocityField:
    """u = A sin(2 pi k x) cos(2 pi k y), v = -A cos(2 pi k x) sin(2 pi k y) on the torus."""
    w = 2 * np.pi * k
    return from_functions(grid, lambda x, y: amplitude * np.sin(w * x) * np.cos(w * y),
                          lambda x, y: -amplitude * np.cos(w * x) * np.sin(w * y), bc)


def cellular(grid, amplitude=1.0, kx=1, ky=1, bc=NO_PENETRATION) -> VelocityField:
    """Steady Euler cells psi ~ sin(2 pi kx x) sin(pi ky y), slipping along both walls.

    psi is a Laplacian eigenfunction, so the flow is an exact steady Euler
    solution and any boundary layer comes from viscosity alone.  The peak
    wall speed is ``amplitude``.
    """
    xc, yc = grid.corner_coords()
    psi = amplitude / (np.pi * ky) * np.sin(2 * np.pi * kx * xc) * np.sin(np.pi * ky * yc)
    if not grid.periodic_y:
        psi[0] = psi[-1] = 0.0   # sin(pi ky) is not exactly zero in floating point
    return from_streamfunction(grid, psi, bc)


def shear_layer(grid, amplitude=1.0, bc=NO_PENETRATION) -> VelocityField:
    """Wall-parallel flow with slip at both walls plus a weak cellular perturbation."""
    U = from_functions(grid, lambda x, y: amplitude * (np.cos(np.pi * y) + 0.3 * np.sin(2 * np.pi * x) * np.cos(np.pi * y)),
                       lambda x, y: 0.3 * amplitude * np.cos(2 * np.pi * x) * np.sin(np.pi * y) / 2.0, bc)
    return leray_project(U)


_BUILDERS = {"vortex_pair": vortex_pair, "taylor_green": taylor_green, "shear_layer": shear_layer,
            "cellular": cellular}


def initial_field(grid, spec: dict) -> VelocityField:
    """Build u0 from a config mapping with a ``kind`` key and keyword parameters."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in _BUILDERS:
        raise ConfigError(f"unknown initial condition {kind!r}; expected one of {sorted(_BUILDERS)}")
    if "center" in spec and isinstance(spec["center"], str):
        spec["center"] = tuple(float(x) for x in spec["center"].split(","))
    kwargs = {k: (float(v) if k != "center" else v) for k, v in spec.items()}
    for key in ("k", "kx", "ky"):
        if key in kwargs:
            kwargs[key] = int(kwargs[key])
    return _BUILDERS[kind](grid, **kwargs)
