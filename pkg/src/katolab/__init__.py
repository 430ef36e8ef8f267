"""Stochastic inviscid-limit experiments in a periodic channel.

Staggered-grid solvers for stochastic Navier-Stokes, stochastic Euler and
the linear stochastic Stokes system driven by a common finite-dimensional
Wiener process, plus Kato's boundary corrector and the dissipation
functionals that characterize the vanishing-viscosity limit.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, CouplingViolationError, DegenerateCollarError, FrameUnavailableError,
                     GridMismatchError, InvalidWidthError, KatoLabError, NumericalFailureError, OffGridTimeError,
                     StepRejectedError)
from .geometry import BoundaryCurve, ChannelBoundary, ChannelGrid, LocalFrame, StripSpec, local_frame, strip_weights
from .fields import (VelocityField, divergence, gradient, grad_norm_sq, inner, l2_norm_sq, leray_project,
                     strip_derivative_norm_sq, wall_trace)
from .noise import (NoiseBasis, NoiseMode, NoisePath, default_modes, evaluate_W, refine_path, restrict_path,
                    sample_path, trace_Q0, uniform_times)
from .initial import initial_field
from .stokes import StokesRun, run_stokes, step_stokes, stokes_deviation
from .ns import NSRun, energy_identity_residual_ns, run_ns, step_ns
from .euler import EulerRun, energy_identity_residual_euler, run_euler, step_euler_pathwise
from .corrector import Cutoff, CorrectorField, build_corrector, build_cutoff, select_delta, verify_scalings
from .diagnostics import (DiagnosticsRecord, convergence_in_probability, gronwall_remainders, kato_functionals,
                          splitting_residual)
from .regression import regress_slope
