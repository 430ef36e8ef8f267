"""Exception types shared across the package."""


class KatoLabError(Exception):
    """Base class for all package errors."""


class FrameUnavailableError(KatoLabError):
    """Point lies outside the collar where (s, alpha) coordinates are defined."""


class DegenerateCollarError(KatoLabError):
    """Nearest boundary point is not unique."""


class InvalidWidthError(KatoLabError, ValueError):
    pass


class NumericalFailureError(KatoLabError):
    """A linear solve did not reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message if residual is None else f"{message} (residual={residual:.3e})")
        self.residual = residual


class StepRejectedError(KatoLabError):
    """CFL condition violated; carries the largest admissible time step."""

    def __init__(self, cfl, admissible_dt):
        super().__init__(f"CFL number {cfl:.3f} exceeds 0.5; admissible dt <= {admissible_dt:.6g}")
        self.cfl = cfl
        self.admissible_dt = admissible_dt


class OffGridTimeError(KatoLabError, ValueError):
    """Requested time is not a node of the noise grid."""


class GridMismatchError(KatoLabError, ValueError):
    pass


class CouplingViolationError(KatoLabError, ValueError):
    """Runs that must share a noise path were driven by different paths."""


class ConfigError(KatoLabError, ValueError):
    pass
