"""Exception hierarchy.

Every domain failure derives from :class:`SigmaflatError` so callers can catch
the whole family at once.  Point-wise failures carry the offending points when
they are known.
"""


class SigmaflatError(Exception):
    """Base class for all errors raised by the package."""


class SingularPoint(SigmaflatError, ArithmeticError):
    """An expression was evaluated where it (or a derivative) is undefined."""

    def __init__(self, message, points=None):
        super().__init__(message)
        self.points = points


class BoundaryMargin(SigmaflatError, IndexError):
    """A finite-difference stencil would reach outside the grid."""


class DegeneratePoint(SingularPoint):
    """The density rho vanishes, so the induced metric is not invertible."""


class LogDomain(SingularPoint):
    """A logarithm argument vanishes."""


class PowerDomain(SingularPoint):
    """A negative base is raised to a non-integer power."""


class SingularMetric(SingularPoint):
    """A block metric is not invertible at an evaluation point."""


class SingularP(SingularPoint):
    """The sigma-model matrix field is not invertible."""


class SingularSigma(SingularPoint):
    """det Lambda vanishes where the integrability conditions are evaluated."""


class SpectralPole(SigmaflatError, ValueError):
    """k**2 + sigma vanishes, so the Lax matrices are undefined."""


class MaskedPath(SigmaflatError, ValueError):
    """A transport path crosses an excluded region."""


class UnknownSurface(SigmaflatError, KeyError):
    """Requested catalog surface does not exist."""


class NotMinimal(SigmaflatError, ValueError):
    """An identity requiring a minimal surface was asked of a non-minimal one."""


class NonConvergence(SigmaflatError, RuntimeError):
    """Newton iteration hit its iteration cap."""


class DegenerateIterate(SigmaflatError, RuntimeError):
    """A Newton iterate left the region where rho keeps its sign."""


class ConstraintViolation(SigmaflatError, ValueError):
    """Build constants violate m1 + m2 = 0 or n1 + n2 = (n - 1)/2."""


class SignatureJump(SigmaflatError, ValueError):
    """The metric signature changes across the sample points."""


class ConfigInvalid(SigmaflatError, ValueError):
    """A run configuration failed validation."""


class DependencyFailed(SigmaflatError, RuntimeError):
    """A pipeline stage could not run because an upstream stage failed."""


class IoFailure(SigmaflatError, OSError):
    """A report or data file could not be written."""
