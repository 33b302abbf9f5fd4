"""Exception hierarchy shared by all modules.

Every error carries an ``exit_code`` used by the command-line front end.
"""


class MirrorCPError(Exception):
    exit_code = 1


class DomainError(MirrorCPError, ValueError):
    """Argument outside the domain of a function (z <= 0, x <= 0, ...)."""

    exit_code = 3


class PoleError(DomainError):
    """Evaluation requested exactly on a light-cone or light-bounce pole."""


class NumericalError(MirrorCPError, ArithmeticError):
    exit_code = 4


class TruncationError(NumericalError):
    """Image sum tail estimate exceeded the requested tolerance."""


class IntegrationError(NumericalError):
    """Quadrature failed to reach the requested accuracy."""


class IllConditionedError(NumericalError):
    """Covariance needed too much eigenvalue clipping to be trusted."""


class StepSizeError(NumericalError):
    """Time step too coarse for the oscillator frequency."""


class ConfigError(MirrorCPError, ValueError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2


class RegimeError(MirrorCPError):
    exit_code = 5


class UnstableTrapError(RegimeError):
    """Mirror-renormalized trap curvature is not positive."""


class BurnInError(RegimeError):
    """Ensemble variance still drifting after the burn-in window."""


class RegimeWarning(UserWarning):
    """Result computed outside the regime where the asymptotic law holds."""
