"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command-line front end.
"""


class SphadiError(Exception):
    exit_code = 1


class ConfigError(SphadiError, ValueError):
    exit_code = 2


class ResolutionError(SphadiError):
    """A discretization is too coarse for the requested accuracy."""

    exit_code = 3


class FeasibilityError(SphadiError):
    """The request lies outside what the numerics can deliver (e.g. too small |t|)."""

    exit_code = 4


class ConvergenceError(SphadiError):
    exit_code = 5


class TruncationError(ConvergenceError):
    """A truncated mode sum did not meet its tail tolerance."""


class DomainError(SphadiError, ValueError):
    """A mathematically invalid request (reported like a configuration error)."""

    exit_code = 2


class PoleError(DomainError):
    pass


class SingularityError(DomainError):
    """Evaluation at the origin of a function that is singular there."""


class FormUnboundedError(DomainError):
    """Angular eigenvalue below the Hardy threshold -((d-2)/2)**2."""


class UnsupportedDimensionError(DomainError):
    pass


class WindowLossWarning(UserWarning):
    """Part of the evolved mass falls outside the output window r <= 2|t| T_MAX / rho.

    Typical for data that are smooth in x but not in the domain of H (for
    instance nonzero at the origin in a mode with alpha_k != 0): their
    spectral tails decay algebraically.
    """
