"""Exception taxonomy shared across the package.

ConfigurationError covers bad inputs detected before any computation runs
(dimension mismatches, invalid probabilities, non-PSD covariances).
NumericalError and its subclasses cover failures of the numeric machinery
at runtime.  The CLI maps ConfigurationError to exit code 3 and
NumericalError to exit code 4.
"""


class ConfigurationError(ValueError):
    """Invalid model, scheduler, network or scenario configuration."""


class ProtocolError(RuntimeError):
    """Simulation-protocol violation, e.g. a delivered packet without a payload."""


class NumericalError(RuntimeError):
    """A numeric routine failed to produce a trustworthy result."""


class BracketingError(NumericalError):
    """Root finding was asked to search an interval with no sign change."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge within its subdivision budget."""


class DegenerateTruncationError(NumericalError):
    """A conditioning event has probability too small to normalize against."""


class InfeasibleConditioningError(NumericalError):
    """Rejection sampling accepted too few draws to estimate a conditional mean."""
