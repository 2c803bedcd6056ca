"""
Exception hierarchy for phi4flow.
Each error class carries the process exit code the CLI reports for it.
"""

EXIT_OK = 0
EXIT_SUITE_FAILED = 5
EXIT_INCONCLUSIVE = 6


class Phi4FlowError(Exception):
    """Base class for all phi4flow errors."""
    exit_code = 1


class ConfigError(Phi4FlowError, ValueError):
    """Invalid configuration, parameters or momenta."""
    exit_code = 2


class MomentumConservationError(ConfigError):
    """External momenta do not sum to zero modulo 2*pi/a0."""


class OutOfScopeError(Phi4FlowError, ValueError):
    """Requested (l, n) index or derivative order is not implemented."""
    exit_code = 3


class QuadratureError(Phi4FlowError, ArithmeticError):
    """A quadrature or interpolation estimate stayed above tolerance at the resource cap."""
    exit_code = 4
