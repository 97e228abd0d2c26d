"""Exception types raised across the package."""


class BackboneError(Exception):
    """Base class for errors raised by this package."""


class DomainError(BackboneError, ValueError):
    """A quantity is undefined for the given input (zero probability, bad covariance, ...)."""


class InfeasibleStrategyError(BackboneError):
    """The requested search strategy cannot run at this problem size."""


class InputError(BackboneError):
    """An input file could not be parsed or is inconsistent."""
