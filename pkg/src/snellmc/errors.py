"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: configuration problems exit with 1,
bad input data with 2 and numerical failures with 3.
"""


class SnellmcError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(SnellmcError):
    """Invalid configuration, arguments or model parameters."""

    exit_code = 1


class DataError(SnellmcError):
    """Malformed or insufficient input data."""

    exit_code = 2


class NumericalError(SnellmcError):
    """A numerical procedure failed or did not converge.

    May carry a ``best`` attribute with the best point reached so far.
    """

    exit_code = 3

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
