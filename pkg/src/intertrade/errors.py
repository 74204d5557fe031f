"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class IntertradeError(Exception):
    exit_code = 2


class ConfigError(IntertradeError, ValueError):
    """Bad configuration or usage."""

    exit_code = 1


class DataError(IntertradeError, ValueError):
    """Input data violates a precondition (unsorted ticks, empty series, ...)."""

    exit_code = 2


class NumericalError(IntertradeError, ArithmeticError):
    """An estimator could not produce a finite, well-defined result."""

    exit_code = 3
