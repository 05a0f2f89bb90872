"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
NumericError -> 3.
"""


class UsdrError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(UsdrError):
    """Invalid configuration or infeasible run parameters."""


class DataError(UsdrError):
    """Malformed or inconsistent input data."""


class NumericError(UsdrError):
    """Numerical failure during fitting or scoring."""


class NonDivisibleError(ConfigError):
    """Stride does not evenly divide the series length or the window."""


class DegeneratePlanError(ConfigError):
    """Plan would place every sample in every subset (M_train >= M)."""


class WindowTooLargeError(ConfigError):
    """Window is longer than the series."""


class NoCleanSubsetError(DataError):
    """No training subset lies entirely inside the normal mask."""


class NoCleanSpecError(ConfigError):
    """Clean scoring was requested without any way to build a normal mask."""
