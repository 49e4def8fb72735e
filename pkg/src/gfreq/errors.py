"""Exception types shared across the package.

The CLI maps these onto process exit codes: ConfigError -> 2,
DataError -> 3, NumericError -> 4. Everything else is a plain bug.
"""


class GfreqError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(GfreqError):
    """Invalid configuration: bad shapes, missing checkpoint, bad flags."""


class DataError(GfreqError):
    """Malformed input data (edge lists, dataset directories)."""


class ParseError(DataError):
    """Edge-list text that violates the format. Carries a line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NumericError(GfreqError):
    """Numeric failure: diverged training, NaN loss."""
