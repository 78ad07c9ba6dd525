"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid or inconsistent configuration."""


class DimensionError(ValueError):
    """Array shapes do not line up."""


class DataError(ValueError):
    """Dataset content violates an operation's preconditions."""


class FormatError(ValueError):
    """Malformed input file."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class NumericError(ArithmeticError):
    """Non-finite values appeared during training."""


class StatisticsError(ValueError):
    """Degenerate input to a statistical test."""


class HarnessError(RuntimeError):
    """Every run of an experiment failed."""
