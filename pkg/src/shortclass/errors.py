"""Exception hierarchy. The CLI maps these onto exit codes."""


class ShortclassError(Exception):
    """Base class for all package errors."""


class ConfigError(ShortclassError, ValueError):
    """Invalid experiment or model configuration."""


class DataError(ShortclassError, ValueError):
    """Malformed or unusable input data."""


class PoolExhaustedError(DataError):
    """The augmentation pool cannot supply enough documents."""


class RepresentationError(ShortclassError, TypeError):
    """A model received features in a representation it cannot use."""


class NumericError(ShortclassError, ArithmeticError):
    """Training produced non-finite values."""


class NoDiscordantsError(ShortclassError, ValueError):
    """McNemar's statistic is undefined without discordant pairs."""


class TuningError(ShortclassError):
    """Every tuning trial failed."""
