"""Exception types shared across the package."""


class NumericError(ArithmeticError):
    """A non-finite value appeared where the dynamics require finite numbers."""


class FormatError(ValueError):
    """A binary or CSV artifact does not follow its declared layout."""


class ConfigError(ValueError):
    """An experiment or command configuration is malformed."""
