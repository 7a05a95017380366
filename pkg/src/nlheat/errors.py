"""Exception types shared across the package."""


class NonpositiveLengthError(ValueError):
    """A domain axis length was zero or negative."""


class NonFiniteError(FloatingPointError):
    """A field or coefficient array left the finite range."""


class ProjectionStallError(RuntimeError):
    """Cyclic constraint projection failed to reach its tolerances."""


class ConfigError(Exception):
    """Base class for experiment-configuration problems."""


class ConfigParseError(ConfigError):
    """The config file is not valid sectioned key-value text."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ConfigError):
    """A parsed config value violates the experiment schema."""
