"""Exception types shared across the package."""


class ShapeMismatchError(ValueError):
    """Field data does not conform to the grid or to a partner field."""


class DegenerateFieldError(ValueError):
    """A pointwise operation hit a node where it is undefined (e.g. |m| = 0)."""


class BlowupError(RuntimeError):
    """A time step produced values beyond the blowup threshold."""

    def __init__(self, message, step_index):
        super().__init__(message)
        self.step_index = step_index


class ConfigError(ValueError):
    """A run configuration failed validation; ``key`` names the offender."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
