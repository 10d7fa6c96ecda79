"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class ConfigError(ValueError):
    """Invalid run configuration (bad field, violated step-size bound, ...)."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class IntegratorError(RuntimeError):
    """Raised when a fixed-step integration drifts beyond its tolerance."""


class UnsatisfiableCalibration(ValueError):
    """A drive amplitude cannot be found on the principal Bessel branch."""

    def __init__(self, message, bond=None):
        super().__init__(message)
        self.bond = bond
