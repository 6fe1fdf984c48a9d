"""Exception types shared across the package."""


class BudgetError(ValueError):
    """A generator or matrix assembly would exceed its configured size budget."""


class CertificateError(RuntimeError):
    """The energy minimizer could not produce a valid optimality certificate."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


class ConfigError(ValueError):
    """A run configuration failed validation; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
