"""Exception hierarchy."""


class SteersimError(Exception):
    """Base class for all package errors."""


class DomainError(SteersimError, ValueError):
    """An argument is outside the domain of the operation."""


class NumericalError(SteersimError, ArithmeticError):
    """A numerical routine failed or produced non-finite output."""


class NumericalAssertionError(SteersimError, AssertionError):
    """A proven analytical property was violated at runtime."""


class ConfigError(SteersimError, ValueError):
    """Invalid sweep specification; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field

    def __reduce__(self):
        # Keeps the two-argument constructor intact across process boundaries.
        return type(self), (self.field, str(self).split(": ", 1)[-1])
