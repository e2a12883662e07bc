"""Exception types shared across the package."""


class InvalidParameterError(ValueError):
    """A parameter is outside its admissible range."""


class ConfigError(InvalidParameterError):
    """A configuration file failed validation.

    ``field`` holds the dotted path of the offending entry.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class NonConvergenceError(RuntimeError):
    """Adaptive quadrature exhausted its subdivision budget.

    The best available estimate and its error bound are kept on the
    exception so callers can decide whether it is good enough.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class NonFiniteIntegrandError(FloatingPointError):
    """The integrand returned NaN or an infinite value."""

    def __init__(self, location):
        self.location = location
        super().__init__(f"integrand is not finite at x={location!r}")


class InfeasibleMomentsError(InvalidParameterError):
    """A (mean, variance) pair admits no beta distribution."""
