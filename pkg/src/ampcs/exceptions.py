"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Invalid problem dimensions, options or grid specification."""


class DegenerateThresholdError(FloatingPointError):
    """A threshold (or effective noise variance) collapsed to zero.

    ``state`` is the last valid iterate, ``next_state`` the degenerate one
    that triggered the error (may be ``None``).
    """

    def __init__(self, message, state=None, next_state=None):
        super().__init__(message)
        self.state = state
        self.next_state = next_state


class DegenerateNoiseError(DegenerateThresholdError):
    """Effective noise variance of the Bayesian denoiser reached zero."""


class PrecisionLossError(FloatingPointError):
    """Closed-form moments cannot be evaluated to meaningful precision."""


class InfeasibleError(RuntimeError):
    """No nonsingular column subset reproduces the measurements."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class PowerIterationError(RuntimeError):
    """Spectral norm estimate failed (e.g. zero matrix)."""
