"""Exception and warning types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid physical or numerical parameters."""


class NumericalBlowupError(FloatingPointError):
    """Raised when the evolved field stops being finite."""

    def __init__(self, time: float):
        super().__init__(f"non-finite field encountered at t={time:.6g}")
        self.time = time


class AmbiguousReadoutError(RuntimeError):
    """The two components are too close to decide their ordering."""


class WrapAroundWarning(UserWarning):
    """Density reached the periodic boundary and may re-enter the domain."""
