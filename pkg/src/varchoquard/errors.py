"""Exception types raised across the package."""


class InvalidExponentError(ValueError):
    """An exponent field or bundle violates its admissibility constraints."""


class ModularOverflowError(ArithmeticError):
    """A power |u|^p left the representable floating-point range."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NonFiniteKernelError(ArithmeticError):
    """A pairwise integrand evaluated to inf/nan at an included pair."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class BracketError(RuntimeError):
    """Bisection could not bracket the unit level of a modular."""


class ValleyNotFoundError(RuntimeError):
    """No t with I[t*direction] < 0 was found before the doubling cap."""


class GeometryError(RuntimeError):
    """The mountain-pass ring check failed (no positive energy floor)."""


class EmptyAnnulusError(ValueError):
    """An annulus used for extremization contains no grid nodes."""


class ConfigError(ValueError):
    """An instance configuration could not be turned into a valid run."""
