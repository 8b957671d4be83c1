"""Exception types shared across the package."""


class SizeError(ValueError):
    """Input exceeds a documented enumeration or memory cap."""


class PoleError(ArithmeticError):
    """Rational function evaluated or expanded at a pole."""


class EnsembleError(ValueError):
    """Word or polynomial is incompatible with the requested ensemble."""


class NumericError(ArithmeticError):
    """Non-finite samples or a failed numerical routine."""


class ConsistencyError(RuntimeError):
    """An internal exactness check failed (e.g. a residual imaginary part)."""
