"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid input: bad parameters, malformed data, or precondition violation."""


class NumericalError(RuntimeError):
    """A numerical routine could not deliver a trustworthy result."""


class ToleranceNotMet(NumericalError):
    """Quadrature exhausted its budget before reaching the requested tolerance.

    The partial result is attached as ``estimate``.
    """

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class ConstructionError(NumericalError):
    """Discretizing-sequence construction failed; ``index`` is the offending step."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class SchemaVersionError(RuntimeError):
    """A persisted report was written by an incompatible (newer) schema."""
