"""Exception types shared by the unilab modules."""


class UnilabError(Exception):
    """Base class for errors raised by unilab."""


class ValidationError(UnilabError, ValueError):
    """An input violates a documented precondition."""


class TagMismatch(ValidationError):
    """Two vectors (or a vector and an operator) live in different spaces."""


class GridMismatch(ValidationError):
    """Two grid functions (or a grid function and an operator) use different grids."""


class WindowExhausted(ValidationError):
    """A weight or orbit was requested outside its materialized window."""


class AliasingError(ValidationError):
    """A Fourier range is too wide for the sampling grid."""


class BitBudgetExhausted(ValidationError):
    """A bit-list state has too few bits left for the requested operation."""


class NonInvertibleError(ValidationError):
    """A negative iterate was requested of a non-invertible system."""


class BudgetExceeded(ValidationError):
    """An exhaustive check would exceed its enumeration budget."""


class ConstructionFailed(UnilabError):
    """A randomized construction could not be certified within its retry budget."""
