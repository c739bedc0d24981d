"""Exception hierarchy shared by all estimator modules."""


class LeakageError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(LeakageError, ValueError):
    """Invalid argument: wrong shape, negative variance, mismatched grids..."""


class DegenerateInputError(ParameterError):
    """Sample data that makes an estimator undefined (e.g. duplicate points)."""


class SingularityError(LeakageError, ArithmeticError):
    """A matrix that must be invertible or PSD is not."""


class ResourceError(LeakageError, MemoryError):
    """A configured memory or size guard would be exceeded."""
