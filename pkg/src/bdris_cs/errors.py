"""Exception types shared across the package."""


class InvalidArgument(ValueError):
    """Bad shapes, out-of-range indices or an inconsistent configuration."""


class NumericFailure(ArithmeticError):
    """A factorization did not converge or a system was rank deficient."""


class ResourceLimit(RuntimeError):
    """A requested computation exceeds its configured size budget."""
