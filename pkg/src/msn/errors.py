"""Exception hierarchy shared by all modules."""


class MsnError(Exception):
    """Base class for every error raised by this package."""


class DomainError(MsnError, ValueError):
    pass


class DuplicateNodes(MsnError, ValueError):
    pass


class NotEven(MsnError, ValueError):
    pass


class RankDeficient(MsnError, ArithmeticError):
    """Constraint matrix is numerically rank deficient.

    Usually caused by (near-)duplicate nodes or a degree too small for the
    node configuration.
    """


class InsufficientDegree(MsnError, ValueError):
    """Fewer coefficients than interpolation constraints."""


class NotPositiveDefinite(MsnError, ArithmeticError):
    pass


class DiagnosticFailure(MsnError, RuntimeError):
    """A numerical diagnostic did not reach its target before its cap."""
