"""Exception hierarchy shared by every module."""


class HeatGrowthError(Exception):
    """Base class for all errors raised by the package."""


class IndexTooSmall(HeatGrowthError, ValueError):
    """The weight exponent is below the optimal index, so the integral diverges."""


class QuadratureFailure(HeatGrowthError, ArithmeticError):
    """Requested tolerance could not be reached within the node budget."""


class BeyondMaximalTime(HeatGrowthError, ValueError):
    """Evaluation time lies past the maximal existence time 1/(4 eps0)."""


class AtMaximalTime(HeatGrowthError, ValueError):
    """Evaluation requested exactly at the maximal existence time."""


class DimensionUnsupported(HeatGrowthError, NotImplementedError):
    pass


class OrderUnsupported(HeatGrowthError, ValueError):
    pass


class SignedDataUnsupported(HeatGrowthError, ValueError):
    pass


class NotFactored(HeatGrowthError, ValueError):
    """Data cannot be written as exp(A|x|^2) v(x) with a recognised v."""


class InvalidSpec(HeatGrowthError, ValueError):
    pass


class InsufficientShells(HeatGrowthError, ValueError):
    pass


class DimensionMismatch(HeatGrowthError, ValueError):
    pass


class InconsistentBound(HeatGrowthError, ValueError):
    """A Taylor coefficient violates the declared analyticity envelope."""


class TailNotClosed(HeatGrowthError, ArithmeticError):
    """The series tail cannot be certified below tolerance."""
