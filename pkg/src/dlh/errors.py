"""Exception hierarchy shared by every dlh module."""


class DLHError(Exception):
    """Base class for all library errors."""


class ValidationError(DLHError, ValueError):
    pass


class NonTriangularAlpha(ValidationError):
    pass


class NegativeExponent(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class IndexOutOfRange(ValidationError, IndexError):
    pass


class NonPositiveScale(ValidationError):
    pass


class NonPositiveEpsilon(ValidationError):
    pass


class DegeneratePoint(DLHError, ArithmeticError):
    """Evaluation requested on a set where the quantity is singular or not differentiable."""


class NotGrushin(ValidationError):
    pass


class ConditionsNotMet(DLHError):
    def __init__(self, report):
        super().__init__(f"admissibility conditions not met ({report.mode} mode)")
        self.report = report


class NonIntegrableSample(DLHError, ArithmeticError):
    pass


class NonPositiveDivergence(DLHError, ArithmeticError):
    pass


class DegenerateDenominator(DLHError, ArithmeticError):
    pass


class ConfigParse(DLHError):
    pass
