"""Exception hierarchy. Every error raised by the package derives from SubgaussError."""


class SubgaussError(Exception):
    pass


class InvalidParam(SubgaussError, ValueError):
    pass


class DimensionMismatch(SubgaussError, ValueError):
    pass


class Unsupported(SubgaussError):
    pass


class NoInteriorPoint(SubgaussError):
    pass


class BadBurnIn(SubgaussError, ValueError):
    pass


class InsufficientSamples(SubgaussError, ValueError):
    pass


class SingularCovariance(SubgaussError):
    pass


class DependentInput(SubgaussError, ValueError):
    pass


class PTooLargeForBudget(SubgaussError, ValueError):
    pass


class EmptyProfile(SubgaussError, ValueError):
    pass


class QOutOfRange(SubgaussError, ValueError):
    pass


class DimensionTooSmall(SubgaussError, ValueError):
    pass


class BudgetExhausted(SubgaussError):
    """Raised by the greedy search; ``partial`` holds the directions found so far."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class AsymmetricInput(SubgaussError, ValueError):
    pass


class UnresolvableMass(SubgaussError):
    pass


class InvalidMoments(SubgaussError):
    pass


class NoSupportFunction(SubgaussError):
    pass
