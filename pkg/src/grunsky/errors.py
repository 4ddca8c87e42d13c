"""Exception types shared across the package."""


class GrunskyError(Exception):
    """Base class for every failure raised by this package."""


# series arithmetic
class DivisionByNonUnit(GrunskyError, ZeroDivisionError):
    pass


class NotUnit(GrunskyError, ValueError):
    pass


class NotComposable(GrunskyError, ValueError):
    pass


class NotInvertible(GrunskyError, ValueError):
    pass


# pairs and operators
class VanishingDerivative(GrunskyError, ValueError):
    pass


class DomainViolation(GrunskyError, ValueError):
    pass


class InconsistentBlocks(GrunskyError, ValueError):
    pass


class NotSymmetric(GrunskyError, ValueError):
    pass


class SingularScaling(GrunskyError, ValueError):
    pass


class NormAtLeastOne(GrunskyError, ValueError):
    pass


# solvers
class SolverError(GrunskyError, RuntimeError):
    """Raised when a numerical solver cannot produce a trustworthy result."""


class NoConvergence(SolverError):
    pass


class TheodorsenConditionViolated(SolverError):
    pass


class MonotonicityLost(SolverError):
    pass


class AliasingSuspected(SolverError):
    pass


class IllConditioned(SolverError):
    pass


class StepTooSmall(SolverError):
    pass
