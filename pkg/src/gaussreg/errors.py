"""Exception types raised across the package."""


class GaussRegError(Exception):
    """Base class for all package errors."""


class NonFiniteValue(GaussRegError, ValueError):
    """An integrand or mapping produced NaN or an infinity."""


class DimensionMismatch(GaussRegError, ValueError):
    pass


class EmptyMeasure(GaussRegError, ValueError):
    pass


class LpInfeasible(GaussRegError, RuntimeError):
    """The LP solver did not return an optimum (signals solver failure)."""


class SupportTooLarge(GaussRegError, ValueError):
    pass


class MassNotBalanced(GaussRegError, ValueError):
    pass


class UnknownDensity(GaussRegError, KeyError):
    pass


class UnknownMap(GaussRegError, KeyError):
    pass


class DegenerateFit(GaussRegError, ValueError):
    pass


class MomentDiverged(GaussRegError, ArithmeticError):
    pass


class ConfigParse(GaussRegError, ValueError):
    pass
