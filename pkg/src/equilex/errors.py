"""Exception hierarchy shared by every module."""


class EquilexError(Exception):
    """Base class for all construction failures."""


class DimensionError(EquilexError, ValueError):
    pass


class NonFiniteError(EquilexError, ValueError):
    pass


class ZeroVectorError(EquilexError, ValueError):
    """Duality map requested at the origin."""


class NonSmoothPoint(EquilexError):
    """One-sided derivatives of a custom norm disagree."""


class NonStabilizing(EquilexError):
    """A tail window did not settle within tolerance."""

    def __init__(self, message, spread=None, values=None):
        super().__init__(message)
        self.spread = spread
        self.values = values


class LambdaTooSmall(EquilexError):
    pass


class RootBracketError(EquilexError):
    pass


class DivisionGuard(EquilexError):
    pass


class SingularMatrix(EquilexError, ArithmeticError):
    pass


class GuardFailed(EquilexError):
    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class NoConvergence(EquilexError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class LeftDomain(EquilexError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ExhaustedPool(EquilexError):
    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = attempts or []


class InvariantViolation(EquilexError):
    def __init__(self, message, prop=None, measured=None):
        super().__init__(message)
        self.prop = prop
        self.measured = measured


class ConfigError(EquilexError, ValueError):
    pass
