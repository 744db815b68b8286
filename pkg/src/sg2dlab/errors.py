"""Exception and warning types shared across the package."""


class Sg2dError(Exception):
    """Base class for all package errors."""


class DomainError(Sg2dError, ValueError):
    """Constant term of a jet lies outside the domain of an elementary function."""


class DivisionBySingularJet(Sg2dError, ZeroDivisionError):
    """Divisor jet has a (numerically) vanishing constant term."""


class DegenerateJet(Sg2dError, ValueError):
    """A jet lacks the nonvanishing derivative an operation needs."""


class BranchWarning(UserWarning):
    """A log/sqrt/power argument sits close to the principal branch cut."""


class InvalidSigma(Sg2dError, ValueError):
    pass


class RootFindingFailure(Sg2dError, ArithmeticError):
    pass


class SingularPoint(Sg2dError, ValueError):
    """State sits on (or too close to) a pole of the ODE coefficients."""


class CoefficientPole(Sg2dError, ValueError):
    pass


class SingularValue(Sg2dError, ValueError):
    """Dependent variable hits a fixed singular value of a Painleve equation."""


class GuardViolation(Sg2dError, ValueError):
    """Constants do not satisfy the guard of the requested integration case."""


class ChainRuleSingularity(Sg2dError, ValueError):
    pass


class StepSizeUnderflow(Sg2dError, ArithmeticError):
    def __init__(self, msg, s=None):
        super().__init__(msg)
        self.s = s


class ToleranceNotMet(Sg2dError, ArithmeticError):
    pass


class OutOfRange(Sg2dError, ValueError):
    pass


class SingularLocus(Sg2dError, ValueError):
    pass


class ZeroWronskian(Sg2dError, ValueError):
    pass


class ConstraintUnsatisfiable(Sg2dError, ValueError):
    pass


class DegenerateTimeFunctions(Sg2dError, ValueError):
    pass


class PoleAtSample(Sg2dError, ValueError):
    pass


class MissingAntiderivative(Sg2dError, LookupError):
    """Requested a value of v that needs the t-antiderivative of the v-correction."""


class ConfigError(Sg2dError, ValueError):
    pass
