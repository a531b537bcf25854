"""Error hierarchy shared by the library modules and the management commands.

Validation errors map to exit status 2 on the command line, numerical
failures to exit status 3.
"""


class FellerLdpError(Exception):
    """Root of every error raised by feller_ldp."""


class ValidationError(FellerLdpError, ValueError):
    """The request itself is invalid: bad parameters or an argument outside its support."""


class NumericalError(FellerLdpError, ArithmeticError):
    """A well-posed request on which a numerical procedure failed."""


class ParameterOutOfRange(ValidationError):
    def __init__(self, name: str, value: float, constraint: str):
        self.name = name
        self.value = value
        self.constraint = constraint
        super().__init__(f"{name}={value!r} violates {constraint}")


class FellerIndexTooSmall(ValidationError):
    def __init__(self, mu: float):
        self.mu = mu
        super().__init__(f"mu = 2a/xi^2 = {mu:.6g} must exceed 1")


class OutsideSupport(ValidationError):
    pass


class MissingPrefactor(ValidationError):
    pass


class ProbabilityTooSmallForN(ValidationError):
    pass


class RootNotBracketed(NumericalError):
    pass


class NonRealResult(NumericalError):
    pass


class TooCloseToBoundary(NumericalError):
    pass


class IntegrandNotDecaying(NumericalError):
    pass


class NonPositiveSaddle(NumericalError):
    pass


class UnboundedAbove(NumericalError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, message: str, best=None):
        self.best = best
        super().__init__(message)
