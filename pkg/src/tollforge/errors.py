"""Exception hierarchy.

Validation errors (bad input, violated hypotheses) and numerical errors
(solver trouble) are kept apart so the CLI can map them to distinct exit codes.
"""


class TollforgeError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(TollforgeError, ValueError):
    """Input does not satisfy an operation's preconditions."""


class NumericalError(TollforgeError, ArithmeticError):
    """A computation failed for numerical reasons."""


# lp
class LpError(NumericalError):
    pass


class NumericalFailure(LpError):
    """Pivoting cycled, hit the iteration cap, or lost accuracy; rescale the instance."""


class MalformedLp(ValidationError):
    pass


# basis
class BasisOverflow(ValidationError, OverflowError):
    """x**d is not representable as a finite float for some x <= n."""


class IncompatibleBases(ValidationError):
    pass


# poa / design
class UnboundedPoa(NumericalError):
    """rho* <= 0: the mechanism has unbounded inefficiency."""


class NotMonotone(ValidationError):
    pass


class HypothesisViolation(ValidationError):
    pass


class NoFixedPoint(NumericalError):
    pass


class LengthMismatch(ValidationError):
    pass


class NegativityViolation(NumericalError):
    pass


class DegenerateNu(NumericalError):
    pass


# largen
class NoFiniteGamma(ValidationError):
    pass


# oracle
class TooLarge(ValidationError):
    pass


class IrrationalDual(NumericalError):
    pass


class NoEquilibrium(NumericalError):
    pass
