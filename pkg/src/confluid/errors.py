"""Exception hierarchy.

Every error raised by the library derives from :class:`ConfluidError`. Invalid
parameters are also ``ValueError`` and domain violations are also
``ArithmeticError`` so callers that do not know the hierarchy still catch them.
"""


class ConfluidError(Exception):
    pass


class InvalidParameter(ConfluidError, ValueError):
    pass


class NotHalfInteger(InvalidParameter):
    pass


class NonPositive(InvalidParameter):
    pass


class EllTooLarge(InvalidParameter):
    pass


class InadmissibleEll(InvalidParameter):
    pass


class DynamicalExponentOutOfRange(InvalidParameter):
    pass


# Name used by the generator constructors.
InvalidDynamicalExponent = DynamicalExponentOutOfRange


class OutOfRangeAccelerationIndex(InvalidParameter):
    pass


class ParameterMismatch(InvalidParameter):
    pass


class AccelerationConstraintError(InvalidParameter):
    """Constants of an acceleration-family velocity violate the Euler constraint."""


class NoBoundedSolution(InvalidParameter):
    """Requested acceleration-family velocity grows without bound in time."""


class DomainError(ConfluidError, ArithmeticError):
    pass


class DomainExceeded(DomainError):
    pass


class NonPositiveDensity(DomainError):
    pass


class NonPositiveDensityDomain(DomainError):
    pass


class EmptyPositivityDomain(DomainError):
    pass


class BranchCollision(DomainError):
    pass


class PoleInDomain(DomainError):
    pass


class DepthExceeded(ConfluidError, ValueError):
    pass


class NoRootInBracket(ConfluidError, ArithmeticError):
    pass


class AmbiguousRoot(ConfluidError, ArithmeticError):
    """A transcendental relation has more than one admissible root."""
