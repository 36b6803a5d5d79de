"""Exception hierarchy.

Every error carries an ``exit_code`` so the CLI can map it without a lookup
table: 1 for bad input, 2 for a failed exact identity, 3 for resource limits.
"""

from __future__ import annotations


class AbeliaError(Exception):
    exit_code = 1


class InvalidParams(AbeliaError, ValueError):
    pass


# abelian_fields
class NotAUnit(InvalidParams):
    pass


class WrongQuotient(InvalidParams):
    pass


class NotMinimalConductor(InvalidParams):
    pass


class RankOutOfRange(InvalidParams):
    pass


class WrongShape(InvalidParams):
    pass


# group_module_algebra
class NotFaithful(InvalidParams):
    pass


# quadratic_class_groups
class PerfectSquare(InvalidParams):
    pass


class NotFundamental(InvalidParams):
    pass


class DiscMismatch(InvalidParams):
    pass


class EvenEllRealField(InvalidParams):
    pass


class EvenEll(InvalidParams):
    pass


# prime_counting
class NotCoprime(InvalidParams):
    pass


class RangeViolation(InvalidParams):
    pass


# bound_calculus
class EtaBelowThreshold(InvalidParams):
    pass


class RegimeMismatch(InvalidParams):
    pass


class IdentityFailure(AbeliaError):
    """An exact identity did not hold: always a bug."""

    exit_code = 2


class ResourceError(AbeliaError):
    exit_code = 3


class BudgetExceeded(ResourceError):
    pass


class BoundExceeded(ResourceError):
    pass


class SieveTooSmall(ResourceError):
    pass


class CacheError(ResourceError):
    pass
