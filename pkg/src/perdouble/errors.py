"""Exception hierarchy.

Two families matter to callers: ``NumericFailure`` (an iteration or root
search did not deliver) and ``InvariantViolation`` (a result was produced
but breaks a structural property it must have).  Bad arguments raise
``ValueError`` subclasses.
"""


class RenormError(Exception):
    pass


class NumericFailure(RenormError):
    pass


class InvariantViolation(RenormError):
    pass


# -- fixed point ------------------------------------------------------------

class NonConvergence(NumericFailure):
    pass


class ConcavityViolation(InvariantViolation):
    pass


class DomainExceeded(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class RootBracketFailure(NumericFailure):
    pass


# -- induced map ------------------------------------------------------------

class GeometryViolation(InvariantViolation):
    pass


class OutsideBranches(ValueError):
    pass


class DepthExceeded(ValueError):
    pass


class ContractionStall(NumericFailure):
    pass


# -- finite rank ------------------------------------------------------------

class CombinatoricsMismatch(InvariantViolation):
    pass


class IncidenceMismatch(InvariantViolation):
    pass


class IterationLimit(NumericFailure):
    pass


class ConeEscape(InvariantViolation):
    pass


# -- transfer operator ------------------------------------------------------

class EigensolveFailure(NumericFailure):
    pass
