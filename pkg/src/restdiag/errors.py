"""Exception hierarchy shared by every module of the package."""


class RestdiagError(Exception):
    """Base class for all errors raised by this package."""


class InvalidSpectrumError(RestdiagError, ValueError):
    """A spectrum list is empty or contains repeated points."""


class DomainError(RestdiagError, ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericInputError(RestdiagError, ValueError):
    """A float matrix contains NaN or infinite entries."""


class ShapeError(RestdiagError, ValueError):
    """Matrix or operator dimensions are incompatible."""


class ValidationError(RestdiagError, ValueError):
    """A model object failed one of its construction invariants."""


class NoSeparatingLineError(DomainError):
    """The requested point is not a vertex of the convex hull."""


class PreconditionError(RestdiagError, ValueError):
    """A documented precondition of an operation does not hold."""


class NotCompactError(RestdiagError, ValueError):
    """Two model operators do not agree on their tails eventually.

    In the eventually-diagonal model this is exactly the case where the
    difference fails to be compact, so essential codimension is undefined.
    """


class NotTraceClassError(NotCompactError):
    """The diagonal difference of two model operators is not trace-class."""


class ObstructionError(RestdiagError):
    """A pair of projections has nonzero essential codimension.

    Attributes:
        index: position of the offending pair in the input list.
        codimension: the nonzero essential codimension found there.
    """

    def __init__(self, index, codimension):
        self.index = index
        self.codimension = codimension
        super().__init__(
            f"pair {index} has essential codimension {codimension} != 0; "
            "no unitary I+K conjugates these projections"
        )


class ToleranceError(RestdiagError, ArithmeticError):
    """A float postcondition missed its tolerance."""


class IllConditionedWarning(RuntimeWarning):
    """A numeric rank decision was close to the tolerance threshold."""


class ParseError(RestdiagError, ValueError):
    """An input file is malformed; the message names the file and the line or field."""


class UsageError(RestdiagError, ValueError):
    """Command-line arguments are out of range or inconsistent."""
