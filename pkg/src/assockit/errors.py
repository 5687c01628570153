"""Exception types raised across assockit.

Every error derives from :class:`AssocError` (itself a ``ValueError``) so
callers can catch the whole family at once.
"""


class AssocError(ValueError):
    pass


# tables
class DimensionMismatch(AssocError):
    pass


class DuplicateLabel(AssocError):
    pass


class NegativeCount(AssocError):
    pass


class EmptyTable(AssocError):
    pass


class ZeroMargin(AssocError):
    """A row or column of the table sums to zero."""

    def __init__(self, axis, label):
        self.axis = axis
        self.label = label
        super().__init__(f"{axis} {label!r} has a zero margin; prune it before testing")


class IndexOutOfRange(AssocError, IndexError):
    pass


# numerics
class InvalidDomain(AssocError):
    pass


class NonFiniteInput(AssocError):
    pass


# tests / power
class YatesOnNon2x2(AssocError):
    pass


class NotTwoByTwo(AssocError):
    pass


class TooFewReplicates(AssocError):
    pass


class Unachievable(AssocError):
    pass


# correspondence analysis
class TooManyDimensions(AssocError):
    pass


class DimensionUnavailable(AssocError):
    pass


# configuration comparison
class LabelMismatch(AssocError):
    def __init__(self, message, label=None):
        self.label = label
        super().__init__(message)


class DegenerateConfiguration(AssocError):
    pass


class KOutOfRange(AssocError):
    pass


class AsymmetricDistances(AssocError):
    pass


class TooFewItems(AssocError):
    pass


# salience / reliability
class EmptyInput(AssocError):
    pass


class DegenerateMarginals(AssocError):
    pass


class NoPairableValues(AssocError):
    pass


# io
class ParseError(AssocError):
    pass
