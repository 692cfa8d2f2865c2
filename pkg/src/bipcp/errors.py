"""Exception hierarchy shared by every module."""


class BipcpError(Exception):
    """Base class for all package errors."""


class InvalidInput(BipcpError, ValueError):
    pass


# phase
class GammaOutOfRange(InvalidInput):
    pass


class SubcriticalPair(InvalidInput):
    pass


class NonpositiveA(InvalidInput):
    pass


class LambdaOutOfRange(InvalidInput):
    pass


class BadB(InvalidInput):
    pass


class EmptyGrid(InvalidInput):
    pass


# hypergraph
class BadRootSpec(InvalidInput):
    pass


class WindowTooSmall(InvalidInput):
    pass


class SameTypePair(InvalidInput):
    pass


class UnknownId(BipcpError, KeyError):
    pass


class InsufficientData(InvalidInput):
    pass


class BadBand(InvalidInput):
    pass


class BadThreshold(InvalidInput):
    pass


# contact
class EmptyInitialSet(InvalidInput):
    pass


class EventCapExceeded(BipcpError):
    """Raised only on request; by default the capped outcome is returned with a flag."""

    def __init__(self, message, outcome=None):
        super().__init__(message)
        self.outcome = outcome


class BadLeafCount(InvalidInput):
    pass


class InvalidTrace(InvalidInput):
    pass


# combinatorics
class LengthTooLarge(InvalidInput):
    pass


class BadRange(InvalidInput):
    pass


class InvalidPath(InvalidInput):
    pass


class BadDistinguishedLeaf(InvalidInput):
    pass


class PreconditionViolated(InvalidInput):
    pass


class StuckTree(BipcpError, RuntimeError):
    pass


class InvalidColouringForPath(InvalidInput):
    pass


# harness
class TooFewPoints(InvalidInput):
    pass


class ZeroTheta(InvalidInput):
    pass


class UnsupportedFormat(InvalidInput):
    pass
