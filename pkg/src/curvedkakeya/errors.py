"""Exception types raised across the package."""


class CurvedKakeyaError(Exception):
    """Base class for all package errors."""


# polycore
class NonSquare(CurvedKakeyaError):
    pass


class ShapeMismatch(CurvedKakeyaError):
    pass


class ZeroPolynomial(CurvedKakeyaError):
    pass


class SingularMatrix(CurvedKakeyaError):
    pass


# family checker
class AllMinorsZero(CurvedKakeyaError):
    """M(t) has rank < 2 for every t: every 2-plane is a witness."""


class WitnessReconstructionFailed(CurvedKakeyaError):
    pass


# geometry / bench
class ZeroVector(CurvedKakeyaError):
    pass


class MixedDelta(CurvedKakeyaError):
    pass


class EmptyCell(CurvedKakeyaError):
    pass


class LadderTooShort(CurvedKakeyaError):
    pass


# projection lab
class InfeasibleExponent(CurvedKakeyaError):
    pass


class TooFewScales(CurvedKakeyaError):
    pass


# io
class ParseError(CurvedKakeyaError):
    pass


class EmptyVector(ParseError):
    pass


class InvariantViolation(CurvedKakeyaError):
    """An internal consistency check failed (maps to exit code 4)."""
