"""
Majlab Errors

Domain exceptions. Usage and input problems exit with 1, certified
negative verdicts with 2.
"""

from core.errors import RunError


class MajlabError(RunError, ValueError):
    """Root of every majlab error."""


class CertifiedNegative(MajlabError):
    """A verdict that is a mathematical 'no', not a usage problem."""
    exit_code = 2


# ══════════════════════════════════════════════════════════════════════════════
#  INPUT VALIDATION
# ══════════════════════════════════════════════════════════════════════════════

class DimensionMismatch(MajlabError):
    pass


class OutOfRange(MajlabError):
    pass


class NotRational(MajlabError):
    pass


class BadWeights(MajlabError):
    pass


class NotSquare(MajlabError):
    pass


class BadBlockStructure(MajlabError):
    pass


class NotCommuting(MajlabError):
    pass


class NotDoublyStochastic(MajlabError):
    pass


class NormTooLarge(MajlabError):
    pass


class NotASimplex(MajlabError):
    pass


class InvalidPartition(MajlabError):
    pass


class InvalidWitness(MajlabError):
    pass


class PairingInvalid(MajlabError):
    pass


class NotInHull(MajlabError):
    pass


class NotInterior(MajlabError):
    pass


class DegenerateHull(MajlabError):
    pass


# ══════════════════════════════════════════════════════════════════════════════
#  RESOLUTION AND TRUNCATION
# ══════════════════════════════════════════════════════════════════════════════

class ResolutionInsufficient(MajlabError):
    """A trace the construction needs is not a whole number of cells."""

    def __init__(self, message: str = "", needed=None, **details):
        super().__init__(message, needed=needed, **details)
        self.needed = needed


class TruncationTooSmall(MajlabError):
    pass


class NoRationalCombination(MajlabError):
    pass


class UnsupportedIrrationalVertices(MajlabError):
    pass


# ══════════════════════════════════════════════════════════════════════════════
#  CERTIFIED NEGATIVES
# ══════════════════════════════════════════════════════════════════════════════

class NotMajorized(CertifiedNegative):
    pass


class NotApproxMajorized(CertifiedNegative):
    pass


class NotAContraction(CertifiedNegative):
    pass


# ══════════════════════════════════════════════════════════════════════════════
#  BUGS AND NUMERICAL DEGENERACY
# ══════════════════════════════════════════════════════════════════════════════

class NoPerfectMatching(MajlabError):
    pass


class InternalInconsistency(MajlabError):
    pass
