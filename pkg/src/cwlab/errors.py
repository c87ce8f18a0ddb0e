"""Exception types shared across the laboratory.

Each class carries the process exit code used by the command-line front end:
2 for invalid requests, 3 for numeric failures, 4 for exhausted horizons.
"""


class CwlabError(Exception):
    """Base class for all laboratory errors."""

    exit_code = 3


class SpecError(CwlabError):
    """An experiment specification is malformed or inconsistent."""

    exit_code = 2


class NoPositiveRoot(CwlabError):
    """tanh(beta*x) = x has no root in (0, 1] (requires beta > 1)."""

    exit_code = 2


class OutsideRegime(CwlabError):
    """Cutoff schedule requested where delta^2 * n <= 1, so log(delta^2 n) <= 0."""

    exit_code = 2


class TooLarge(CwlabError):
    """Brute-force enumeration requested beyond its supported size."""

    exit_code = 2


class Reducible(CwlabError):
    """A birth-and-death kernel has a vanishing interior transition rate."""


class NotReversible(CwlabError):
    """Detailed balance fails beyond tolerance for a kernel that must satisfy it."""


class NumericFailure(CwlabError):
    """Overflow or loss of precision that invalidates a computed quantity."""


class HorizonExhausted(CwlabError):
    """Base class for runs that hit their step budget before finishing."""

    exit_code = 4


class NeedLargerHorizon(HorizonExhausted):
    """A mixing-time query could not be bracketed within the computed profile."""


class NotCoalesced(HorizonExhausted):
    """A coupling did not coalesce within the allowed number of steps."""


class NotHit(HorizonExhausted):
    """A hitting-time run did not reach its threshold within the allowed steps."""


class OrderViolation(CwlabError):
    """A monotone-pair update was asked to preserve an ordering that does not hold."""
