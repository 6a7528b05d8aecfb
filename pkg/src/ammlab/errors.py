"""Exception types shared across the pool engines and the numeric solvers."""
from __future__ import annotations


class AmmError(Exception):
    """Base class for every domain error raised by this package."""


class IdenticalAssets(AmmError):
    """A swap named the same asset as both input and output."""


class ReserveDepletion(AmmError):
    """A trade or liquidity change would drive a reserve to zero or below."""


class NoSolution(AmmError):
    """The implicit equation has no root in the admissible region."""


class ConvergenceFailure(AmmError):
    """An iterative solver exhausted its budget without meeting tolerance."""


class InvalidBracket(AmmError):
    """A root bracket whose endpoints do not straddle a sign change."""


class DegenerateGradient(AmmError):
    """A spot-rate denominator partial is numerically zero."""


class InfeasibleTrade(AmmError):
    """A nonzero input produced a zero output, leaving slippage undefined."""


class DomainError(AmmError):
    """An argument lies outside the mathematical domain of a formula."""


class SingularAmplification(AmmError):
    """The PMM quadratic branch was requested at A = 1, where its leading
    coefficient vanishes; callers should use the analytic limit instead."""


class NonPositiveState(AmmError):
    """A state quantity that must stay positive was given as zero or less."""


class SupplyDepletion(AmmError):
    """A sell asked for at least the whole outstanding token supply."""


class NotApplicable(AmmError):
    """The requested analysis is undefined for this pool family."""
