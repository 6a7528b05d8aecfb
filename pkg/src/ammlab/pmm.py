"""Proactive-market-making engine: oracle-anchored pricing with equilibrium
targets.

The pool quotes around an external oracle price P (asset-1 units per unit of
asset 2) and a pair of equilibrium targets (C1, C2). Reserves move along the
piecewise conservation curve through (C1, C2):

    r1 >= C1:  r1 - C1 = P * (C2 - r2) * (1 + A*(C2/r2 - 1))
    r1 <= C1:  r2 - C2 = (C1 - r1) * (1 + A*(C1/r1 - 1)) / P

with A in (0, 1] weighting how hard the rate leans away from P as the pool
leaves equilibrium. A -> 0 pins the rate at P; A = 1 collapses the curve to
the constant-product hyperbola r1*r2 = C1*C2.

Asset indices: reserve 1 is asset 0, reserve 2 is asset 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleTrade, ReserveDepletion, SingularAmplification


@dataclass(frozen=True)
class PMMParams:
    """Oracle price, deviation weight A, and the equilibrium targets."""

    oracle_price: float
    amplification: float
    target1: float
    target2: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.oracle_price) and self.oracle_price > 0.0):
            raise ValueError(f"oracle price must be finite and positive, got {self.oracle_price}")
        if not (math.isfinite(self.amplification) and 0.0 < self.amplification <= 1.0):
            raise ValueError(f"amplification must lie in (0, 1], got {self.amplification}")
        if self.target1 <= 0.0 or self.target2 <= 0.0:
            raise ValueError(
                f"equilibrium targets must be positive, got ({self.target1}, {self.target2})"
            )

    def mirrored(self) -> "PMMParams":
        """The same pool with the two assets relabeled (price inverted);
        the conservation curve is symmetric under this relabeling."""
        return PMMParams(
            oracle_price=1.0 / self.oracle_price,
            amplification=self.amplification,
            target1=self.target2,
            target2=self.target1,
        )


def _check_reserves(r1: float, r2: float) -> None:
    if r1 <= 0.0 or r2 <= 0.0:
        raise ValueError(f"reserves must be positive, got ({r1}, {r2})")


def pmm_spot_rate(r1: float, r2: float, params: PMMParams) -> float:
    """Spot rate (asset-1 units per asset 2), the oracle price scaled by the
    pool-composition adjustment; equals P exactly at equilibrium."""
    _check_reserves(r1, r2)
    a = params.amplification
    if r1 >= params.target1:
        return params.oracle_price * (1.0 + a * ((params.target2 / r2) ** 2 - 1.0))
    return params.oracle_price / (1.0 + a * ((params.target1 / r1) ** 2 - 1.0))


def conservation_gap(r1: float, r2: float, params: PMMParams) -> float:
    """Signed residual of the conservation relation, in asset-1 units on both
    branches (the r1 <= C1 branch is multiplied through by P, which keeps the
    residual's gradient continuous at the equilibrium point). Zero exactly on
    the curve."""
    _check_reserves(r1, r2)
    p, a = params.oracle_price, params.amplification
    c1, c2 = params.target1, params.target2
    if r1 >= c1:
        return (r1 - c1) - p * (c2 - r2) * (1.0 + a * (c2 / r2 - 1.0))
    return p * (r2 - c2) - (c1 - r1) * (1.0 + a * (c1 / r1 - 1.0))


def conservation_residual(r1: float, r2: float, params: PMMParams) -> float:
    """|conservation_gap| relative to the pool's value scale C1 + P*C2."""
    scale = params.target1 + params.oracle_price * params.target2
    return abs(conservation_gap(r1, r2, params)) / scale


def quadratic_branch_reserve2(r1_new: float, params: PMMParams) -> float:
    """Post-trade reserve 2 on the r1 >= C1 branch: the positive root of
    P*(1-A)*u^2 + (r1' - C1 - P*C2*(1-2A))*u - P*A*C2^2 = 0.

    At A = 1 the leading coefficient vanishes; use the analytic limit via
    reserve2_given_reserve1 instead.
    """
    p, a = params.oracle_price, params.amplification
    c1, c2 = params.target1, params.target2
    lead = p * (1.0 - a)
    if lead == 0.0:
        raise SingularAmplification(
            "quadratic branch undefined at A = 1; evaluate the constant-product limit"
        )
    b = (r1_new - c1) - p * c2 * (1.0 - 2.0 * a)
    c = -p * a * c2 * c2
    disc = b * b - 4.0 * lead * c
    # stable two-root form; the roots have opposite signs (c/lead < 0)
    q_half = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    return max(q_half / lead, c / q_half)


def reserve2_given_reserve1(r1_new: float, params: PMMParams) -> float:
    """The reserve-2 value paired with r1_new on the conservation curve."""
    if r1_new <= 0.0:
        raise ValueError(f"reserve must stay positive, got {r1_new}")
    p, a = params.oracle_price, params.amplification
    c1, c2 = params.target1, params.target2
    if r1_new >= c1:
        if a == 1.0:
            # removable singularity: the curve is r1*r2 = C1*C2 exactly
            return p * c2 * c2 / (r1_new - c1 + p * c2)
        return quadratic_branch_reserve2(r1_new, params)
    return c2 + (c1 - r1_new) * (1.0 + a * (c1 / r1_new - 1.0)) / p


def pmm_swap(r1: float, r2: float, params: PMMParams, x1: float) -> float:
    """Output of asset 2 for adding x1 of asset 1, moving along the
    conservation curve; the branch is chosen by the post-trade reserve, so
    trades crossing the equilibrium point are handled by their endpoint.
    Negative x1 is the reverse-trade convention."""
    _check_reserves(r1, r2)
    r1_new = r1 + x1
    if r1_new <= 0.0:
        raise ReserveDepletion(f"input {x1} exhausts reserve {r1}")
    if x1 == 0.0:
        return 0.0
    return r2 - reserve2_given_reserve1(r1_new, params)


def pmm_slippage(r1: float, r2: float, params: PMMParams, x1: float) -> float:
    """S = (x1/x2)/E - 1 against the pre-trade spot rate. Zero trade has
    zero slippage by convention."""
    if x1 == 0.0:
        return 0.0
    x2 = pmm_swap(r1, r2, params, x1)
    if x2 == 0.0:
        raise InfeasibleTrade(f"input {x1} produced zero output; slippage undefined")
    return (x1 / x2) / pmm_spot_rate(r1, r2, params) - 1.0
