"""Stableswap engine: amplified interpolation between constant-sum and
constant-product markets.

The invariant D is the unique positive solution of

    A * (sum_k r_k / D - 1) = (D/n)^n / prod_k r_k - 1

where the amplification A already absorbs the conventional n^n factor.
Large A flattens the curve toward constant sum (spot rate pinned near 1,
D -> sum r_k); small A relaxes it toward the constant-product hyperbola
(D -> n * (prod r_k)^{1/n}).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import IdenticalAssets, InfeasibleTrade, NoSolution, ReserveDepletion
from .numerics import DEFAULT_CONFIG, RootBracket, SolverConfig, find_root


@dataclass(frozen=True)
class StableSwapParams:
    """Amplification and asset count; A is the n^n-absorbed coefficient."""

    amplification: float
    n: int = 2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.amplification) and self.amplification > 0.0):
            raise ValueError(f"amplification must be finite and positive, got {self.amplification}")
        if self.n < 2:
            raise ValueError("a pool needs at least two assets")


def _check_reserves(reserves) -> None:
    if len(reserves) < 2:
        raise ValueError("a pool needs at least two assets")
    if any(r <= 0.0 for r in reserves):
        raise ValueError(f"reserves must be positive, got {tuple(reserves)}")


def _polynomial_terms(reserves, D: float, amplification: float) -> tuple[float, float]:
    """g(D) and the sum of its term magnitudes, for backward-error residuals.

    g(D) = A*sum(r) + D - A*D - D^{n+1} / (n^n * prod(r)); the invariant is
    the positive root of g.
    """
    n = len(reserves)
    total = math.fsum(reserves)
    prod = math.prod(reserves)
    power = D * (D / n) ** n / prod
    terms = (amplification * total, D, amplification * D, power)
    return terms[0] + terms[1] - terms[2] - terms[3], sum(abs(t) for t in terms)


def conservation_residual(reserves, D: float, amplification: float) -> float:
    """Relative residual of the defining equation at (reserves, D):
    |g(D)| normalized by the magnitudes of g's terms. Zero on the curve."""
    _check_reserves(reserves)
    g, scale = _polynomial_terms(reserves, D, amplification)
    return abs(g) / max(scale, 1e-300)


def defining_residual(reserves, D: float, amplification: float) -> float:
    """Signed residual (D/n)^n/prod(r) - 1 - A*(sum(r)/D - 1), zero exactly
    on the curve and strictly decreasing in every reserve — the form handed
    to the generic numeric engine."""
    _check_reserves(reserves)
    n = len(reserves)
    total = math.fsum(reserves)
    prod = math.prod(reserves)
    return (D / n) ** n / prod - 1.0 - amplification * (total / D - 1.0)


def solve_invariant(
    reserves,
    amplification: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """The unique positive invariant D for the given reserves.

    AM-GM brackets the root inside [n*(prod r)^{1/n}, sum r], where g has
    opposite signs at the endpoints and is strictly decreasing; a balanced
    pool sits exactly at the upper endpoint and returns n*r directly.
    """
    _check_reserves(reserves)
    StableSwapParams(amplification, len(reserves))
    n = len(reserves)
    if min(reserves) == max(reserves):
        return n * reserves[0]
    total = math.fsum(reserves)
    geo = n * math.prod(reserves) ** (1.0 / n)

    def g(D: float) -> float:
        return _polynomial_terms(reserves, D, amplification)[0]

    g_lo, g_hi = g(geo), g(total)
    # analytically g(geo) >= 0 >= g(total); rounding can flip a near-zero
    # endpoint, in which case the endpoint already is the root
    if g_lo < 0.0:
        return geo
    if g_hi > 0.0:
        return total
    return find_root(
        g,
        RootBracket(geo, total, g_lo, g_hi),
        config.root_rel_tol,
        config.root_max_iterations,
    )


def stableswap_spot_rate(reserves, D: float, amplification: float, i: int, o: int) -> float:
    """Spot rate (token i per token o) on the amplified curve:
    r_i*(A*r_o*prod + D*q) / (r_o*(A*r_i*prod + D*q)) with q = (D/n)^n."""
    _check_reserves(reserves)
    if i == o:
        return 1.0
    n = len(reserves)
    prod = math.prod(reserves)
    dq = D * (D / n) ** n
    a_prod = amplification * prod
    return (reserves[i] * (a_prod * reserves[o] + dq)) / (
        reserves[o] * (a_prod * reserves[i] + dq)
    )


def stableswap_swap(reserves, D: float, amplification: float, i: int, o: int, x_in: float) -> float:
    """Output amount for adding x_in of asset i at fixed invariant D.

    The post-trade output reserve is the positive root of
    u^2 + (S0 - D*(1 - 1/A))*u - q*D/(A*P0) = 0, with S0 and P0 the sum and
    product of all non-output reserves after the input lands. Non-traded
    reserves stay untouched.
    """
    _check_reserves(reserves)
    if i == o:
        raise IdenticalAssets("input and output asset must differ")
    r_in_new = reserves[i] + x_in
    if r_in_new <= 0.0:
        raise ReserveDepletion(f"input {x_in} exhausts reserve {reserves[i]}")
    if x_in == 0.0:
        return 0.0
    n = len(reserves)
    s0 = 0.0
    p0 = 1.0
    for k, r in enumerate(reserves):
        if k == o:
            continue
        val = r_in_new if k == i else r
        s0 += val
        p0 *= val
    b = s0 - D * (1.0 - 1.0 / amplification)
    c = (D / n) ** n * D / (amplification * p0)
    disc = b * b + 4.0 * c
    if disc < 0.0:
        raise NoSolution("swap quadratic has no real root")
    # stable two-root form of u^2 + b*u - c = 0; the roots have opposite
    # signs (product -c < 0), keep the positive one
    q_half = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    root = max(q_half, -c / q_half)
    if not (root > 0.0 and math.isfinite(root)):
        raise NoSolution(f"swap quadratic produced a non-positive reserve {root}")
    return reserves[o] - root


def stableswap_slippage(reserves, D: float, amplification: float, i: int, o: int, x_in: float) -> float:
    """S = (x_in/x_out)/E - 1 against the pre-trade spot rate. Zero trade
    has zero slippage by convention."""
    if x_in == 0.0:
        return 0.0
    x_out = stableswap_swap(reserves, D, amplification, i, o, x_in)
    if x_out == 0.0:
        raise InfeasibleTrade(f"input {x_in} produced zero output; slippage undefined")
    rate = stableswap_spot_rate(reserves, D, amplification, i, o)
    return (x_in / x_out) / rate - 1.0
