"""Closed forms for weighted geometric-mean pools.

The conservation law is C(r) = prod_k r_k^{w_k} with fixed positive weights
summing to 1. A two-asset pool with w = (1/2, 1/2) is the classic constant
product market (its invariant is the square root of r1*r2, a monotone
relabeling, so all trade math agrees); the general case covers weighted
multi-asset pools. Asset 0 serves as the numeraire for divergence loss.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, IdenticalAssets, InfeasibleTrade, ReserveDepletion

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class WeightedPoolParams:
    """Immutable pool weights, one per asset, positive and summing to 1."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.weights) < 2:
            raise ValueError("a pool needs at least two assets")
        if any(not 0.0 < w < 1.0 for w in self.weights):
            raise ValueError(f"every weight must lie in (0, 1), got {self.weights}")
        if abs(math.fsum(self.weights) - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {self.weights}")


def _check_shape(reserves, weights) -> None:
    if len(reserves) != len(weights):
        raise ValueError(f"{len(reserves)} reserves vs {len(weights)} weights")
    if any(r <= 0.0 for r in reserves):
        raise ValueError(f"reserves must be positive, got {tuple(reserves)}")


def weighted_conservation(reserves, weights) -> float:
    """Invariant value prod_k r_k^{w_k}."""
    _check_shape(reserves, weights)
    out = 1.0
    for r, w in zip(reserves, weights):
        out *= r**w
    return out


def weighted_spot_rate(reserves, weights, i: int, o: int) -> float:
    """Spot rate (token i per token o): (r_i * w_o) / (r_o * w_i)."""
    _check_shape(reserves, weights)
    if i == o:
        return 1.0
    return (reserves[i] * weights[o]) / (reserves[o] * weights[i])


def weighted_swap(reserves, weights, i: int, o: int, x_in: float) -> float:
    """Output amount for adding x_in of asset i: the output reserve moves to
    r_o * (r_i / (r_i + x_in))^{w_i/w_o}, all other reserves untouched.

    Negative x_in is the reverse-trade convention (the trader receives asset
    i) and produces a negative output, meaning asset o is paid in.
    """
    _check_shape(reserves, weights)
    if i == o:
        raise IdenticalAssets("input and output asset must differ")
    r_in_new = reserves[i] + x_in
    if r_in_new <= 0.0:
        raise ReserveDepletion(f"input {x_in} exhausts reserve {reserves[i]}")
    ratio = reserves[i] / r_in_new
    return reserves[o] * (1.0 - ratio ** (weights[i] / weights[o]))


def weighted_slippage(reserves, weights, i: int, o: int, x_in: float) -> float:
    """Relative excess of the realized rate over the pre-trade spot rate,
    S = (x_in/x_out)/E - 1. Zero trade has zero slippage by convention."""
    if x_in == 0.0:
        return 0.0
    x_out = weighted_swap(reserves, weights, i, o, x_in)
    if x_out == 0.0:
        raise InfeasibleTrade(f"input {x_in} produced zero output; slippage undefined")
    rate = weighted_spot_rate(reserves, weights, i, o)
    return (x_in / x_out) / rate - 1.0


def weighted_divergence_loss(weights, o: int, rho: float) -> float:
    """Loss of pooled value versus holding when asset o appreciates by rho:
    L = (1+rho)^{w_o} / (1 + w_o*rho) - 1, which is <= 0 with equality only
    at rho = 0 (weighted AM-GM)."""
    if not 0 <= o < len(weights):
        raise IndexError(f"asset index {o} out of range for {len(weights)} assets")
    if rho <= -1.0:
        raise DomainError(f"price shift must exceed -1, got {rho}")
    w = weights[o]
    return (1.0 + rho) ** w / (1.0 + w * rho) - 1.0


def weighted_rebalanced_reserves(reserves, weights, o: int, rho: float) -> tuple[float, ...]:
    """Reserves after arbitrage restores equilibrium at the shifted price:
    r_o scales by (1+rho)^{w_o - 1}, every other reserve by (1+rho)^{w_o}.
    This leaves the invariant unchanged and moves every spot rate against o
    by exactly (1+rho)."""
    _check_shape(reserves, weights)
    if rho <= -1.0:
        raise DomainError(f"price shift must exceed -1, got {rho}")
    grow = (1.0 + rho) ** weights[o]
    return tuple(
        r * grow / (1.0 + rho) if k == o else r * grow for k, r in enumerate(reserves)
    )
