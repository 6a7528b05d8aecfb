"""Bonding-curve exchange: a reserve-backed token whose price is a power
function of its supply.

The connector reserve C and token supply s are tied by a fixed reserve ratio
F in (0, 1]:

    P(s) = C / (F * s)          spot price, reserve units per token
    C(s) = C0 * (s / s0)^(1/F)  reserve as a function of supply

Buying deposits reserve and mints tokens; selling burns tokens and releases
reserve. Both closed forms below are exact integrals of the price curve, so a
buy followed by a sell of the minted amount returns the state to where it
began (up to rounding). F = 1 is the degenerate constant-price case.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import NonPositiveState, SupplyDepletion


@dataclass(frozen=True)
class BondingCurveState:
    """Current reserve/supply plus the construction-time anchor pair used for
    consistency checks of C(s) along a trading path."""

    reserve: float
    supply: float
    reserve_ratio: float
    anchor_reserve: float
    anchor_supply: float

    def __post_init__(self) -> None:
        for name in ("reserve", "supply", "anchor_reserve", "anchor_supply"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"{name} must be finite and positive, got {value}")
        f = self.reserve_ratio
        if not (math.isfinite(f) and 0.0 < f <= 1.0):
            raise ValueError(f"reserve ratio must lie in (0, 1], got {f}")


def bonding_curve(reserve: float, supply: float, reserve_ratio: float) -> BondingCurveState:
    """A fresh curve anchored at its construction state."""
    return BondingCurveState(
        reserve=reserve,
        supply=supply,
        reserve_ratio=reserve_ratio,
        anchor_reserve=reserve,
        anchor_supply=supply,
    )


def bonding_price(state: BondingCurveState) -> float:
    """Spot price P = C / (F * s) in reserve units per token."""
    return state.reserve / (state.reserve_ratio * state.supply)


def bonding_reserve_at(state: BondingCurveState, supply: float) -> float:
    """Reserve implied by the curve at the given supply, from the anchor:
    C = C0 * (s / s0)^(1/F)."""
    if supply <= 0.0:
        raise ValueError(f"supply must be positive, got {supply}")
    return state.anchor_reserve * (supply / state.anchor_supply) ** (1.0 / state.reserve_ratio)


def bonding_buy(state: BondingCurveState, deposit: float) -> tuple[BondingCurveState, float]:
    """Deposit reserve, mint tokens: e = s * ((1 + t/C)^F - 1).

    Returns the post-trade state and the minted token amount.
    """
    if deposit < 0.0:
        raise NonPositiveState(f"deposit must be non-negative, got {deposit}")
    if deposit == 0.0:
        return state, 0.0
    minted = state.supply * ((1.0 + deposit / state.reserve) ** state.reserve_ratio - 1.0)
    new_state = replace(state, reserve=state.reserve + deposit, supply=state.supply + minted)
    return new_state, minted


def bonding_sell(state: BondingCurveState, burned: float) -> tuple[BondingCurveState, float]:
    """Burn tokens, release reserve: t = C * (1 - (1 - e/s)^(1/F)).

    Returns the post-trade state and the released reserve amount. Burning the
    entire supply (or more) is rejected — the curve needs a positive state.
    """
    if burned < 0.0:
        raise NonPositiveState(f"burned amount must be non-negative, got {burned}")
    if burned >= state.supply:
        raise SupplyDepletion(f"burning {burned} exhausts supply {state.supply}")
    if burned == 0.0:
        return state, 0.0
    released = state.reserve * (
        1.0 - (1.0 - burned / state.supply) ** (1.0 / state.reserve_ratio)
    )
    new_state = replace(state, reserve=state.reserve - released, supply=state.supply - burned)
    return new_state, released
