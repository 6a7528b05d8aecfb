"""Pool state space and the two transition rules every protocol obeys.

A pool is a value ``PoolState`` holding reserves, a protocol description, and
the conservation-law constants those reserves must satisfy. Transitions come
in exactly two pure kinds:

* a **swap** moves reserves along the conservation curve (constants fixed);
* a **proportional liquidity change** scales every reserve by the same factor
  (spot rates fixed, constants rescaled).

Each transition returns a receipt measuring how well its rule held, checked
against ``RULE_TOLERANCE``. All operations are pure functions from states to
new states; nothing is mutated, so states can be shared across threads.

Arithmetic is double-precision real arithmetic; on-chain integer rounding and
fees are out of scope. Disproportionate deposits are not a primitive — they
decompose into a proportional change plus a swap, which callers compose.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from . import pmm as _pmm
from . import stableswap as _ss
from . import weighted as _w
from .errors import IdenticalAssets, InfeasibleTrade, ReserveDepletion
from .numerics import DEFAULT_CONFIG, ImplicitConservation, SolverConfig

RULE_TOLERANCE = 1e-9


class ProtocolFamily(str, enum.Enum):
    """The three conservation-law families covered by the library."""

    WEIGHTED = "weighted"
    STABLESWAP = "stableswap"
    PMM = "pmm"


@dataclass(frozen=True)
class ProtocolSpec:
    """Family tag plus the family's hyperparameters.

    weights: per-asset exponents, weighted family only (sum to 1).
    amplification: stableswap 𝒜 > 0, or PMM deviation weight in (0, 1].
    """

    family: ProtocolFamily
    weights: tuple[float, ...] | None = None
    amplification: float | None = None

    def __post_init__(self) -> None:
        if self.family is ProtocolFamily.WEIGHTED:
            if self.weights is None:
                raise ValueError("weighted pools need weights")
            if self.amplification is not None:
                raise ValueError("weighted pools take no amplification")
            params = _w.WeightedPoolParams(self.weights)
            object.__setattr__(self, "weights", params.weights)
        elif self.family is ProtocolFamily.STABLESWAP:
            if self.weights is not None:
                raise ValueError("stableswap pools take no weights")
            a = self.amplification
            if a is None or not (math.isfinite(a) and a > 0.0):
                raise ValueError(f"stableswap amplification must be finite and positive, got {a}")
            object.__setattr__(self, "amplification", float(a))
        elif self.family is ProtocolFamily.PMM:
            if self.weights is not None:
                raise ValueError("pmm pools take no weights")
            a = self.amplification
            if a is None or not (math.isfinite(a) and 0.0 < a <= 1.0):
                raise ValueError(f"pmm amplification must lie in (0, 1], got {a}")
            object.__setattr__(self, "amplification", float(a))
        else:  # pragma: no cover - enum is closed
            raise ValueError(f"unknown protocol family {self.family!r}")


@dataclass(frozen=True)
class PoolState:
    """Immutable pool snapshot: reserves plus the constants they satisfy.

    invariant: one value (C or D) for weighted/stableswap, the two
    equilibrium targets (C1, C2) for PMM.
    oracle_price: PMM market rate (asset-1 units per asset 2); None otherwise.
    share_supply: scalar pool-share supply, scaled by liquidity changes.
    """

    reserves: tuple[float, ...]
    spec: ProtocolSpec
    invariant: tuple[float, ...]
    oracle_price: float | None = None
    share_supply: float = 1.0

    def __post_init__(self) -> None:
        reserves = tuple(float(r) for r in self.reserves)
        invariant = tuple(float(c) for c in self.invariant)
        object.__setattr__(self, "reserves", reserves)
        object.__setattr__(self, "invariant", invariant)
        if len(reserves) < 2:
            raise ValueError("a pool holds at least two assets")
        for r in reserves:
            if not (math.isfinite(r) and r > 0.0):
                raise ValueError(f"reserves must be finite and positive, got {reserves}")
        if not (math.isfinite(self.share_supply) and self.share_supply > 0.0):
            raise ValueError(f"share supply must be positive, got {self.share_supply}")
        family = self.spec.family
        if family is ProtocolFamily.PMM:
            if len(reserves) != 2:
                raise ValueError("pmm pools hold exactly two assets")
            if len(invariant) != 2:
                raise ValueError("pmm pools carry two conservation targets")
            if self.oracle_price is None:
                raise ValueError("pmm pools need an oracle price")
            deviation = _pmm.conservation_residual(reserves[0], reserves[1], _pmm_params(self))
        else:
            if self.oracle_price is not None:
                raise ValueError("only pmm pools carry an oracle price")
            if len(invariant) != 1:
                raise ValueError("weighted/stableswap pools carry one conservation value")
            if invariant[0] <= 0.0:
                raise ValueError(f"conservation value must be positive, got {invariant[0]}")
            if family is ProtocolFamily.WEIGHTED:
                if len(self.spec.weights) != len(reserves):
                    raise ValueError("one weight per asset required")
                value = _w.weighted_conservation(reserves, self.spec.weights)
                deviation = abs(value - invariant[0]) / invariant[0]
            else:
                deviation = _ss.conservation_residual(
                    reserves, invariant[0], self.spec.amplification
                )
        if deviation > RULE_TOLERANCE:
            raise ValueError(
                f"reserves violate the conservation law (relative deviation {deviation:.3e})"
            )

    @property
    def n_assets(self) -> int:
        return len(self.reserves)


def _pmm_params(state: PoolState) -> _pmm.PMMParams:
    return _pmm.PMMParams(
        oracle_price=state.oracle_price,
        amplification=state.spec.amplification,
        target1=state.invariant[0],
        target2=state.invariant[1],
    )


def _check_indices(state: PoolState, *indices: int) -> None:
    n = state.n_assets
    for k in indices:
        if not 0 <= k < n:
            raise IndexError(f"asset index {k} out of range for {n} assets")


# ---------------------------------------------------------------------------
# pool factories


def weighted_pool(reserves, weights) -> PoolState:
    """Weighted-product pool; the conservation value is computed from the
    starting reserves."""
    spec = ProtocolSpec(ProtocolFamily.WEIGHTED, weights=tuple(weights))
    value = _w.weighted_conservation(tuple(float(r) for r in reserves), spec.weights)
    return PoolState(reserves=tuple(reserves), spec=spec, invariant=(value,))


def uniswap_pool(reserve1: float, reserve2: float) -> PoolState:
    """Two-asset constant-product pool (equal weights)."""
    return weighted_pool((reserve1, reserve2), (0.5, 0.5))


def sushiswap_pool(reserve1: float, reserve2: float) -> PoolState:
    """Identical mechanics to uniswap_pool; separate name for labeling."""
    return uniswap_pool(reserve1, reserve2)


def balancer_pool(reserves, weights) -> PoolState:
    """Weighted pool under its best-known brand name."""
    return weighted_pool(reserves, weights)


def bancor_pool(reserves, weights) -> PoolState:
    """Connector-style two-asset weighted pool; same mechanics as
    weighted_pool (the single-token bonding curve lives in `bonding`)."""
    return weighted_pool(reserves, weights)


def stableswap_pool(reserves, amplification: float, config: SolverConfig = DEFAULT_CONFIG) -> PoolState:
    """Amplified hybrid pool; D is solved from the starting reserves."""
    spec = ProtocolSpec(ProtocolFamily.STABLESWAP, amplification=amplification)
    reserves = tuple(float(r) for r in reserves)
    d = _ss.solve_invariant(reserves, spec.amplification, config)
    return PoolState(reserves=reserves, spec=spec, invariant=(d,))


def pmm_pool(
    target1: float,
    target2: float,
    oracle_price: float,
    amplification: float,
    reserves=None,
) -> PoolState:
    """Oracle-anchored pool. Without explicit reserves the pool starts at its
    equilibrium point (reserves equal to the targets); explicit reserves must
    already lie on the conservation curve through the targets."""
    spec = ProtocolSpec(ProtocolFamily.PMM, amplification=amplification)
    if reserves is None:
        reserves = (target1, target2)
    return PoolState(
        reserves=tuple(reserves),
        spec=spec,
        invariant=(float(target1), float(target2)),
        oracle_price=float(oracle_price),
    )


# ---------------------------------------------------------------------------
# derived quantities


def spot_rate(state: PoolState, i: int, o: int) -> float:
    """Marginal exchange rate in asset-i units per unit of asset o; exactly 1
    when i == o, and exact reciprocals across the two orientations."""
    _check_indices(state, i, o)
    if i == o:
        return 1.0
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        return _w.weighted_spot_rate(state.reserves, state.spec.weights, i, o)
    if family is ProtocolFamily.STABLESWAP:
        return _ss.stableswap_spot_rate(
            state.reserves, state.invariant[0], state.spec.amplification, i, o
        )
    rate = _pmm.pmm_spot_rate(state.reserves[0], state.reserves[1], _pmm_params(state))
    return rate if (i, o) == (0, 1) else 1.0 / rate


def swap_amount(state: PoolState, i: int, o: int, x_in: float) -> float:
    """Output of asset o for adding x_in of asset i (closed form per family).
    Negative x_in is the reverse-trade sign convention."""
    _check_indices(state, i, o)
    if i == o:
        raise IdenticalAssets("swap needs distinct input and output assets")
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        return _w.weighted_swap(state.reserves, state.spec.weights, i, o, x_in)
    if family is ProtocolFamily.STABLESWAP:
        return _ss.stableswap_swap(
            state.reserves, state.invariant[0], state.spec.amplification, i, o, x_in
        )
    params = _pmm_params(state)
    if (i, o) == (0, 1):
        return _pmm.pmm_swap(state.reserves[0], state.reserves[1], params, x_in)
    return _pmm.pmm_swap(state.reserves[1], state.reserves[0], params.mirrored(), x_in)


def slippage(state: PoolState, i: int, o: int, x_in: float) -> float:
    """S = (x_in/x_out)/E - 1: excess of the effective rate over the
    pre-trade spot rate. Zero trade has zero slippage by convention."""
    if x_in == 0.0:
        _check_indices(state, i, o)
        if i == o:
            raise IdenticalAssets("slippage needs distinct input and output assets")
        return 0.0
    x_out = swap_amount(state, i, o, x_in)
    if x_out == 0.0:
        raise InfeasibleTrade(f"input {x_in} produced zero output; slippage undefined")
    return (x_in / x_out) / spot_rate(state, i, o) - 1.0


# ---------------------------------------------------------------------------
# transitions


class TransitionKind(str, enum.Enum):
    PURE_SWAP = "pure_swap"
    PURE_LIQUIDITY_CHANGE = "pure_liquidity_change"


@dataclass(frozen=True)
class RuleCheck:
    """One measured transition-rule deviation against its tolerance."""

    rule: str
    deviation: float
    tolerance: float = RULE_TOLERANCE

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance


@dataclass(frozen=True)
class SwapOutcome:
    """Quantities of a single swap, oriented input-per-output like spot."""

    input_asset: int
    output_asset: int
    amount_in: float
    amount_out: float
    reserves_after: tuple[float, ...]
    spot_rate_before: float
    effective_rate: float
    slippage: float


@dataclass(frozen=True)
class TransitionReceipt:
    """Audit record of one transition and its rule-check measurements."""

    kind: TransitionKind
    pre_state: PoolState
    post_state: PoolState
    checks: tuple[RuleCheck, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)


def _invariant_deviation(state: PoolState, config: SolverConfig) -> float:
    """How far the state's reserves sit from its stored conservation
    constants, relative; stableswap re-solves D as an independent check."""
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        value = _w.weighted_conservation(state.reserves, state.spec.weights)
        return abs(value - state.invariant[0]) / state.invariant[0]
    if family is ProtocolFamily.STABLESWAP:
        d = _ss.solve_invariant(state.reserves, state.spec.amplification, config)
        return abs(d - state.invariant[0]) / state.invariant[0]
    return _pmm.conservation_residual(state.reserves[0], state.reserves[1], _pmm_params(state))


def apply_swap(
    state: PoolState,
    input_asset: int,
    output_asset: int,
    x_in: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[PoolState, SwapOutcome, TransitionReceipt]:
    """Execute a pure swap: reserves move, conservation constants stay.

    Returns the post state, the trade quantities, and a receipt recording the
    measured relative invariant deviation.
    """
    _check_indices(state, input_asset, output_asset)
    if input_asset == output_asset:
        raise IdenticalAssets("swap needs distinct input and output assets")
    rate_before = spot_rate(state, input_asset, output_asset)
    if x_in == 0.0:
        outcome = SwapOutcome(
            input_asset=input_asset,
            output_asset=output_asset,
            amount_in=0.0,
            amount_out=0.0,
            reserves_after=state.reserves,
            spot_rate_before=rate_before,
            effective_rate=rate_before,
            slippage=0.0,
        )
        receipt = TransitionReceipt(
            kind=TransitionKind.PURE_SWAP,
            pre_state=state,
            post_state=state,
            checks=(RuleCheck("invariant_preserved", 0.0),),
        )
        return state, outcome, receipt
    x_out = swap_amount(state, input_asset, output_asset, x_in)
    if x_out == 0.0:
        raise InfeasibleTrade(f"input {x_in} produced zero output")
    reserves = list(state.reserves)
    reserves[input_asset] += x_in
    reserves[output_asset] -= x_out
    if reserves[output_asset] <= 0.0:
        raise ReserveDepletion(f"trade would empty the output reserve ({reserves})")
    post = PoolState(
        reserves=tuple(reserves),
        spec=state.spec,
        invariant=state.invariant,
        oracle_price=state.oracle_price,
        share_supply=state.share_supply,
    )
    outcome = SwapOutcome(
        input_asset=input_asset,
        output_asset=output_asset,
        amount_in=x_in,
        amount_out=x_out,
        reserves_after=post.reserves,
        spot_rate_before=rate_before,
        effective_rate=x_in / x_out,
        slippage=(x_in / x_out) / rate_before - 1.0,
    )
    receipt = TransitionReceipt(
        kind=TransitionKind.PURE_SWAP,
        pre_state=state,
        post_state=post,
        checks=(RuleCheck("invariant_preserved", _invariant_deviation(post, config)),),
    )
    return post, outcome, receipt


def add_liquidity_proportional(
    state: PoolState,
    fraction: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[PoolState, TransitionReceipt]:
    """Scale every reserve by (1 + fraction); negative fraction is removal.

    Conservation constants are recomputed for the new reserves (weighted:
    product re-evaluated; stableswap: D re-solved; PMM: both equilibrium
    targets scaled by the same factor, keeping the pool's composition and so
    its rates). The receipt records the worst relative spot-rate change over
    all ordered asset pairs.
    """
    if not math.isfinite(fraction) or fraction <= -1.0:
        raise ReserveDepletion(f"fraction must exceed -1, got {fraction}")
    grow = 1.0 + fraction
    reserves = tuple(r * grow for r in state.reserves)
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        invariant = (_w.weighted_conservation(reserves, state.spec.weights),)
    elif family is ProtocolFamily.STABLESWAP:
        invariant = (_ss.solve_invariant(reserves, state.spec.amplification, config),)
    else:
        invariant = (state.invariant[0] * grow, state.invariant[1] * grow)
    post = PoolState(
        reserves=reserves,
        spec=state.spec,
        invariant=invariant,
        oracle_price=state.oracle_price,
        share_supply=state.share_supply * grow,
    )
    worst = 0.0
    for i in range(state.n_assets):
        for o in range(state.n_assets):
            if i == o:
                continue
            before = spot_rate(state, i, o)
            after = spot_rate(post, i, o)
            worst = max(worst, abs(after / before - 1.0))
    receipt = TransitionReceipt(
        kind=TransitionKind.PURE_LIQUIDITY_CHANGE,
        pre_state=state,
        post_state=post,
        checks=(RuleCheck("spot_rates_preserved", worst),),
    )
    return post, receipt


# ---------------------------------------------------------------------------
# generic-engine bridge


def implicit_conservation(state: PoolState) -> ImplicitConservation:
    """The pool's conservation law as a bare residual Z(reserves, constants),
    suitable for the generic numeric engine (root solves, finite-difference
    rates, rebalancing). Z is zero exactly on the pool's curve."""
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        weights = state.spec.weights

        def evaluate(reserves, invariant):
            return _w.weighted_conservation(reserves, weights) - invariant[0]

    elif family is ProtocolFamily.STABLESWAP:
        amplification = state.spec.amplification

        def evaluate(reserves, invariant):
            return _ss.defining_residual(reserves, invariant[0], amplification)

    else:
        oracle_price = state.oracle_price
        amplification = state.spec.amplification

        def evaluate(reserves, invariant):
            params = _pmm.PMMParams(
                oracle_price=oracle_price,
                amplification=amplification,
                target1=invariant[0],
                target2=invariant[1],
            )
            return _pmm.conservation_gap(reserves[0], reserves[1], params)

    return ImplicitConservation(evaluate=evaluate, n=state.n_assets)
