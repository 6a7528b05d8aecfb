"""Comparison artifacts: slippage curves, divergence-loss curves, and
conservation-law cross-sections for any configured pool.

Every sweep returns a ``CurveSeries`` — plain x/y vectors with pool metadata —
ready for CSV emission. Grid points are independent of each other, so each
sweep accepts a ``point_map`` (any order-preserving ``map`` equivalent, e.g.
``ThreadPoolExecutor.map``); output ordering follows the grid regardless of
evaluation order, keeping results identical across parallelism degrees.

Per-point solver failures inside divergence and cross-section sweeps mark the
point as NaN and record it, rather than aborting the series: extreme
amplification values legitimately contain unattainable grid points.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import weighted as _w
from .core import (
    PoolState,
    ProtocolFamily,
    implicit_conservation,
    slippage,
    swap_amount,
)
from .errors import AmmError, ConvergenceFailure, NoSolution, NotApplicable
from .numerics import DEFAULT_CONFIG, SolverConfig, ValuationReport, generic_divergence_loss

__all__ = [
    "SeriesKind",
    "CurveSeries",
    "ValuationReport",
    "divergence_loss",
    "slippage_curve",
    "divergence_curve",
    "conservation_cross_section",
    "ComparisonConfig",
    "compare_protocols",
    "log_grid",
    "linear_grid",
    "default_trade_grid",
    "default_shift_grid",
    "default_cross_section_grid",
    "hyperparameter_string",
]

PointMap = Callable[[Callable, Iterable], Iterable]


class SeriesKind(str, enum.Enum):
    SLIPPAGE = "slippage"
    DIVERGENCE_LOSS = "divergence_loss"
    CONSERVATION_CROSS_SECTION = "conservation_cross_section"


@dataclass(frozen=True)
class CurveSeries:
    """One x/y sweep with pool metadata; NaN y-values mark failed points,
    each listed in `failures` as (grid index, reason)."""

    kind: SeriesKind
    pool_id: str
    protocol: str
    hyperparameters: str
    x_values: tuple[float, ...]
    y_values: tuple[float, ...]
    failures: tuple[tuple[int, str], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_values", tuple(float(x) for x in self.x_values))
        object.__setattr__(self, "y_values", tuple(float(y) for y in self.y_values))
        if len(self.x_values) != len(self.y_values):
            raise ValueError("x and y vectors must have equal length")
        for a, b in zip(self.x_values, self.x_values[1:]):
            if not b > a:
                raise ValueError("grid values must be strictly increasing")


# ---------------------------------------------------------------------------
# grids


def log_grid(lo: float, hi: float, points: int) -> tuple[float, ...]:
    """Log-spaced grid on [lo, hi], endpoints included."""
    if not (0.0 < lo < hi):
        raise ValueError(f"log grid needs 0 < lo < hi, got [{lo}, {hi}]")
    if points < 2:
        raise ValueError("a grid needs at least two points")
    return tuple(float(v) for v in np.geomspace(lo, hi, points))


def linear_grid(lo: float, hi: float, points: int) -> tuple[float, ...]:
    """Evenly spaced grid on [lo, hi], endpoints included."""
    if not lo < hi:
        raise ValueError(f"linear grid needs lo < hi, got [{lo}, {hi}]")
    if points < 2:
        raise ValueError("a grid needs at least two points")
    return tuple(float(v) for v in np.linspace(lo, hi, points))


def default_trade_grid() -> tuple[float, ...]:
    """Normalized trade sizes x_in/r_in: 50 log-spaced points on [0.01, 0.9]."""
    return log_grid(0.01, 0.9, 50)


def default_shift_grid() -> tuple[float, ...]:
    """Price shifts rho: 60 evenly spaced points on [-0.9, 4]."""
    return linear_grid(-0.9, 4.0, 60)


def default_cross_section_grid(reserve: float) -> tuple[float, ...]:
    """Input-reserve sweep around the current value: 50 log-spaced points on
    [0.1*r, 10*r]."""
    return log_grid(0.1 * reserve, 10.0 * reserve, 50)


def hyperparameter_string(state: PoolState) -> str:
    """Deterministic key=value;... encoding of a pool's hyperparameters."""
    fmt = lambda x: format(float(x), ".17g")  # noqa: E731
    family = state.spec.family
    if family is ProtocolFamily.WEIGHTED:
        # "|" keeps the encoding free of commas, so CSV fields never need quoting
        return "weights=" + "|".join(fmt(w) for w in state.spec.weights)
    if family is ProtocolFamily.STABLESWAP:
        return f"amplification={fmt(state.spec.amplification)}"
    return (
        f"amplification={fmt(state.spec.amplification)}"
        f";oracle_price={fmt(state.oracle_price)}"
        f";target1={fmt(state.invariant[0])}"
        f";target2={fmt(state.invariant[1])}"
    )


# ---------------------------------------------------------------------------
# single-point divergence loss


def divergence_loss(
    state: PoolState,
    asset: int,
    rho: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """Loss L of providing liquidity versus holding when `asset` appreciates
    by rho against asset 0 (the numeraire).

    Weighted pools use the closed form (1+rho)^w / (1 + w*rho) - 1;
    stableswap pools run the generic rebalance-and-revalue procedure.
    Oracle-anchored pools have no divergence loss to measure — their quoted
    rates follow the market instead of diverging from it — so they are
    rejected with NotApplicable.
    """
    family = state.spec.family
    if family is ProtocolFamily.PMM:
        raise NotApplicable(
            "oracle-anchored pools track the market rate; divergence loss does not arise"
        )
    if asset == 0:
        raise ValueError("asset 0 is the numeraire; pick a different appreciating asset")
    if family is ProtocolFamily.WEIGHTED:
        return _w.weighted_divergence_loss(state.spec.weights, asset, rho)
    report = generic_divergence_loss(
        implicit_conservation(state), state.reserves, state.invariant, asset, rho, config
    )
    return report.L


# ---------------------------------------------------------------------------
# sweeps


def slippage_curve(
    state: PoolState,
    input_asset: int,
    output_asset: int,
    grid: Sequence[float] | None = None,
    pool_id: str = "pool",
    protocol: str | None = None,
    point_map: PointMap = map,
) -> CurveSeries:
    """Slippage S against normalized trade size x_in/r_in over the grid
    (values restricted to (0, 0.95])."""
    grid = default_trade_grid() if grid is None else tuple(float(g) for g in grid)
    for g in grid:
        if not 0.0 < g <= 0.95:
            raise ValueError(f"normalized trade sizes must lie in (0, 0.95], got {g}")
    r_in = state.reserves[input_asset]

    def point(g: float) -> float:
        return slippage(state, input_asset, output_asset, g * r_in)

    y = tuple(point_map(point, grid))
    return CurveSeries(
        kind=SeriesKind.SLIPPAGE,
        pool_id=pool_id,
        protocol=protocol if protocol is not None else state.spec.family.value,
        hyperparameters=hyperparameter_string(state),
        x_values=grid,
        y_values=y,
    )


def divergence_curve(
    state: PoolState,
    asset: int,
    grid: Sequence[float] | None = None,
    pool_id: str = "pool",
    protocol: str | None = None,
    point_map: PointMap = map,
    config: SolverConfig = DEFAULT_CONFIG,
) -> CurveSeries:
    """Divergence loss L against price shift rho over the grid (values in
    (-1, inf)); per-point solver failures become NaN entries."""
    family = state.spec.family
    if family is ProtocolFamily.PMM:
        raise NotApplicable(
            "oracle-anchored pools track the market rate; divergence loss does not arise"
        )
    grid = default_shift_grid() if grid is None else tuple(float(g) for g in grid)
    for g in grid:
        if not g > -1.0:
            raise ValueError(f"price shifts must exceed -1, got {g}")

    def point(rho: float) -> tuple[float, str | None]:
        try:
            return divergence_loss(state, asset, rho, config), None
        except (NoSolution, ConvergenceFailure) as exc:
            return math.nan, str(exc)

    results = tuple(point_map(point, grid))
    failures = tuple((k, msg) for k, (_, msg) in enumerate(results) if msg is not None)
    return CurveSeries(
        kind=SeriesKind.DIVERGENCE_LOSS,
        pool_id=pool_id,
        protocol=protocol if protocol is not None else state.spec.family.value,
        hyperparameters=hyperparameter_string(state),
        x_values=grid,
        y_values=tuple(y for y, _ in results),
        failures=failures,
    )


def conservation_cross_section(
    state: PoolState,
    input_asset: int,
    output_asset: int,
    grid: Sequence[float] | None = None,
    pool_id: str = "pool",
    protocol: str | None = None,
    point_map: PointMap = map,
) -> CurveSeries:
    """The conservation curve itself: for each input-reserve value on the
    grid, the output reserve keeping the law satisfied with every other
    reserve fixed. Points with no positive solution become NaN entries."""
    r_in = state.reserves[input_asset]
    r_out = state.reserves[output_asset]
    grid = default_cross_section_grid(r_in) if grid is None else tuple(float(g) for g in grid)
    for g in grid:
        if not g > 0.0:
            raise ValueError(f"reserve grid values must be positive, got {g}")

    def point(g: float) -> tuple[float, str | None]:
        try:
            return r_out - swap_amount(state, input_asset, output_asset, g - r_in), None
        except (NoSolution, ConvergenceFailure) as exc:
            return math.nan, str(exc)

    results = tuple(point_map(point, grid))
    failures = tuple((k, msg) for k, (_, msg) in enumerate(results) if msg is not None)
    return CurveSeries(
        kind=SeriesKind.CONSERVATION_CROSS_SECTION,
        pool_id=pool_id,
        protocol=protocol if protocol is not None else state.spec.family.value,
        hyperparameters=hyperparameter_string(state),
        x_values=grid,
        y_values=tuple(y for y, _ in results),
        failures=failures,
    )


# ---------------------------------------------------------------------------
# side-by-side comparison


@dataclass(frozen=True)
class ComparisonConfig:
    """Pools to sweep on one shared grid.

    pools: (pool id, state) pairs, optionally (pool id, state, protocol
    label) triples when the caller wants a display name different from the
    family name. For divergence sweeps `output_asset` is the appreciating
    asset.
    """

    pools: tuple
    kind: SeriesKind = SeriesKind.SLIPPAGE
    input_asset: int = 0
    output_asset: int = 1
    grid: tuple[float, ...] | None = None


def compare_protocols(
    config: ComparisonConfig,
    point_map: PointMap = map,
    solver_config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[CurveSeries, ...]:
    """One CurveSeries per configured pool, all on the same grid; failures
    are annotated with the pool id they came from. An empty pool list yields
    an empty tuple."""
    entries = []
    for entry in config.pools:
        if len(entry) == 2:
            pool_id, state = entry
            label = None
        else:
            pool_id, state, label = entry
        entries.append((str(pool_id), state, label))
    grid = config.grid
    if grid is None:
        if config.kind is SeriesKind.SLIPPAGE:
            grid = default_trade_grid()
        elif config.kind is SeriesKind.DIVERGENCE_LOSS:
            grid = default_shift_grid()
        elif entries:
            grid = default_cross_section_grid(entries[0][1].reserves[config.input_asset])
    series = []
    for pool_id, state, label in entries:
        try:
            if config.kind is SeriesKind.SLIPPAGE:
                one = slippage_curve(
                    state, config.input_asset, config.output_asset, grid,
                    pool_id=pool_id, protocol=label, point_map=point_map,
                )
            elif config.kind is SeriesKind.DIVERGENCE_LOSS:
                one = divergence_curve(
                    state, config.output_asset, grid,
                    pool_id=pool_id, protocol=label, point_map=point_map,
                    config=solver_config,
                )
            else:
                one = conservation_cross_section(
                    state, config.input_asset, config.output_asset, grid,
                    pool_id=pool_id, protocol=label, point_map=point_map,
                )
        except AmmError as exc:
            raise type(exc)(f"pool '{pool_id}': {exc}") from exc
        series.append(one)
    return tuple(series)
