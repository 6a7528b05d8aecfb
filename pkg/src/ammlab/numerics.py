"""Generic numeric engine for pools defined by an implicit conservation law.

A pool is treated as an opaque relation Z(reserves; invariant) = 0. Everything
here works from Z alone: safeguarded root finding, finite-difference spot
rates, swap solving, rate-targeted rebalancing, and the five-step divergence
loss procedure. None of it touches the protocol closed forms, so these
routines double as an independent cross-check of those closed forms.

All tolerances live in one SolverConfig record so that outputs are
reproducible bit-for-bit across runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConvergenceFailure,
    DegenerateGradient,
    DomainError,
    IdenticalAssets,
    InvalidBracket,
    NoSolution,
    ReserveDepletion,
)

ResidualFn = Callable[[Sequence[float], Sequence[float]], float]


@dataclass(frozen=True)
class SolverConfig:
    """Every numeric tolerance and budget used by this module."""

    root_rel_tol: float = 1e-14
    root_max_iterations: int = 256
    # finite-difference step for spot rates: max(rel*r_k, abs)
    spot_rel_step: float = 1e-6
    spot_abs_step: float = 1e-9
    degenerate_gradient_rtol: float = 1e-12
    # swap root bracket, as multiples of the output reserve
    swap_bracket_lo: float = 1e-12
    swap_bracket_hi: float = 1e3
    # convergence is measured relative to the *target* rate, so the achieved
    # |E'/E - 1 - rho| error carries a (1+rho) factor; 1e-9 keeps it under
    # 1e-8 for shifts up to rho = 9
    rebalance_rate_tol: float = 1e-9
    rebalance_residual_tol: float = 1e-9
    rebalance_max_iterations: int = 256
    rebalance_jacobian_step: float = 1e-7
    rebalance_max_log_step: float = 1.0
    rebalance_min_damping: float = 1.0 / 1024.0


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class ImplicitConservation:
    """A conservation law in residual form.

    evaluate(reserves, invariant) returns Z, zero exactly when the reserves
    sit on the curve pinned by the invariant values. Z must be continuously
    differentiable in each reserve on the positive orthant.
    """

    evaluate: ResidualFn
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("conservation law needs at least two assets")


@dataclass(frozen=True)
class RootBracket:
    """An interval [lo, hi] of positive reals straddling a sign change."""

    lo: float
    hi: float
    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.lo < self.hi) or not math.isfinite(self.hi):
            raise InvalidBracket(
                f"bracket endpoints must satisfy 0 < lo < hi, got [{self.lo}, {self.hi}]"
            )
        if not (math.isfinite(self.f_lo) and math.isfinite(self.f_hi)):
            raise InvalidBracket("bracket endpoint values must be finite")
        if self.f_lo != 0.0 and self.f_hi != 0.0 and (self.f_lo < 0.0) == (self.f_hi < 0.0):
            raise InvalidBracket(
                f"no sign change on [{self.lo}, {self.hi}]: f(lo)={self.f_lo}, f(hi)={self.f_hi}"
            )

    @classmethod
    def from_function(cls, f: Callable[[float], float], lo: float, hi: float) -> "RootBracket":
        return cls(lo, hi, f(lo), f(hi))


def find_root(
    f: Callable[[float], float],
    bracket: RootBracket,
    rel_tol: float = DEFAULT_CONFIG.root_rel_tol,
    max_iterations: int = DEFAULT_CONFIG.root_max_iterations,
) -> float:
    """Safeguarded Newton iteration inside a validated bracket.

    Newton steps (finite-difference derivative) are accepted only while they
    stay strictly inside the current bracket; anything else falls back to
    bisection. The bracket shrinks monotonically, so the method cannot
    diverge.
    """
    if rel_tol < 1e-15:
        raise ValueError("rel_tol below 1e-15 is not resolvable in double precision")
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = bracket.f_lo, bracket.f_hi
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    x = 0.5 * (lo + hi)
    for _ in range(max_iterations):
        fx = f(x)
        if fx == 0.0:
            return x
        if (fx < 0.0) == (f_lo < 0.0):
            lo, f_lo = x, fx
        else:
            hi, f_hi = x, fx
        if hi - lo <= rel_tol * max(abs(lo), abs(hi)):
            return 0.5 * (lo + hi)
        h = max(abs(x) * 1e-7, 1e-12)
        d = (f(x + h) - f(x - h)) / (2.0 * h)
        x_next = x - fx / d if d != 0.0 and math.isfinite(d) else math.inf
        if lo < x_next < hi:
            if abs(x_next - x) <= rel_tol * abs(x_next):
                return x_next
            x = x_next
        else:
            x = 0.5 * (lo + hi)
    raise ConvergenceFailure(
        f"root not located to rel_tol={rel_tol} within {max_iterations} iterations"
    )


def _check_assets(n: int, *indices: int) -> None:
    for k in indices:
        if not 0 <= k < n:
            raise IndexError(f"asset index {k} out of range for {n} assets")


def _partial(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    k: int,
    config: SolverConfig,
) -> float:
    h = max(config.spot_rel_step * reserves[k], config.spot_abs_step)
    if reserves[k] <= h:
        raise ValueError(f"reserve {k} too small for the finite-difference step {h}")
    up = list(reserves)
    dn = list(reserves)
    up[k] = reserves[k] + h
    dn[k] = reserves[k] - h
    return (Z.evaluate(up, invariant) - Z.evaluate(dn, invariant)) / (2.0 * h)


def numeric_spot_rate(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    i: int,
    o: int,
    config: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """Spot rate (token i per token o) as the ratio of central-difference
    partials (dZ/dr_o)/(dZ/dr_i). Returns 1 exactly when i == o."""
    _check_assets(len(reserves), i, o)
    if i == o:
        return 1.0
    d_o = _partial(Z, reserves, invariant, o, config)
    d_i = _partial(Z, reserves, invariant, i, config)
    scale = max(abs(d_o), abs(d_i))
    if scale == 0.0 or abs(d_i) <= config.degenerate_gradient_rtol * scale:
        raise DegenerateGradient(
            f"dZ/dr_{i} = {d_i} is numerically zero relative to scale {scale}"
        )
    return d_o / d_i


def implicit_swap(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    i: int,
    o: int,
    x_in: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> float:
    """Swap by root finding: add x_in to reserve i, solve Z = 0 for the new
    reserve o (all other reserves fixed), return x_out = r_o - r_o'.

    The root is bracketed inside [1e-12*r_o, 1e3*r_o]; no sign change there
    raises NoSolution. Negative x_in is the reverse-trade convention and
    yields negative x_out.
    """
    _check_assets(len(reserves), i, o)
    if i == o:
        raise IdenticalAssets("input and output asset must differ")
    r_in_new = reserves[i] + x_in
    if r_in_new <= 0.0:
        raise ReserveDepletion(f"input {x_in} exhausts reserve {reserves[i]}")
    if x_in == 0.0:
        return 0.0
    work = list(reserves)
    work[i] = r_in_new

    def g(y: float) -> float:
        probe = list(work)
        probe[o] = y
        return Z.evaluate(probe, invariant)

    lo = config.swap_bracket_lo * reserves[o]
    hi = config.swap_bracket_hi * reserves[o]
    g_lo, g_hi = g(lo), g(hi)
    if g_lo != 0.0 and g_hi != 0.0 and (g_lo < 0.0) == (g_hi < 0.0):
        raise NoSolution(
            f"no post-trade reserve in [{lo}, {hi}] satisfies the conservation law"
        )
    root = find_root(
        g,
        RootBracket(lo, hi, g_lo, g_hi),
        config.root_rel_tol,
        config.root_max_iterations,
    )
    return reserves[o] - root


def _rebalance_scale(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    config: SolverConfig,
) -> float:
    # characteristic variation of Z over relative reserve moves; normalizes
    # the conservation equation so "within 1e-9" means the same thing for
    # every protocol family
    total = 0.0
    for k in range(len(reserves)):
        total += abs(_partial(Z, reserves, invariant, k, config)) * reserves[k]
    return max(total, 1e-300)


def solve_rebalance(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    o: int,
    rho: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> tuple[float, ...]:
    """Reserves after arbitrage rebalancing to a shifted price of asset o.

    Solves the stacked system: for every j != o the spot rate jE_o rises by
    the factor (1+rho), and Z stays zero. Damped Newton with a
    finite-difference Jacobian, iterated in log-reserve coordinates so every
    iterate stays in the positive orthant; the initial guess is the current
    reserves.
    """
    n = len(reserves)
    _check_assets(n, o)
    if n != Z.n:
        raise ValueError(f"expected {Z.n} reserves, got {n}")
    if rho <= -1.0:
        raise DomainError(f"price shift must exceed -1, got {rho}")
    others = [j for j in range(n) if j != o]
    base = [numeric_spot_rate(Z, reserves, invariant, j, o, config) for j in others]
    target = 1.0 + rho
    z_scale = _rebalance_scale(Z, reserves, invariant, config)

    def system(u: np.ndarray) -> np.ndarray:
        r = [math.exp(v) for v in u]
        out = np.empty(n)
        for row, j in enumerate(others):
            rate = numeric_spot_rate(Z, r, invariant, j, o, config)
            out[row] = rate / (base[row] * target) - 1.0
        out[n - 1] = Z.evaluate(r, invariant) / z_scale
        return out

    def probe(u: np.ndarray) -> np.ndarray | None:
        # trial evaluation during damping: leaving the evaluable domain just
        # means the step was too long, not that the solve failed
        try:
            out = system(u)
        except (ValueError, OverflowError, DegenerateGradient):
            return None
        return out if np.all(np.isfinite(out)) else None

    def converged(F: np.ndarray) -> bool:
        rates_ok = all(abs(F[row]) <= config.rebalance_rate_tol for row in range(n - 1))
        return rates_ok and abs(F[n - 1]) <= config.rebalance_residual_tol

    u = np.array([math.log(r) for r in reserves])
    F = system(u)
    if not np.all(np.isfinite(F)):
        raise ConvergenceFailure("conservation residual is not finite at the start state")
    if converged(F):
        return tuple(reserves)

    jac_h = config.rebalance_jacobian_step
    for _ in range(config.rebalance_max_iterations):
        J = np.empty((n, n))
        for k in range(n):
            up = u.copy()
            dn = u.copy()
            up[k] += jac_h
            dn[k] -= jac_h
            J[:, k] = (system(up) - system(dn)) / (2.0 * jac_h)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceFailure(f"singular rebalance Jacobian: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise ConvergenceFailure("rebalance Newton step is not finite")
        biggest = float(np.max(np.abs(step)))
        if biggest > config.rebalance_max_log_step:
            step *= config.rebalance_max_log_step / biggest
        norm = float(np.linalg.norm(F))
        alpha = 1.0
        while True:
            trial_u = u + alpha * step
            trial_F = probe(trial_u)
            if trial_F is not None and float(np.linalg.norm(trial_F)) < (1.0 - 1e-4 * alpha) * norm:
                break
            alpha *= 0.5
            if alpha < config.rebalance_min_damping:
                raise NoSolution(
                    f"rate shift {rho} for asset {o} is unattainable on this curve "
                    "(Newton stagnated)"
                )
        u, F = trial_u, trial_F
        if converged(F):
            return tuple(math.exp(v) for v in u)
    raise ConvergenceFailure(
        f"rebalance not converged within {config.rebalance_max_iterations} iterations"
    )


@dataclass(frozen=True)
class ValuationReport:
    """Pool valuation around a price shift: V before, V_held if the deposit
    had been held outside, V_prime after rebalancing, and the loss L."""

    V: float
    V_held: float
    V_prime: float
    L: float
    rho: float

    def __post_init__(self) -> None:
        if self.L != self.V_prime / self.V_held - 1.0:
            raise ValueError("L must equal V_prime/V_held - 1 exactly as stored")


def generic_divergence_loss(
    Z: ImplicitConservation,
    reserves: Sequence[float],
    invariant: Sequence[float],
    o: int,
    rho: float,
    config: SolverConfig = DEFAULT_CONFIG,
) -> ValuationReport:
    """Divergence loss of providing liquidity versus holding, when asset o
    appreciates by rho against the rest. Asset 0 is the numeraire.

    Five steps: value the pool, value the held portfolio after the shift,
    rebalance the pool to the shifted rates, revalue, compare.
    """
    n = len(reserves)
    _check_assets(n, o)
    if o == 0:
        raise ValueError("asset 0 is the numeraire; pick a different appreciating asset")
    if rho <= -1.0:
        raise DomainError(f"price shift must exceed -1, got {rho}")

    def value(state: Sequence[float]) -> tuple[float, list[float]]:
        rates = [numeric_spot_rate(Z, state, invariant, 0, j, config) for j in range(n)]
        return sum(rate * r for rate, r in zip(rates, state)), rates

    V, rates = value(reserves)
    V_held = V + rates[o] * reserves[o] * rho
    rebalanced = solve_rebalance(Z, reserves, invariant, o, rho, config)
    V_prime, _ = value(rebalanced)
    return ValuationReport(V=V, V_held=V_held, V_prime=V_prime, L=V_prime / V_held - 1.0, rho=rho)
