"""Tests for slippage/divergence/cross-section series production."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import pytest

from ammlab import (
    NotApplicable,
    pmm_pool,
    stableswap_pool,
    uniswap_pool,
    weighted_pool,
)
from ammlab.analysis import (
    ComparisonConfig,
    CurveSeries,
    SeriesKind,
    compare_protocols,
    conservation_cross_section,
    default_shift_grid,
    default_trade_grid,
    divergence_curve,
    divergence_loss,
    hyperparameter_string,
    linear_grid,
    log_grid,
    slippage_curve,
)


def four_pool_config(kind=SeriesKind.SLIPPAGE, grid=None):
    return ComparisonConfig(
        pools=(
            ("uniswap", uniswap_pool(100.0, 100.0)),
            ("balancer", weighted_pool((100.0, 100.0), (0.8, 0.2))),
            ("curve", stableswap_pool((100.0, 100.0), 10.0)),
            ("dodo", pmm_pool(100.0, 100.0, 1.0, 0.5)),
        ),
        kind=kind,
        grid=grid,
    )


class TestGrids:
    def test_default_trade_grid(self):
        grid = default_trade_grid()
        assert len(grid) == 50
        assert math.isclose(grid[0], 0.01, rel_tol=1e-12)
        assert math.isclose(grid[-1], 0.9, rel_tol=1e-12)

    def test_default_shift_grid(self):
        grid = default_shift_grid()
        assert len(grid) == 60
        assert grid[0] == -0.9
        assert grid[-1] == 4.0

    def test_log_grid_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            log_grid(-1.0, 1.0, 10)
        with pytest.raises(ValueError):
            log_grid(2.0, 1.0, 10)
        with pytest.raises(ValueError):
            log_grid(1.0, 2.0, 1)

    def test_linear_grid_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            linear_grid(2.0, 1.0, 10)
        with pytest.raises(ValueError):
            linear_grid(1.0, 2.0, 1)


class TestCurveSeries:
    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            CurveSeries(
                kind=SeriesKind.SLIPPAGE,
                pool_id="p",
                protocol="weighted",
                hyperparameters="",
                x_values=(0.1, 0.2),
                y_values=(0.1,),
            )

    def test_rejects_unordered_grid(self):
        with pytest.raises(ValueError):
            CurveSeries(
                kind=SeriesKind.SLIPPAGE,
                pool_id="p",
                protocol="weighted",
                hyperparameters="",
                x_values=(0.2, 0.1),
                y_values=(0.1, 0.2),
            )


class TestHyperparameterString:
    def test_weighted(self):
        assert hyperparameter_string(uniswap_pool(100.0, 100.0)) == "weights=0.5|0.5"

    def test_stableswap(self):
        pool = stableswap_pool((100.0, 100.0), 10.0)
        assert hyperparameter_string(pool) == "amplification=10"

    def test_pmm(self):
        pool = pmm_pool(100.0, 100.0, 1.0, 0.5)
        assert (
            hyperparameter_string(pool)
            == "amplification=0.5;oracle_price=1;target1=100;target2=100"
        )


class TestSlippageCurve:
    def test_constant_product_equals_the_grid(self):
        series = slippage_curve(uniswap_pool(100.0, 100.0), 0, 1, (0.1, 0.2, 0.3))
        assert series.kind is SeriesKind.SLIPPAGE
        for x, y in zip(series.x_values, series.y_values):
            assert abs(y - x) <= 1e-12

    def test_default_grid(self):
        series = slippage_curve(uniswap_pool(100.0, 100.0), 0, 1)
        assert series.x_values == default_trade_grid()
        assert len(series.y_values) == 50

    def test_rejects_out_of_range_grid(self):
        pool = uniswap_pool(100.0, 100.0)
        with pytest.raises(ValueError):
            slippage_curve(pool, 0, 1, (0.5, 0.96))
        with pytest.raises(ValueError):
            slippage_curve(pool, 0, 1, (0.0, 0.5))

    def test_positive_and_increasing_for_all_protocols(self):
        for _, pool in four_pool_config().pools:
            series = slippage_curve(pool, 0, 1)
            assert all(y > 0.0 for y in series.y_values)
            assert all(
                a < b for a, b in zip(series.y_values, series.y_values[1:])
            )

    def test_amplification_flattens_the_curve(self):
        calm = slippage_curve(stableswap_pool((100.0, 100.0), 100.0), 0, 1)
        wild = slippage_curve(stableswap_pool((100.0, 100.0), 1.0), 0, 1)
        assert all(a < b for a, b in zip(calm.y_values, wild.y_values))

    def test_metadata(self):
        series = slippage_curve(
            stableswap_pool((100.0, 100.0), 10.0), 0, 1, (0.1, 0.2), pool_id="c"
        )
        assert series.pool_id == "c"
        assert series.protocol == "stableswap"
        assert series.hyperparameters == "amplification=10"


class TestDivergenceLoss:
    def test_weighted_closed_form(self):
        got = divergence_loss(uniswap_pool(100.0, 100.0), 1, -0.5)
        assert math.isclose(got, math.sqrt(0.5) / 0.75 - 1.0, rel_tol=1e-9)

    def test_stableswap_low_amplification_matches_constant_product(self):
        got = divergence_loss(stableswap_pool((100.0, 100.0), 1e-8), 1, -0.5)
        assert math.isclose(got, math.sqrt(0.5) / 0.75 - 1.0, abs_tol=1e-4)

    def test_amplification_deepens_the_loss(self):
        mild = divergence_loss(stableswap_pool((100.0, 100.0), 1.0), 1, 0.5)
        deep = divergence_loss(stableswap_pool((100.0, 100.0), 100.0), 1, 0.5)
        uni = divergence_loss(uniswap_pool(100.0, 100.0), 1, 0.5)
        assert abs(deep) > abs(mild) > abs(uni) > 0.0

    def test_oracle_anchored_pools_have_none(self):
        with pytest.raises(NotApplicable):
            divergence_loss(pmm_pool(100.0, 100.0, 1.0, 0.5), 1, 0.5)

    def test_numeraire_rejected(self):
        with pytest.raises(ValueError):
            divergence_loss(uniswap_pool(100.0, 100.0), 0, 0.5)


class TestDivergenceCurve:
    def test_constant_product_closed_forms(self):
        series = divergence_curve(uniswap_pool(100.0, 100.0), 1, (-0.5, 0.0, 0.21, 1.0))
        want = (
            math.sqrt(0.5) / 0.75 - 1.0,
            0.0,
            -1.0 / 221.0,
            math.sqrt(2.0) / 1.5 - 1.0,
        )
        for got, expected in zip(series.y_values, want):
            assert math.isclose(got, expected, rel_tol=1e-9, abs_tol=1e-15)

    def test_asymmetric_weights(self):
        pool = weighted_pool((100.0, 100.0), (0.2, 0.8))
        series = divergence_curve(pool, 1, (1.0,))
        assert math.isclose(series.y_values[0], 2.0**0.8 / 1.8 - 1.0, rel_tol=1e-9)

    def test_never_positive_on_the_default_grid(self):
        series = divergence_curve(uniswap_pool(100.0, 100.0), 1)
        assert series.x_values == default_shift_grid()
        assert all(y <= 0.0 for y in series.y_values)

    def test_unattainable_shifts_marked_as_failures(self):
        series = divergence_curve(stableswap_pool((100.0, 100.0), 1e8), 1, (-0.5, 0.5))
        assert len(series.failures) == 2
        assert all(math.isnan(series.y_values[idx]) for idx, _ in series.failures)
        assert all("unattainable" in reason for _, reason in series.failures)

    def test_rejects_shifts_at_or_below_minus_one(self):
        with pytest.raises(ValueError):
            divergence_curve(uniswap_pool(100.0, 100.0), 1, (-1.0, 0.5))

    def test_oracle_anchored_pools_rejected(self):
        with pytest.raises(NotApplicable):
            divergence_curve(pmm_pool(100.0, 100.0, 1.0, 0.5), 1, (0.5,))


class TestConservationCrossSection:
    def test_constant_product_hyperbola(self):
        series = conservation_cross_section(
            uniswap_pool(100.0, 100.0), 0, 1, (50.0, 100.0, 200.0)
        )
        for x, y in zip(series.x_values, series.y_values):
            assert math.isclose(y, 10_000.0 / x, rel_tol=1e-9)

    def test_high_amplification_approaches_constant_sum(self):
        series = conservation_cross_section(
            stableswap_pool((100.0, 100.0), 1e8), 0, 1, (50.0,)
        )
        assert abs(series.y_values[0] - 150.0) <= 1e-3

    def test_rejects_nonpositive_grid(self):
        with pytest.raises(ValueError):
            conservation_cross_section(
                uniswap_pool(100.0, 100.0), 0, 1, (-1.0, 100.0)
            )

    def test_default_grid_spans_a_decade_around_the_reserve(self):
        series = conservation_cross_section(uniswap_pool(100.0, 100.0), 0, 1)
        assert len(series.x_values) == 50
        assert math.isclose(series.x_values[0], 10.0, rel_tol=1e-12)
        assert math.isclose(series.x_values[-1], 1000.0, rel_tol=1e-12)


class TestCompareProtocols:
    def test_empty_configuration(self):
        assert compare_protocols(ComparisonConfig(pools=())) == ()

    def test_four_protocol_slippage(self):
        series = compare_protocols(four_pool_config())
        assert [s.pool_id for s in series] == ["uniswap", "balancer", "curve", "dodo"]
        shared = series[0].x_values
        for s in series:
            assert s.x_values == shared
            assert all(a < b for a, b in zip(s.y_values, s.y_values[1:]))

    def test_constant_product_limit_pairs_with_uniswap(self):
        config = ComparisonConfig(
            pools=(
                ("uniswap", uniswap_pool(100.0, 100.0)),
                ("curve", stableswap_pool((100.0, 100.0), 1e-8)),
            )
        )
        uni, curve = compare_protocols(config)
        for a, b in zip(uni.y_values, curve.y_values):
            assert abs(a - b) <= 1e-4

    def test_errors_name_the_offending_pool(self):
        config = ComparisonConfig(
            pools=(
                ("uniswap", uniswap_pool(100.0, 100.0)),
                ("dodo", pmm_pool(100.0, 100.0, 1.0, 0.5)),
            ),
            kind=SeriesKind.DIVERGENCE_LOSS,
        )
        with pytest.raises(NotApplicable, match="pool 'dodo'"):
            compare_protocols(config)

    def test_parallel_evaluation_is_reproducible(self):
        config = four_pool_config()
        serial = compare_protocols(config)
        with ThreadPoolExecutor(max_workers=8) as executor:
            threaded = compare_protocols(config, point_map=executor.map)
        assert serial == threaded
