"""Statistical check primitives: calibration, power, and input validation.

Each check must (a) pass on a conforming sample drawn with a fixed seed,
(b) fail decisively on a deliberately broken sample, and (c) reject
malformed inputs with DomainError rather than reporting a pass.
"""

import math

import numpy as np
import pytest

from vginfo.errors import DomainError
from vginfo.path_sim import TimeGrid
from vginfo.stats_validation import (
    KS_CRITICAL_1PCT,
    CheckResult,
    correlation_zero_test,
    ks_test,
    martingale_flatness,
    mean_check,
    variance_check,
)

RNG = np.random.default_rng(20260825)


# ---------------------------------------------------------------------------
# moment checks
# ---------------------------------------------------------------------------

def test_mean_check_calibrated():
    x = RNG.normal(0.5, 1.0, size=50_000)
    check = mean_check("calib", x, target=0.5)
    assert check.passed
    assert check.se == pytest.approx(1.0 / math.sqrt(50_000), rel=0.05)
    # a target 8 standard errors off must fail
    off = mean_check("off", x, target=0.5 + 8.0 * check.se)
    assert not off.passed


def test_variance_check_calibrated():
    x = RNG.normal(0.0, 2.0, size=50_000)
    check = variance_check("calib", x, target=4.0)
    assert check.passed
    assert not variance_check("off", x, target=5.2).passed


def test_variance_se_matches_gaussian_asymptotics():
    # for normal data m4 - s^4 = 2 sigma^4, so se ~ sigma^2 sqrt(2/N)
    x = RNG.normal(0.0, 1.5, size=200_000)
    check = variance_check("se", x, target=2.25)
    expect = 1.5**2 * math.sqrt(2.0 / 200_000)
    assert check.se == pytest.approx(expect, rel=0.2)


def test_moment_check_result_structure():
    x = RNG.normal(1.0, 1.0, size=1_000)
    res = mean_check("gamma-mean", x, target=1.0, k=3.0).result()
    assert isinstance(res, CheckResult)
    assert res.threshold == pytest.approx(3.0 * mean_check("again", x, 1.0).se)
    assert "target=1" in res.detail and "n=1000" in res.detail


def test_moment_checks_reject_bad_samples():
    with pytest.raises(DomainError):
        mean_check("short", [1.0], target=1.0)
    with pytest.raises(DomainError):
        mean_check("nan", [1.0, math.nan, 2.0], target=1.0)
    with pytest.raises(DomainError):
        variance_check("short", [2.0], target=1.0)


# ---------------------------------------------------------------------------
# Kolmogorov-Smirnov
# ---------------------------------------------------------------------------

def test_ks_accepts_matching_distribution():
    u = RNG.random(5_000)
    res = ks_test(u, lambda x: x, name="uniform")
    assert res.passed
    assert res.threshold == pytest.approx(KS_CRITICAL_1PCT / math.sqrt(5_000))


def test_ks_rejects_wrong_distribution():
    u = RNG.random(5_000)
    res = ks_test(u, lambda x: np.clip(x, 0.0, 1.0) ** 2, name="wrong")
    assert not res.passed


def test_ks_input_validation():
    with pytest.raises(DomainError):
        ks_test(RNG.random(99), lambda x: x)
    with pytest.raises(DomainError):
        ks_test(RNG.random(500), lambda x: 1.0 - x)  # decreasing
    with pytest.raises(DomainError):
        ks_test(RNG.random(500), lambda x: 2.0 * x)  # exceeds one


# ---------------------------------------------------------------------------
# zero-correlation
# ---------------------------------------------------------------------------

def test_correlation_zero_passes_for_independent_pairs():
    x = RNG.standard_normal(20_000)
    y = RNG.standard_normal(20_000)
    res = correlation_zero_test(x, y)
    assert res.passed
    assert res.threshold == pytest.approx(4.0 / math.sqrt(20_000))


def test_correlation_zero_fails_for_dependent_pairs():
    x = RNG.standard_normal(20_000)
    assert not correlation_zero_test(x, x, name="self").passed
    assert not correlation_zero_test(x, 0.2 * x + RNG.standard_normal(20_000)).passed


def test_correlation_zero_input_validation():
    x = RNG.standard_normal(20_000)
    with pytest.raises(DomainError):
        correlation_zero_test(x[:5_000], x[5_000:10_000])  # too few
    with pytest.raises(DomainError):
        correlation_zero_test(x, x[:15_000])  # length mismatch
    with pytest.raises(DomainError):
        correlation_zero_test(x, np.full(20_000, 2.0))  # degenerate


# ---------------------------------------------------------------------------
# martingale flatness
# ---------------------------------------------------------------------------

def _martingale_prices(n_paths=10_000, n_steps=100, r=0.0):
    """S_0 = 1 plus a mean-zero random walk, compounded at rate r."""
    grid = TimeGrid(T=1.0, n_steps=n_steps)
    inc = RNG.normal(0.0, 0.01, size=(n_paths, n_steps))
    s = np.concatenate([np.ones((n_paths, 1)), 1.0 + np.cumsum(inc, axis=1)], axis=1)
    return s * np.exp(r * grid.nodes)[None, :], grid


def test_martingale_flatness_passes_for_martingale():
    prices, grid = _martingale_prices(r=0.02)
    res = martingale_flatness(prices, r=0.02, grid=grid)
    assert res.passed, res.line()


def test_martingale_flatness_detects_drift():
    prices, grid = _martingale_prices(r=0.0)
    drifted = prices + 0.01 * grid.nodes[None, :]
    res = martingale_flatness(drifted, r=0.0, grid=grid, name="drift")
    assert not res.passed
    assert res.statistic > 4.0


def test_martingale_flatness_constant_prices_are_exactly_flat():
    grid = TimeGrid(T=1.0, n_steps=20)
    prices = np.full((10_000, 21), 3.5)
    res = martingale_flatness(prices, r=0.0, grid=grid, stride=5)
    assert res.passed
    assert res.statistic == 0.0


def test_martingale_flatness_input_validation():
    prices, grid = _martingale_prices(n_paths=10_000, n_steps=20)
    with pytest.raises(DomainError):
        martingale_flatness(prices[:, :10], r=0.0, grid=grid)  # node mismatch
    with pytest.raises(DomainError):
        martingale_flatness(prices[:500], r=0.0, grid=grid)  # too few paths
    with pytest.raises(DomainError):
        martingale_flatness(prices, r=0.0, grid=grid, stride=0)


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def test_check_result_line_format():
    ok = CheckResult(name="bridge-mean", statistic=0.123456789, threshold=0.5,
                     passed=True, detail="n=5")
    assert ok.line() == "PASS bridge-mean: statistic=0.123457 threshold=0.5 (n=5)"
    bad = CheckResult(name="drift", statistic=8.25, threshold=4.0, passed=False)
    assert bad.line() == "FAIL drift: statistic=8.25 threshold=4"
