"""Statistical testing primitives for the verification suite.

Moment tests with standard-error bands estimated from the sample itself,
a Kolmogorov-Smirnov test against an arbitrary target CDF, two-sample
zero-correlation tests, and a martingale-flatness test over simulated
price trajectories.  All tests are pure functions of in-memory samples
and deterministic given the upstream seeds.

Band conventions: moment and correlation tests use 4-standard-error bands
by default and the KS test runs at the 1% asymptotic level (critical
value 1.63/sqrt(N)); with roughly thirty checks in the full suite this
keeps the false-failure rate negligible while still letting the negative
controls fail decisively.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError

__all__ = [
    "CheckResult",
    "MomentCheck",
    "mean_check",
    "variance_check",
    "ks_test",
    "correlation_zero_test",
    "martingale_flatness",
]

#: asymptotic 1%-level KS critical constant (c(alpha) with alpha = 0.01)
KS_CRITICAL_1PCT = 1.63


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one statistical check, consumable by run reports."""

    name: str
    statistic: float
    threshold: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{status} {self.name}: statistic={self.statistic:.6g} threshold={self.threshold:.6g}{extra}"


@dataclass(frozen=True)
class MomentCheck:
    """Sample statistic vs target with a k-standard-error acceptance band."""

    name: str
    n: int
    statistic: float
    target: float
    se: float
    k: float = 4.0

    @property
    def passed(self) -> bool:
        return abs(self.statistic - self.target) <= self.k * self.se

    def result(self) -> CheckResult:
        return CheckResult(
            name=self.name,
            statistic=self.statistic,
            threshold=self.k * self.se,
            passed=self.passed,
            detail=f"target={self.target:.6g}, n={self.n}",
        )


def _clean_sample(sample, min_n: int, what: str) -> np.ndarray:
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < min_n:
        raise DomainError(f"{what} requires at least {min_n} observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DomainError(f"{what} requires finite observations")
    return x


def mean_check(name: str, sample, target: float, k: float = 4.0) -> MomentCheck:
    """Sample mean against a target, band k * s/sqrt(N)."""
    x = _clean_sample(sample, 2, "mean_check")
    se = float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return MomentCheck(name=name, n=x.size, statistic=float(np.mean(x)), target=target, se=se, k=k)


def variance_check(name: str, sample, target: float, k: float = 4.0) -> MomentCheck:
    """Sample variance against a target.

    The standard error uses the asymptotic variance of the sample variance,
    sqrt((m4 - s^4)/N) with m4 the central fourth moment, estimated from
    the sample itself.
    """
    x = _clean_sample(sample, 2, "variance_check")
    n = x.size
    centered = x - np.mean(x)
    s2 = float(np.var(x, ddof=1))
    m4 = float(np.mean(centered**4))
    se = math.sqrt(max(m4 - s2 * s2, 0.0) / n)
    return MomentCheck(name=name, n=n, statistic=s2, target=target, se=se, k=k)


def ks_test(sample, cdf: Callable, name: str = "ks") -> CheckResult:
    """One-sample Kolmogorov-Smirnov test at the 1% asymptotic level.

    ``cdf`` maps sorted sample values to target CDF values (vectorized).
    Passes iff D_N <= 1.63/sqrt(N).
    """
    x = np.sort(_clean_sample(sample, 100, "ks_test"))
    n = x.size
    f = np.asarray(cdf(x), dtype=float)
    if np.any(f < -1e-12) or np.any(f > 1.0 + 1e-12) or np.any(np.diff(f) < -1e-12):
        raise DomainError("ks_test requires a valid nondecreasing CDF on [0,1]")
    steps = np.arange(n + 1) / n
    d = float(max(np.max(steps[1:] - f), np.max(f - steps[:-1])))
    crit = KS_CRITICAL_1PCT / math.sqrt(n)
    return CheckResult(name=name, statistic=d, threshold=crit, passed=d <= crit, detail=f"n={n}")


def correlation_zero_test(x, y, k: float = 4.0, name: str = "corr-zero") -> CheckResult:
    """Pearson-correlation test of uncorrelatedness: pass iff |r| <= k/sqrt(N).

    This checks zero correlation only, not full independence.  Degenerate
    (zero-variance) inputs are rejected rather than reported as passes.
    """
    xa = _clean_sample(x, 10_000, "correlation_zero_test")
    ya = _clean_sample(y, 10_000, "correlation_zero_test")
    if xa.size != ya.size:
        raise DomainError(f"sample lengths differ: {xa.size} vs {ya.size}")
    if np.std(xa) == 0.0 or np.std(ya) == 0.0:
        raise DomainError("correlation_zero_test requires non-degenerate samples")
    r = float(np.corrcoef(xa, ya)[0, 1])
    thr = k / math.sqrt(xa.size)
    return CheckResult(name=name, statistic=abs(r), threshold=thr, passed=abs(r) <= thr, detail=f"n={xa.size}")


def martingale_flatness(
    prices: np.ndarray,
    r: float,
    grid,
    k: float = 4.0,
    stride: int = 10,
    name: str = "martingale-flatness",
) -> CheckResult:
    """Flatness of the discounted price mean along the grid.

    ``prices`` has shape (n_paths, n_nodes) matching ``grid.nodes``.  At
    every ``stride``-th node the sample mean of e^{-r t_k} S_{t_k} must lie
    within k standard errors (of that node's own sample) of the time-zero
    value.  The reported statistic is the worst deviation in standard-error
    units.
    """
    p = np.asarray(prices, dtype=float)
    if p.ndim != 2 or p.shape[1] != grid.nodes.size:
        raise DomainError("prices must be (n_paths, n_nodes) matching the grid")
    if p.shape[0] < 10_000:
        raise DomainError(f"martingale_flatness requires >= 10^4 paths, got {p.shape[0]}")
    if stride < 1:
        raise DomainError(f"stride must be >= 1, got {stride}")
    nodes = grid.nodes
    idx = np.arange(0, nodes.size, stride)
    if idx[-1] != nodes.size - 1:
        idx = np.append(idx, nodes.size - 1)
    disc = p[:, idx] * np.exp(-r * nodes[idx])[None, :]
    ref = float(np.mean(disc[:, 0]))
    worst = 0.0
    n = p.shape[0]
    for j in range(idx.size):
        col = disc[:, j]
        se = float(np.std(col, ddof=1)) / math.sqrt(n)
        diff = abs(float(np.mean(col)) - ref)
        z = 0.0 if diff == 0.0 else (diff / se if se > 0.0 else math.inf)
        worst = max(worst, z)
    return CheckResult(
        name=name, statistic=worst, threshold=k, passed=worst <= k,
        detail=f"n={n}, nodes={idx.size}",
    )
