"""Special functions and exact moment formulas for gamma-subordinated models.

Provides the exponential integral E1, Levy exponents and interval measures of
the gamma subordinator and the variance-gamma process, exact moments of the
subordinator and of the gamma bridge, and the normal CDF/PDF together with the
incomplete first moment used by the analytic pricers.

All functions are pure and thread-safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

from .errors import DomainError

__all__ = [
    "LevyInterval",
    "GammaParams",
    "exp_integral_e1",
    "levy_measure_interval",
    "levy_ratio",
    "gamma_levy_exponent",
    "vg_levy_exponent",
    "subordinator_moment",
    "bridge_moments",
    "vg_bridge_variance",
    "normal_cdf",
    "normal_pdf_general",
    "incomplete_first_moment",
]

EULER_GAMMA = 0.577215664901532860606512090082402431

_SQRT2 = math.sqrt(2.0)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LevyInterval:
    """A jump-size interval [lo, hi] with 0 < lo < hi, both finite."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 < self.lo < self.hi < math.inf):
            raise DomainError(
                f"LevyInterval requires 0 < lo < hi finite, got [{self.lo}, {self.hi}]"
            )

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class GammaParams:
    """Shape rate m (per unit time) and scale kappa of a gamma subordinator.

    A *standard* subordinator has kappa = 1/m, so that E[gamma_t] = t.
    """

    m: float
    kappa: float

    def __post_init__(self):
        if not (self.m > 0.0 and math.isfinite(self.m)):
            raise DomainError(f"GammaParams requires m > 0, got {self.m}")
        if not (self.kappa > 0.0 and math.isfinite(self.kappa)):
            raise DomainError(f"GammaParams requires kappa > 0, got {self.kappa}")

    @classmethod
    def standard(cls, m: float) -> "GammaParams":
        """Standard subordinator with unit mean rate: kappa = 1/m."""
        return cls(m=m, kappa=1.0 / m)


# ---------------------------------------------------------------------------
# exponential integral
# ---------------------------------------------------------------------------

def exp_integral_e1(z: float) -> float:
    """Exponential integral E1(z) = int_z^inf exp(-x)/x dx for z > 0.

    Two-regime evaluation: the alternating power series

        E1(z) = -gamma - log z + sum_{k>=1} (-1)^{k+1} z^k / (k * k!)

    for z <= 1, and the (even-form) continued fraction

        E1(z) = e^{-z} / (z + 1 - 1^2/(z + 3 - 2^2/(z + 5 - ...)))

    evaluated by the modified Lentz algorithm for z > 1.  Relative error is
    below 1e-12 across the positive axis (checked against adaptive
    quadrature in the test suite).

    Parameters
    ----------
    z : float
        Strictly positive argument.

    Returns
    -------
    float
        E1(z) >= 0; underflows to 0.0 for z beyond ~745.
    """
    z = float(z)
    if not (z > 0.0 and math.isfinite(z)):
        raise DomainError(f"exp_integral_e1 requires finite z > 0, got {z}")
    if z <= 1.0:
        total = -EULER_GAMMA - math.log(z)
        term = z  # (-1)^{k+1} z^k / (k * k!) at k = 1
        k = 1
        total += term
        while abs(term) > 1e-18 + 1e-16 * abs(total):
            # a_{k+1}/a_k = -z * k / (k+1)^2
            term *= -z * k / ((k + 1) * (k + 1))
            k += 1
            total += term
        return total
    # modified Lentz on V = z+1 - 1^2/(z+3 - 2^2/(z+5 - ...)); E1 = e^{-z}/V
    tiny = 1e-300
    f = z + 1.0
    c = f
    d = 0.0
    for k in range(1, 500):
        a_k = -float(k * k)
        b_k = z + 2.0 * k + 1.0
        d = b_k + a_k * d
        if d == 0.0:
            d = tiny
        c = b_k + a_k / c
        if c == 0.0:
            c = tiny
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-15:
            break
    return math.exp(-z) / f


# ---------------------------------------------------------------------------
# Levy measures and exponents
# ---------------------------------------------------------------------------

def levy_measure_interval(m: float, iv: LevyInterval) -> float:
    """Mass the gamma subordinator's Levy measure assigns to [iv.lo, iv.hi].

    Equals m * (E1(m*lo) - E1(m*hi)), i.e. the integral of the Levy density
    m * x^{-1} e^{-m x} over the interval.
    """
    if not (m > 0.0 and math.isfinite(m)):
        raise DomainError(f"levy_measure_interval requires m > 0, got {m}")
    return m * (exp_integral_e1(m * iv.lo) - exp_integral_e1(m * iv.hi))


def levy_ratio(m: float, ab: LevyInterval, cd: LevyInterval) -> float:
    """Ratio of Levy-measure masses R_m(a,b; c,d) = nu_m[a,b] / nu_m[c,d].

    For equal-length intervals with cd.lo > ab.lo the ratio exceeds one and
    is strictly increasing in m: large jumps become relatively rarer as the
    subordinator's activity parameter grows.
    """
    return levy_measure_interval(m, ab) / levy_measure_interval(m, cd)


def gamma_levy_exponent(alpha: float, p: GammaParams) -> float:
    """Levy exponent psi(alpha) = -m * log(1 - kappa*alpha) of the subordinator.

    Defined for alpha < 1/kappa; E[exp(alpha*gamma_t)] = exp(t*psi(alpha)).
    """
    if not alpha < 1.0 / p.kappa:
        raise DomainError(
            f"gamma_levy_exponent requires alpha < 1/kappa = {1.0 / p.kappa}, got {alpha}"
        )
    return -p.m * math.log1p(-p.kappa * alpha)


def vg_levy_exponent(alpha: float, m: float) -> float:
    """Levy exponent -m * log(1 - alpha^2/(2m)) of the standard VG process.

    Defined for alpha^2 < 2m; symmetric in alpha.
    """
    if not (m > 0.0 and math.isfinite(m)):
        raise DomainError(f"vg_levy_exponent requires m > 0, got {m}")
    if not alpha * alpha < 2.0 * m:
        raise DomainError(
            f"vg_levy_exponent requires |alpha| < sqrt(2m) = {math.sqrt(2.0 * m)}, got {alpha}"
        )
    return -m * math.log1p(-alpha * alpha / (2.0 * m))


def subordinator_moment(n: int, p: GammaParams, t: float) -> float:
    """n-th raw moment of the subordinator: E[gamma_t^n] = kappa^n (mt)_n.

    (mt)_n is the rising factorial (Pochhammer symbol); n = 0 gives 1.
    """
    if n < 0 or n != int(n):
        raise DomainError(f"subordinator_moment requires integer n >= 0, got {n}")
    if not t > 0.0:
        raise DomainError(f"subordinator_moment requires t > 0, got {t}")
    out = 1.0
    mt = p.m * t
    for j in range(int(n)):
        out *= p.kappa * (mt + j)
    return out


# ---------------------------------------------------------------------------
# gamma-bridge moments
# ---------------------------------------------------------------------------

def _check_bridge_times(t: float, T: float) -> None:
    if not T > 0.0:
        raise DomainError(f"horizon must be positive, got T = {T}")
    if not 0.0 <= t <= T:
        raise DomainError(f"need 0 <= t <= T, got t = {t}, T = {T}")


def bridge_moments(m: float, t: float, T: float) -> tuple[float, float]:
    """Mean and variance of the gamma bridge gamma_tT = gamma_t / gamma_T.

    The mean t/T is independent of m; the variance
    t(T-t) / (T^2 (1 + mT)) shrinks as the activity parameter m grows.
    """
    if not m > 0.0:
        raise DomainError(f"bridge_moments requires m > 0, got {m}")
    _check_bridge_times(t, T)
    mean = t / T
    var = t * (T - t) / (T * T * (1.0 + m * T))
    return mean, var


def vg_bridge_variance(m: float, t: float, T: float) -> float:
    """Variance m*t*(T-t) / (T*(1+mT)) of the normalized VG bridge at time t.

    Symmetric in t <-> T-t; tends to the Brownian-bridge variance t(T-t)/T
    as m -> infinity.
    """
    if not m > 0.0:
        raise DomainError(f"vg_bridge_variance requires m > 0, got {m}")
    _check_bridge_times(t, T)
    return m * t * (T - t) / (T * (1.0 + m * T))


# ---------------------------------------------------------------------------
# normal functions
# ---------------------------------------------------------------------------

def normal_cdf(x):
    """Standard normal CDF N(x) = erfc(-x/sqrt(2))/2, abs error <= 1e-15.

    Accepts scalars or numpy arrays.
    """
    out = 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)
    return out if isinstance(x, np.ndarray) else float(out)


def normal_pdf_general(x, mu: float, nu: float):
    """Density of Normal(mu, nu^2) at x; nu must be positive."""
    if not nu > 0.0:
        raise DomainError(f"normal_pdf_general requires nu > 0, got {nu}")
    u = (np.asarray(x, dtype=float) - mu) / nu
    out = np.exp(-0.5 * u * u) / (nu * _SQRT_TWO_PI)
    return out if isinstance(x, np.ndarray) else float(out)


def incomplete_first_moment(x, mu: float, nu: float):
    """Incomplete first moment N1(x) = int_{-inf}^x y * f(y; mu, nu) dy.

    Closed form mu*N((x-mu)/nu) - nu*phi((x-mu)/nu) where N and phi are the
    standard normal CDF and PDF.  N1(+inf) = mu recovers the full mean.
    """
    if not nu > 0.0:
        raise DomainError(f"incomplete_first_moment requires nu > 0, got {nu}")
    u = (np.asarray(x, dtype=float) - mu) / nu
    phi = np.exp(-0.5 * u * u) / _SQRT_TWO_PI
    out = mu * (0.5 * erfc(-u / _SQRT2)) - nu * phi
    return out if isinstance(x, np.ndarray) else float(out)
