"""Analytic pricers for the worked payoff examples.

Each pricer evaluates a closed-form conditional expectation given the
market state (xi_t, gamma_tT): the binary credit bond, the recovery bond
(uniform recovery band plus full-payment atom), log-normal and power
payoffs on a normal factor, and the exponentially distributed payoff.
They serve both as fast paths and as independent cross-checks of the
general quadrature engine; conversely the engine is the fallback at
bridge values where a formula's xi/gamma ratio degenerates.

State fields ``t``, ``xi`` and ``bridge`` may be numpy arrays of a common
broadcastable shape; all pricers vectorize over them.

Note on the exponential payoff: the source statement of the formula omits
the discount factor present in the general pricing theorem and in the
other propositions; we apply the discount for consistency.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.special import log_ndtr

from . import pricing_kernel
from .errors import DomainError, StateError
from .pricing_kernel import (
    Atom,
    Exponential,
    MarketFactorDistribution,
    MarketState,
    ModelParams,
    Normal,
    Payoff,
    Uniform,
)

__all__ = [
    "BinaryBondSpec",
    "RecoveryBondSpec",
    "LogNormalSpec",
    "ExponentialSpec",
    "binary_bond_price",
    "recovery_bond_price",
    "gaussian_tilt_integral",
    "lognormal_price",
    "power_payoff_price",
    "exponential_payoff_price",
    "match_closed_form",
    "closed_form_price",
    "price_path_closed",
]

#: below this bridge value the mu-hat formulas degenerate; delegate to the kernel
BRIDGE_FALLBACK = 1e-8

_LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)


# ---------------------------------------------------------------------------
# payoff/prior specifications
# ---------------------------------------------------------------------------

def _check_probability_pair(p0: float, p1: float) -> None:
    if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
        raise DomainError(f"probabilities must lie in [0,1], got p0={p0}, p1={p1}")
    if abs(p0 + p1 - 1.0) > 1e-12:
        raise DomainError(f"p0 + p1 must equal 1, got {p0 + p1!r}")


@dataclass(frozen=True)
class BinaryBondSpec:
    """Credit-risky zero-recovery bond: X_T = 0 w.p. p0, X_T = 1 w.p. p1."""

    p0: float
    p1: float

    def __post_init__(self):
        _check_probability_pair(self.p0, self.p1)

    def implied_prior(self) -> MarketFactorDistribution:
        return MarketFactorDistribution.from_atoms([(self.p0, 0.0), (self.p1, 1.0)])

    def implied_payoff(self) -> Payoff:
        return Payoff.identity()


@dataclass(frozen=True)
class RecoveryBondSpec:
    """Bond paying c w.p. p1, else a uniformly distributed recovery in [a, b].

    The closed form weighs the recovery band with density p0 per unit
    length (continuous mass p0*(b-a) against atom mass p1, then
    normalized), which coincides with a proper mixture exactly when
    b - a = 1.  ``implied_prior`` returns the normalized mixture the
    formula actually prices, so closed form and kernel agree for every
    band width.
    """

    p0: float
    p1: float
    a: float
    b: float
    c: float

    def __post_init__(self):
        _check_probability_pair(self.p0, self.p1)
        if not (0.0 <= self.a < self.b <= self.c):
            raise DomainError(
                f"need 0 <= a < b <= c, got a={self.a}, b={self.b}, c={self.c}"
            )

    def implied_prior(self) -> MarketFactorDistribution:
        mass_u = self.p0 * (self.b - self.a)
        total = mass_u + self.p1
        if self.p1 == 0.0:
            return MarketFactorDistribution.single(Uniform(self.a, self.b))
        if self.p0 == 0.0:
            return MarketFactorDistribution.single(Atom(self.c))
        return MarketFactorDistribution(
            ((mass_u / total, Uniform(self.a, self.b)), (self.p1 / total, Atom(self.c)))
        )

    def implied_payoff(self) -> Payoff:
        return Payoff.identity()


@dataclass(frozen=True)
class LogNormalSpec:
    """Normal(mu, nu^2) market factor with payoff e^{q X_T} (q=1: the asset)."""

    mu: float
    nu: float
    q: float = 1.0

    def __post_init__(self):
        if not (self.nu > 0.0 and math.isfinite(self.nu)):
            raise DomainError(f"LogNormalSpec requires nu > 0, got {self.nu}")
        if not (math.isfinite(self.mu) and math.isfinite(self.q)):
            raise DomainError("LogNormalSpec requires finite mu and q")

    def implied_prior(self) -> MarketFactorDistribution:
        return MarketFactorDistribution.single(Normal(self.mu, self.nu))

    def implied_payoff(self) -> Payoff:
        return Payoff.exponential_scale(self.q)


@dataclass(frozen=True)
class ExponentialSpec:
    """Exponentially distributed payoff: X_T ~ exp(lam), identity payoff."""

    lam: float

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"ExponentialSpec requires lam > 0, got {self.lam}")

    def implied_prior(self) -> MarketFactorDistribution:
        return MarketFactorDistribution.single(Exponential(self.lam))

    def implied_payoff(self) -> Payoff:
        return Payoff.identity()


ClosedFormSpec = Union[BinaryBondSpec, RecoveryBondSpec, LogNormalSpec, ExponentialSpec]


# ---------------------------------------------------------------------------
# stable normal-tail helpers
# ---------------------------------------------------------------------------

def _log_phi_diff(alpha_lo, alpha_hi):
    """log(Phi(alpha_hi) - Phi(alpha_lo)) for alpha_hi > alpha_lo, both tails safe."""
    alpha_lo = np.asarray(alpha_lo, dtype=float)
    alpha_hi = np.asarray(alpha_hi, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        l_lo, l_hi = log_ndtr(alpha_lo), log_ndtr(alpha_hi)
        lower = l_hi + np.log1p(-np.exp(l_lo - l_hi))
        u_hi, u_lo = log_ndtr(-alpha_lo), log_ndtr(-alpha_hi)
        upper = u_hi + np.log1p(-np.exp(u_lo - u_hi))
    return np.where(alpha_lo + alpha_hi < 0.0, lower, upper)


def _log_std_pdf(alpha):
    return -0.5 * alpha * alpha - _LOG_SQRT_TWO_PI


# ---------------------------------------------------------------------------
# vectorized cores (assume bridge >= BRIDGE_FALLBACK where mu-hat is used)
# ---------------------------------------------------------------------------

def _discount(state: MarketState, t):
    return np.exp(-state.r * (state.T - t))


def _binary_core(spec: BinaryBondSpec, xi, g, t, state: MarketState):
    shape = np.broadcast(xi, g, t).shape
    disc = _discount(state, t)
    if spec.p1 == 0.0:
        return np.zeros(shape)
    if spec.p0 == 0.0:
        return np.broadcast_to(np.asarray(disc, dtype=float), shape).copy()
    a_exp = (state.sigma * xi - 0.5 * state.sigma**2 * g) / (1.0 - g)
    e = np.exp(-np.abs(a_exp))
    num = np.where(a_exp >= 0.0, spec.p1, spec.p1 * e)
    den = np.where(a_exp >= 0.0, spec.p1 + spec.p0 * e, spec.p0 + spec.p1 * e)
    return disc * num / den


def _recovery_core(spec: RecoveryBondSpec, xi, g, t, state: MarketState):
    sigma = state.sigma
    nu = np.sqrt((1.0 - g) / g) / sigma
    mu_hat = xi / (sigma * g)
    al_a = (spec.a - mu_hat) / nu
    al_b = (spec.b - mu_hat) / nu
    al_c = (spec.c - mu_hat) / nu
    l_dphi = _log_phi_diff(al_a, al_b)
    l_f_c = _log_std_pdf(al_c) - np.log(nu)
    # truncated-normal mean on [a, b]: mu_hat + nu*(phi(al_a)-phi(al_b))/dPhi
    lp_a, lp_b = _log_std_pdf(al_a), _log_std_pdf(al_b)
    l_max = np.maximum(lp_a, lp_b)
    l_min = np.minimum(lp_a, lp_b)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        mag = np.where(
            np.isneginf(l_dphi), 0.0, np.exp(l_max - l_dphi + np.log1p(-np.exp(l_min - l_max)))
        )
    tmean = np.clip(mu_hat + nu * np.sign(lp_a - lp_b) * mag, spec.a, spec.b)
    with np.errstate(divide="ignore"):
        l_p0 = math.log(spec.p0) if spec.p0 > 0.0 else -math.inf
        l_p1 = math.log(spec.p1) if spec.p1 > 0.0 else -math.inf
        l_tmean = np.log(tmean)
    log_num = np.logaddexp(l_p0 + l_dphi + l_tmean, l_p1 + math.log(spec.c) + l_f_c)
    log_den = np.logaddexp(l_p0 + l_dphi, l_p1 + l_f_c)
    return _discount(state, t) * np.exp(log_num - log_den)


def _exponential_core(spec: ExponentialSpec, xi, g, t, state: MarketState):
    sigma = state.sigma
    nu = np.sqrt((1.0 - g) / g) / sigma
    mu_hat = xi / (sigma * g) - spec.lam * (1.0 - g) / (sigma**2 * g)
    alpha = mu_hat / nu
    # E[Y | Y > 0] for Y ~ N(mu_hat, nu^2), via the inverse Mills ratio
    mills = np.exp(_log_std_pdf(alpha) - log_ndtr(alpha))
    return _discount(state, t) * np.maximum(mu_hat + nu * mills, 0.0)


def _power_log_price_forms(spec: LogNormalSpec, q: float, xi, g, t, state: MarketState):
    """Log price of the e^{q x} payoff by both algebraic routes.

    The direct route rearranges K*(q*xi/(sigma*g) - q*mu - q^2 nu^2/2) over
    the common denominator D = (1-g) + nu^2 sigma^2 g, which removes the
    g=0 singularity; the second route is the log of the tilted-integral
    ratio I(q)/I(0).  Both are returned so callers can assert agreement.
    """
    sigma, mu, nu = state.sigma, spec.mu, spec.nu
    base = -state.r * (state.T - t)
    d = (1.0 - g) + nu**2 * sigma**2 * g
    direct = (
        base
        + q * mu
        + 0.5 * q * q * nu**2
        + q * nu**2 * sigma * xi / d
        - nu**2 * sigma**2 * g * (q * mu + 0.5 * q * q * nu**2) / d
    )
    a_t = (1.0 - g + nu**2 * sigma**2 * g) / (nu**2 * (1.0 - g))
    ratio = base + q * (q + 2.0 * mu / nu**2 + 2.0 * sigma * xi / (1.0 - g)) / (2.0 * a_t)
    return direct, ratio


def _power_core(spec: LogNormalSpec, q: float, xi, g, t, state: MarketState):
    direct, ratio = _power_log_price_forms(spec, q, xi, g, t, state)
    err = np.abs(direct - ratio) / (1.0 + np.abs(direct))
    if not np.all(err <= 1e-9):
        raise StateError(
            "the two algebraic forms of the log-normal price disagree "
            f"(max relative gap {float(np.max(err)):.3e})"
        )
    return np.exp(direct)


# ---------------------------------------------------------------------------
# scalar/array dispatch with kernel fallback near bridge = 0
# ---------------------------------------------------------------------------

def _kernel_fallback(spec: ClosedFormSpec, state: MarketState, t, xi, g) -> float:
    st = MarketState(
        t=float(t), T=state.T, xi=float(xi), bridge=float(g),
        sigma=state.sigma, r=state.r, m=state.m,
    )
    return pricing_kernel.price(spec.implied_payoff(), spec.implied_prior(), st)


def _priced_with_fallback(spec: ClosedFormSpec, state: MarketState, core, needs_fallback: bool):
    """Evaluate a vectorized core, delegating bridge ~ 0 entries to the kernel."""
    xi = np.asarray(state.xi, dtype=float)
    g = np.asarray(state.bridge, dtype=float)
    t = np.asarray(state.t, dtype=float)
    shape = np.broadcast(xi, g, t).shape
    if not needs_fallback:
        out = core(spec, xi, g, t, state)
        return float(out) if state.is_scalar() else np.broadcast_to(out, shape).copy()
    safe_g = np.maximum(g, BRIDGE_FALLBACK)
    with np.errstate(invalid="ignore"):
        out = np.broadcast_to(core(spec, xi, safe_g, t, state), shape).copy()
    mask = np.broadcast_to(g < BRIDGE_FALLBACK, shape)
    if np.any(mask):
        xi_b = np.broadcast_to(xi, shape)
        g_b = np.broadcast_to(g, shape)
        t_b = np.broadcast_to(t, shape)
        cache: dict = {}
        for idx in np.argwhere(mask):
            key = (float(xi_b[tuple(idx)]), float(g_b[tuple(idx)]), float(t_b[tuple(idx)]))
            if key not in cache:
                cache[key] = _kernel_fallback(spec, state, key[2], key[0], key[1])
            out[tuple(idx)] = cache[key]
    return float(out) if state.is_scalar() else out


# ---------------------------------------------------------------------------
# public pricers
# ---------------------------------------------------------------------------

def binary_bond_price(spec: BinaryBondSpec, state: MarketState):
    """Binary bond price e^{-r(T-t)} p1 e^A / (p0 + p1 e^A), A = (sigma xi - sigma^2 g/2)/(1-g).

    Evaluated in sigmoid form with exp(-|A|) only, so no overflow occurs
    as the bridge approaches one.
    """
    return _priced_with_fallback(spec, state, _binary_core, needs_fallback=False)


def recovery_bond_price(spec: RecoveryBondSpec, state: MarketState):
    """Recovery bond price: posterior mean of the band/atom mixture.

    Uses mu_hat = xi/(sigma*g) and nu = sqrt((1-g)/g)/sigma; tail masses
    and the truncated-band mean are assembled in log space, so states with
    the posterior far from the support stay accurate.  States with
    bridge < 1e-8 delegate to the general kernel (mu_hat degenerates).
    """
    return _priced_with_fallback(spec, state, _recovery_core, needs_fallback=True)


def gaussian_tilt_integral(q: float, spec: LogNormalSpec, state: MarketState):
    """Tilted-Gaussian integral I_t(q) = (1/(nu sqrt(A))) exp(B^2/(2A) - C).

    A = (1-g+nu^2 sigma^2 g)/(nu^2 (1-g)), B = q + mu/nu^2 + sigma xi/(1-g),
    C = mu^2/(2 nu^2).  Returned in linear scale, which can overflow for
    extreme tilts; the price functions combine the two integrals in log
    space instead of calling this.
    """
    g = np.asarray(state.bridge, dtype=float)
    xi = np.asarray(state.xi, dtype=float)
    sigma, mu, nu = state.sigma, spec.mu, spec.nu
    a_t = (1.0 - g + nu**2 * sigma**2 * g) / (nu**2 * (1.0 - g))
    b_t = q + mu / nu**2 + sigma * xi / (1.0 - g)
    c = mu**2 / (2.0 * nu**2)
    out = np.exp(0.5 * b_t * b_t / a_t - c) / (nu * np.sqrt(a_t))
    return float(out) if state.is_scalar() else out


def lognormal_price(spec: LogNormalSpec, state: MarketState):
    """Price of the asset paying e^{X_T} for a Normal(mu, nu^2) factor.

    Both algebraic forms (the explicit exponent with
    K = nu^2 sigma^2 g (1-g)^{-1} / (1 + nu^2 sigma^2 g (1-g)^{-1}) and
    the tilted-integral ratio e^{-r(T-t)} I(1)/I(0)) are computed and
    asserted equal; the exponent is arranged over the common denominator
    (1-g) + nu^2 sigma^2 g so that g = 0 needs no special casing.
    """
    def core(sp, xi, g, t, st):
        return _power_core(sp, 1.0, xi, g, t, st)

    return _priced_with_fallback(spec, state, core, needs_fallback=False)


def power_payoff_price(spec: LogNormalSpec, state: MarketState):
    """Price of the power payoff e^{q X_T}; q = spec.q (q=1 recovers the asset)."""
    def core(sp, xi, g, t, st):
        return _power_core(sp, sp.q, xi, g, t, st)

    return _priced_with_fallback(spec, state, core, needs_fallback=False)


def exponential_payoff_price(spec: ExponentialSpec, state: MarketState):
    """Price of the identity payoff on an exponential prior.

    Closed form discount * (mu_hat - N1(0, mu_hat, nu)) / (1 - N0(0, mu_hat, nu))
    with mu_hat = xi/(sigma g) - lam (1-g)/(sigma^2 g), evaluated as the
    truncated-normal mean mu_hat + nu * phi(alpha)/Phi(alpha) via the log
    normal-CDF for tail stability.  The discount factor is applied (see
    module note).  bridge < 1e-8 delegates to the general kernel.
    """
    return _priced_with_fallback(spec, state, _exponential_core, needs_fallback=True)


# ---------------------------------------------------------------------------
# dispatch helpers used by the CLI
# ---------------------------------------------------------------------------

def match_closed_form(dist: MarketFactorDistribution, payoff: Payoff) -> Optional[ClosedFormSpec]:
    """Closed-form spec matching a (prior, payoff) pair, or None.

    Recognized pairs: two atoms at {0,1} with identity payoff (binary
    bond); uniform band plus one atom at/above the band with identity
    payoff (recovery bond); a single normal component with an exponential
    payoff (log-normal/power); a single exponential component with
    identity payoff.
    """
    comps = dist.components
    atoms = dist.atoms
    cont = dist.continuous
    if payoff.kind == "exponential_scale":
        if len(comps) == 1 and isinstance(comps[0][1], Normal):
            comp = comps[0][1]
            return LogNormalSpec(mu=comp.mu, nu=comp.nu, q=payoff.q)
        return None
    if payoff.kind != "identity":
        return None
    if len(comps) == 1 and isinstance(comps[0][1], Exponential):
        return ExponentialSpec(lam=comps[0][1].lam)
    if len(comps) == 2 and len(atoms) == 2:
        xs = {atoms[0][1].x, atoms[1][1].x}
        if xs == {0.0, 1.0}:
            w = {c.x: wt for wt, c in atoms}
            return BinaryBondSpec(p0=w[0.0], p1=w[1.0])
        return None
    if len(comps) == 2 and len(atoms) == 1 and len(cont) == 1 and isinstance(cont[0][1], Uniform):
        (w_u, u), (w_a, atom) = cont[0], atoms[0]
        if 0.0 <= u.a < u.b <= atom.x and w_u > 0.0 and w_a > 0.0:
            dens = w_u / (u.b - u.a)
            p0 = dens / (dens + w_a)
            return RecoveryBondSpec(p0=p0, p1=w_a / (dens + w_a), a=u.a, b=u.b, c=atom.x)
    return None


def closed_form_price(spec: ClosedFormSpec, state: MarketState):
    """Dispatch a spec to its pricer."""
    if isinstance(spec, BinaryBondSpec):
        return binary_bond_price(spec, state)
    if isinstance(spec, RecoveryBondSpec):
        return recovery_bond_price(spec, state)
    if isinstance(spec, LogNormalSpec):
        return power_payoff_price(spec, state)
    if isinstance(spec, ExponentialSpec):
        return exponential_payoff_price(spec, state)
    raise TypeError(f"not a closed-form spec: {type(spec).__name__}")


def price_path_closed(spec: ClosedFormSpec, bundle, params: ModelParams) -> np.ndarray:
    """Vectorized price trajectories along a PathBundle via a closed form.

    Matches pricing_kernel.price_path: interior nodes use the conditional
    price, the terminal column holds the realized payoff.
    """
    if bundle.sigma != params.sigma or bundle.m != params.m or bundle.grid.T != params.T:
        raise StateError("bundle parameters (sigma, m, T) do not match params")
    nodes = bundle.grid.nodes
    state = MarketState(
        t=np.broadcast_to(nodes[:-1], bundle.info[:, :-1].shape),
        T=params.T,
        xi=bundle.info[:, :-1],
        bridge=bundle.bridge[:, :-1],
        sigma=params.sigma,
        r=params.r,
        m=params.m,
    )
    out = np.empty_like(bundle.info)
    out[:, :-1] = closed_form_price(spec, state)
    payoff = spec.implied_payoff()
    out[:, -1] = np.asarray(payoff.terminal_value(bundle.x_draw, params.r, params.T), dtype=float)
    return out
