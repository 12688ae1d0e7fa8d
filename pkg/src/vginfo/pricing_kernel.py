"""General information-based pricing engine.

Prices a payoff h(X_T) at time t by Bayesian conditioning on the pair
(xi_t, gamma_tT): the prior law of the market factor is reweighted by the
kernel exp[(sigma*xi*x - 0.5*sigma^2*x^2*b) / (1-b)] and the price is the
discounted posterior expectation of the payoff.  Mixture priors combine
point masses with uniform / normal / exponential / tabulated continuous
components; continuous parts are integrated by fixed Gauss-Legendre rules
on supports adapted to the kernel tilt, with all mass accounting performed
in log space.

Everything here is a pure function of value-like inputs and is safe to call
concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import (
    DomainError,
    IntegrabilityError,
    PosteriorUnderflowError,
    StateError,
)

__all__ = [
    "Atom",
    "Uniform",
    "Normal",
    "Exponential",
    "Tabulated",
    "MarketFactorDistribution",
    "MarketState",
    "ModelParams",
    "PosteriorDistribution",
    "Payoff",
    "log_kernel",
    "posterior",
    "price",
    "digital_price",
    "price_path",
]

#: number of Gauss-Legendre nodes per continuous component
N_QUAD = 256

#: states closer to expiry than this in bridge units are clamped and flagged
BRIDGE_CLAMP = 1e-10

_GL_X, _GL_W = leggauss(N_QUAD)

_LOG_SQRT_TWO_PI = 0.5 * math.log(2.0 * math.pi)

# half-width of Gaussian quadrature windows, in posterior standard deviations;
# exp(-12^2/2) ~ 5e-32 leaves the truncated tails far below 1e-12 relative
_GAUSS_HALF_WIDTH = 12.0
# e-folds of decay to cover when the integrand is a one-sided exponential tail
_TAIL_EFOLDS = 45.0


# ---------------------------------------------------------------------------
# prior components
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    """Point mass at x."""

    x: float

    def __post_init__(self):
        if not math.isfinite(self.x):
            raise DomainError(f"Atom requires finite x, got {self.x}")


@dataclass(frozen=True)
class Uniform:
    """Uniform density on [a, b]."""

    a: float
    b: float

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b) and self.a < self.b):
            raise DomainError(f"Uniform requires a < b finite, got [{self.a}, {self.b}]")


@dataclass(frozen=True)
class Normal:
    """Normal(mu, nu^2) density."""

    mu: float
    nu: float

    def __post_init__(self):
        if not (math.isfinite(self.mu) and self.nu > 0.0 and math.isfinite(self.nu)):
            raise DomainError(f"Normal requires finite mu and nu > 0, got ({self.mu}, {self.nu})")


@dataclass(frozen=True)
class Exponential:
    """Exponential density lam * exp(-lam*x) on [0, inf)."""

    lam: float

    def __post_init__(self):
        if not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise DomainError(f"Exponential requires lam > 0, got {self.lam}")


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Piecewise-linear density given by values on sorted nodes.

    The trapezoid integral of the density over the nodes must equal one
    to within 1e-9; integration and tilting honor the supplied nodes and
    never resample.
    """

    xs: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        xs = np.asarray(self.xs, dtype=float)
        density = np.asarray(self.density, dtype=float)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "density", density)
        if xs.ndim != 1 or xs.size < 2 or xs.shape != density.shape:
            raise DomainError("Tabulated requires matching 1-d arrays with >= 2 nodes")
        if not np.all(np.diff(xs) > 0.0):
            raise DomainError("Tabulated nodes must be strictly increasing")
        if np.any(density < 0.0) or not np.all(np.isfinite(density)):
            raise DomainError("Tabulated density must be finite and nonnegative")
        total = float(np.trapezoid(density, xs))
        if abs(total - 1.0) > 1e-9:
            raise DomainError(
                f"Tabulated density must integrate to 1 (trapezoid), got {total!r}"
            )


Component = Union[Atom, Uniform, Normal, Exponential, Tabulated]

_CONTINUOUS = (Uniform, Normal, Exponential, Tabulated)


@dataclass(frozen=True, eq=False)
class MarketFactorDistribution:
    """Mixture prior for the market factor X_T.

    ``components`` is a sequence of (weight, component) pairs; weights are
    nonnegative and sum to one within 1e-12.
    """

    components: tuple

    def __post_init__(self):
        comps = tuple((float(w), c) for w, c in self.components)
        object.__setattr__(self, "components", comps)
        if not comps:
            raise DomainError("MarketFactorDistribution requires at least one component")
        total = 0.0
        for w, comp in comps:
            if not (w >= 0.0 and math.isfinite(w)):
                raise DomainError(f"component weight must be finite and >= 0, got {w}")
            if not isinstance(comp, (Atom,) + _CONTINUOUS):
                raise DomainError(f"unknown component type: {type(comp).__name__}")
            total += w
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"component weights must sum to 1, got {total!r}")

    @classmethod
    def from_atoms(cls, pairs: Sequence[tuple[float, float]]) -> "MarketFactorDistribution":
        """Purely atomic prior from (weight, x) pairs."""
        return cls(tuple((w, Atom(x)) for w, x in pairs))

    @classmethod
    def single(cls, comp: Component) -> "MarketFactorDistribution":
        return cls(((1.0, comp),))

    @property
    def atoms(self) -> list[tuple[float, Atom]]:
        return [(w, c) for w, c in self.components if isinstance(c, Atom)]

    @property
    def continuous(self) -> list[tuple[float, Component]]:
        return [(w, c) for w, c in self.components if not isinstance(c, Atom)]

    def mean(self) -> float:
        """Prior mean (trapezoid rule for tabulated components)."""
        out = 0.0
        for w, comp in self.components:
            if isinstance(comp, Atom):
                out += w * comp.x
            elif isinstance(comp, Uniform):
                out += w * 0.5 * (comp.a + comp.b)
            elif isinstance(comp, Normal):
                out += w * comp.mu
            elif isinstance(comp, Exponential):
                out += w / comp.lam
            else:
                out += w * float(np.trapezoid(comp.xs * comp.density, comp.xs))
        return out

    def sample(self, rng: np.random.Generator) -> float:
        """Draw one variate from the mixture using the supplied generator."""
        u = rng.random()
        acc = 0.0
        chosen = self.components[-1][1]
        for w, comp in self.components:
            acc += w
            if u <= acc:
                chosen = comp
                break
        return _sample_component(chosen, rng)


def _sample_component(comp: Component, rng: np.random.Generator) -> float:
    if isinstance(comp, Atom):
        return comp.x
    if isinstance(comp, Uniform):
        return comp.a + (comp.b - comp.a) * rng.random()
    if isinstance(comp, Normal):
        return comp.mu + comp.nu * rng.standard_normal()
    if isinstance(comp, Exponential):
        return rng.exponential(1.0 / comp.lam)
    # tabulated: exact inverse-CDF sampling of the piecewise-linear density
    xs, dens = comp.xs, comp.density
    cell_mass = 0.5 * (dens[1:] + dens[:-1]) * np.diff(xs)
    cum = np.concatenate(([0.0], np.cumsum(cell_mass)))
    total = cum[-1]
    u = rng.random() * total
    i = int(np.searchsorted(cum, u, side="right") - 1)
    i = min(max(i, 0), len(xs) - 2)
    target = u - cum[i]
    dx = xs[i + 1] - xs[i]
    f0 = dens[i]
    slope = (dens[i + 1] - dens[i]) / dx
    if abs(slope) < 1e-300:
        d = target / f0 if f0 > 0.0 else 0.0
    else:
        # solve f0*d + slope*d^2/2 = target for d in [0, dx]
        disc = f0 * f0 + 2.0 * slope * target
        d = (math.sqrt(max(disc, 0.0)) - f0) / slope
    return float(xs[i] + min(max(d, 0.0), dx))


# ---------------------------------------------------------------------------
# market state and model parameters
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MarketState:
    """Conditioning state (t, T, xi_t, gamma_tT) plus model constants.

    ``bridge`` values within BRIDGE_CLAMP of one are clamped to 1 - 1e-10
    and the state is flagged; the pricing formula is stated for t < T and
    exact expiry is handled by ``price_path``'s terminal rule.  Fields
    ``t``, ``xi`` and ``bridge`` may be numpy arrays of a common shape for
    vectorized closed-form pricing; the kernel operations require scalars.
    """

    t: float
    T: float
    xi: float
    bridge: float
    sigma: float
    r: float = 0.0
    m: float = 100.0
    clamped: bool = False

    def __post_init__(self):
        if not np.all(np.asarray(self.T) > 0.0):
            raise StateError(f"horizon must be positive, got T = {self.T}")
        if not (np.all(np.asarray(self.t) >= 0.0) and np.all(np.asarray(self.t) < np.asarray(self.T))):
            raise StateError("need 0 <= t < T")
        if not np.all(np.asarray(self.sigma) > 0.0):
            raise StateError(f"sigma must be positive, got {self.sigma}")
        if not np.all(np.asarray(self.m) > 0.0):
            raise StateError(f"m must be positive, got {self.m}")
        if not np.all(np.isfinite(np.asarray(self.xi))):
            raise StateError(f"xi must be finite, got {self.xi}")
        b = np.asarray(self.bridge, dtype=float)
        if not (np.all(b >= 0.0) and np.all(b <= 1.0)):
            raise StateError(f"bridge must lie in [0, 1], got {self.bridge}")
        mask = b > 1.0 - BRIDGE_CLAMP
        if np.any(mask):
            clamped = np.minimum(b, 1.0 - BRIDGE_CLAMP)
            if np.isscalar(self.bridge) or np.ndim(self.bridge) == 0:
                clamped = float(clamped)
            object.__setattr__(self, "bridge", clamped)
            object.__setattr__(self, "clamped", True)

    @property
    def discount(self):
        """e^{-r (T - t)} to expiry."""
        return np.exp(-self.r * (self.T - self.t))

    def is_scalar(self) -> bool:
        return np.ndim(self.t) == 0 and np.ndim(self.xi) == 0 and np.ndim(self.bridge) == 0


@dataclass(frozen=True)
class ModelParams:
    """Model constants shared by a simulation/pricing run."""

    sigma: float
    m: float
    r: float
    T: float

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")
        if not self.m > 0.0:
            raise DomainError(f"m must be positive, got {self.m}")
        if not self.T > 0.0:
            raise DomainError(f"T must be positive, got {self.T}")
        if not math.isfinite(self.r):
            raise DomainError(f"r must be finite, got {self.r}")

    def state(self, t: float, xi: float, bridge: float) -> MarketState:
        return MarketState(t=t, T=self.T, xi=xi, bridge=bridge, sigma=self.sigma, r=self.r, m=self.m)


# ---------------------------------------------------------------------------
# payoffs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Payoff:
    """Terminal payoff h(X_T).

    Kinds: ``identity`` (h(x) = x), ``exponential_scale`` (h(x) = e^{q x}),
    ``digital`` (h(x) = e^{rT} * 1{x <= K}) and ``custom`` (user-supplied
    nonnegative h).  Integrability under the tilted prior is checked
    numerically at pricing time.
    """

    kind: str
    q: Optional[float] = None
    K: Optional[float] = None
    h: Optional[Callable] = None

    def __post_init__(self):
        if self.kind not in ("identity", "exponential_scale", "digital", "custom"):
            raise DomainError(f"unknown payoff kind: {self.kind!r}")
        if self.kind == "exponential_scale" and (self.q is None or not math.isfinite(self.q)):
            raise DomainError("exponential_scale payoff requires finite q")
        if self.kind == "digital" and (self.K is None or not math.isfinite(self.K)):
            raise DomainError("digital payoff requires finite K")
        if self.kind == "custom" and not callable(self.h):
            raise DomainError("custom payoff requires a callable h")

    @classmethod
    def identity(cls) -> "Payoff":
        return cls(kind="identity")

    @classmethod
    def exponential_scale(cls, q: float) -> "Payoff":
        return cls(kind="exponential_scale", q=q)

    @classmethod
    def digital(cls, K: float) -> "Payoff":
        return cls(kind="digital", K=K)

    @classmethod
    def custom(cls, h: Callable) -> "Payoff":
        return cls(kind="custom", h=h)

    def terminal_value(self, x, r: float, T: float):
        """Payoff cash flow at expiry for realized factor value x."""
        x = np.asarray(x, dtype=float)
        if self.kind == "identity":
            out = x
        elif self.kind == "exponential_scale":
            out = np.exp(self.q * x)
        elif self.kind == "digital":
            out = math.exp(r * T) * (x <= self.K).astype(float)
        else:
            out = np.vectorize(self.h, otypes=[float])(x)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# posterior summary
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PosteriorDistribution:
    """Posterior law of X_T given (xi_t, gamma_tT), in prior mixture form.

    Atoms carry reweighted masses; each continuous component is represented
    by its posterior density sampled on that component's quadrature nodes,
    with integration weights such that sum(masses) + sum(density * weights)
    is one to within 1e-10.  ``log_z`` is the log of the unnormalized kernel
    integral Z from the pricing formula (``z`` may overflow to inf for
    near-expiry states; the log form is always finite).
    """

    atom_xs: np.ndarray
    atom_masses: np.ndarray
    node_xs: np.ndarray
    node_densities: np.ndarray
    node_weights: np.ndarray
    log_z: float

    @property
    def z(self) -> float:
        return math.exp(self.log_z) if self.log_z < 709.0 else math.inf

    def total_mass(self) -> float:
        return float(self.atom_masses.sum() + (self.node_densities * self.node_weights).sum())

    def mean(self) -> float:
        return float(
            (self.atom_xs * self.atom_masses).sum()
            + (self.node_xs * self.node_densities * self.node_weights).sum()
        )

    def to_json_record(self) -> dict:
        return {
            "Z": self.z,
            "atom_masses": self.atom_masses.tolist(),
            "node_xs": self.node_xs.tolist(),
            "node_densities": self.node_densities.tolist(),
        }


# ---------------------------------------------------------------------------
# kernel and quadrature internals
# ---------------------------------------------------------------------------

def log_kernel(x, state: MarketState):
    """Log Bayes reweighting factor (sigma*xi*x - 0.5*sigma^2*x^2*b)/(1-b)."""
    b = state.bridge
    if not np.all(np.asarray(b) < 1.0):
        raise StateError(f"log_kernel requires bridge < 1, got {b}")
    x = np.asarray(x, dtype=float)
    out = (state.sigma * state.xi * x - 0.5 * state.sigma**2 * x * x * b) / (1.0 - b)
    return out if out.ndim else float(out)


def _kernel_coeffs(state: MarketState, extra_lin: float = 0.0) -> tuple[float, float]:
    """Linear and quadratic coefficients of the total exponential tilt.

    The tilted integrand of every continuous component is proportional to
    prior_density(x) * exp(lin*x + quad*x^2); ``extra_lin`` folds an
    exponential payoff e^{q x} into the tilt.
    """
    b = state.bridge
    lin = state.sigma * state.xi / (1.0 - b) + extra_lin
    quad = -0.5 * state.sigma**2 * b / (1.0 - b)
    return lin, quad


def _gl_nodes(lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    return mid + half * _GL_X, half * _GL_W


def _component_support(comp, lin: float, quad: float) -> tuple[float, float]:
    """Integration window adapted to the kernel tilt.

    For normal and exponential components the tilted integrand is an exact
    Gaussian bump (possibly truncated at zero); the window follows the bump
    rather than the prior's own scale, which keeps the fixed-size rule
    accurate for sharply concentrated posteriors near expiry.
    """
    if isinstance(comp, Uniform):
        return comp.a, comp.b
    if isinstance(comp, Normal):
        prec = 1.0 / comp.nu**2 - 2.0 * quad
        mean = (comp.mu / comp.nu**2 + lin) / prec
        s = 1.0 / math.sqrt(prec)
        return mean - _GAUSS_HALF_WIDTH * s, mean + _GAUSS_HALF_WIDTH * s
    if isinstance(comp, Exponential):
        lin_eff = lin - comp.lam
        if quad == 0.0:
            if lin_eff >= 0.0:
                raise IntegrabilityError(
                    "exponential prior with non-decaying tilt: kernel integral diverges"
                )
            return 0.0, _TAIL_EFOLDS / (-lin_eff)
        prec = -2.0 * quad
        mean = lin_eff / prec
        s = 1.0 / math.sqrt(prec)
        if mean > 0.0:
            return max(0.0, mean - _GAUSS_HALF_WIDTH * s), mean + _GAUSS_HALF_WIDTH * s
        # bump peak at or below the origin: the integrand decays monotonically
        # from x = 0; cover _TAIL_EFOLDS of the combined linear + quadratic
        # decay, i.e. solve (-quad) hi^2 + (-lin_eff) hi = _TAIL_EFOLDS
        a = -quad
        b_lin = -lin_eff
        hi = (-b_lin + math.sqrt(b_lin * b_lin + 4.0 * a * _TAIL_EFOLDS)) / (2.0 * a)
        return 0.0, hi
    raise TypeError(f"no quadrature support for {type(comp).__name__}")


def _log_prior_density(comp, x: np.ndarray) -> np.ndarray:
    if isinstance(comp, Uniform):
        return np.full_like(x, -math.log(comp.b - comp.a))
    if isinstance(comp, Normal):
        u = (x - comp.mu) / comp.nu
        return -0.5 * u * u - math.log(comp.nu) - _LOG_SQRT_TWO_PI
    if isinstance(comp, Exponential):
        return math.log(comp.lam) - comp.lam * x
    raise TypeError(f"no analytic density for {type(comp).__name__}")


def _trapezoid_weights(xs: np.ndarray) -> np.ndarray:
    w = np.zeros_like(xs)
    dx = np.diff(xs)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def _continuous_log_terms(
    comp, weight: float, state: MarketState, extra_lin: float = 0.0, hi_cut: float | None = None
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quadrature abscissas, weights and log masses for one component.

    Returns (xs, w, log_terms) with log_terms = log(weight) + log(w) +
    log prior density + kernel tilt, so that exp(log_terms).sum() is the
    component's unnormalized tilted mass.  ``hi_cut`` restricts integration
    to x <= hi_cut (used for CDF evaluation).
    """
    lin, quad = _kernel_coeffs(state, extra_lin)
    logw = math.log(weight) if weight > 0.0 else -math.inf
    if isinstance(comp, Tabulated):
        xs, dens = comp.xs, comp.density
        if hi_cut is not None:
            if hi_cut <= xs[0]:
                return np.empty(0), np.empty(0), np.empty(0)
            if hi_cut < xs[-1]:
                i = int(np.searchsorted(xs, hi_cut, side="right"))
                frac = (hi_cut - xs[i - 1]) / (xs[i] - xs[i - 1])
                d_at = dens[i - 1] + frac * (dens[i] - dens[i - 1])
                xs = np.concatenate((xs[:i], [hi_cut]))
                dens = np.concatenate((dens[:i], [d_at]))
        w = _trapezoid_weights(xs)
        with np.errstate(divide="ignore"):
            log_f = np.log(dens)
            log_w = np.log(w)
        return xs, w, logw + log_w + log_f + lin * xs + quad * xs * xs
    lo, hi = _component_support(comp, lin, quad)
    if hi_cut is not None:
        if hi_cut <= lo:
            return np.empty(0), np.empty(0), np.empty(0)
        hi = min(hi, hi_cut)
    xs, w = _gl_nodes(lo, hi)
    return xs, w, logw + np.log(w) + _log_prior_density(comp, xs) + lin * xs + quad * xs * xs


def _atom_log_terms(dist: MarketFactorDistribution, state: MarketState) -> tuple[np.ndarray, np.ndarray]:
    atoms = dist.atoms
    if not atoms:
        return np.empty(0), np.empty(0)
    xs = np.array([c.x for _, c in atoms])
    ws = np.array([w for w, _ in atoms])
    with np.errstate(divide="ignore"):
        logs = np.log(ws) + log_kernel(xs, state)
    return xs, logs


def _require_scalar(state: MarketState, op: str) -> None:
    if not state.is_scalar():
        raise StateError(f"{op} requires a scalar MarketState")


def _normalization(atom_logs: np.ndarray, cont_logs: list[np.ndarray]) -> float:
    """log Z via log-sum-exp over all atom and node mass terms."""
    mass_logs = np.concatenate([atom_logs] + cont_logs) if cont_logs else atom_logs
    if mass_logs.size == 0:
        raise PosteriorUnderflowError("empty distribution", float("-inf"))
    m_log = float(np.max(mass_logs))
    if not math.isfinite(m_log):
        raise PosteriorUnderflowError("posterior mass underflowed to zero", m_log)
    return m_log + math.log(float(np.exp(mass_logs - m_log).sum()))


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

def posterior(dist: MarketFactorDistribution, state: MarketState) -> PosteriorDistribution:
    """Posterior distribution of X_T given the market state.

    Atom masses are proportional to weight * exp(log_kernel(x)); continuous
    densities are reweighted pointwise by the same kernel.  Normalization
    uses log-sum-exp over all atoms and quadrature nodes.
    """
    _require_scalar(state, "posterior")
    atom_xs, atom_logs = _atom_log_terms(dist, state)
    cont = [_continuous_log_terms(comp, w, state) for w, comp in dist.continuous]
    log_z = _normalization(atom_logs, [lt for _, _, lt in cont])
    atom_masses = np.exp(atom_logs - log_z)
    if cont:
        node_xs = np.concatenate([xs for xs, _, _ in cont])
        node_weights = np.concatenate([w for _, w, _ in cont])
        with np.errstate(divide="ignore", invalid="ignore"):
            node_densities = np.concatenate(
                [
                    np.where(w > 0.0, np.exp(lt - log_z) / np.where(w > 0.0, w, 1.0), 0.0)
                    for _, w, lt in cont
                ]
            )
    else:
        node_xs = node_weights = node_densities = np.empty(0)
    return PosteriorDistribution(
        atom_xs=atom_xs,
        atom_masses=atom_masses,
        node_xs=node_xs,
        node_densities=node_densities,
        node_weights=node_weights,
        log_z=log_z,
    )


def _lse(logs: list[np.ndarray]) -> float:
    """log(sum(exp(...))) over concatenated arrays; -inf when empty/zero."""
    arr = np.concatenate(logs) if logs else np.empty(0)
    if arr.size == 0:
        return -math.inf
    m = float(np.max(arr))
    if not math.isfinite(m):
        return -math.inf
    return m + math.log(float(np.exp(arr - m).sum()))


def _check_tail_truncation(comp, xs: np.ndarray, w: np.ndarray, lt: np.ndarray) -> None:
    """Reject integrands that still carry mass at a truncated support edge.

    Only meaningful for custom payoffs: the built-in kinds fold their growth
    into the Gaussian support planning analytically.
    """
    if xs.size == 0 or not isinstance(comp, (Normal, Exponential)):
        return
    with np.errstate(divide="ignore"):
        log_integrand = lt - np.log(w)
    peak = float(np.max(log_integrand))
    if not math.isfinite(peak):
        return
    edges = [log_integrand[-1]]
    if isinstance(comp, Normal):
        edges.append(log_integrand[0])
    if any(e > peak - 30.0 for e in edges):
        raise IntegrabilityError(
            "payoff integrand does not decay at the quadrature truncation edge; "
            "the pricing integral is divergent or numerically untrustworthy"
        )


def _cdf_log_mass(dist: MarketFactorDistribution, state: MarketState, K: float) -> float:
    """Log of the unnormalized tilted mass of {X_T <= K}."""
    atom_xs, atom_logs = _atom_log_terms(dist, state)
    terms = [atom_logs[atom_xs <= K]] if atom_xs.size else []
    for w, comp in dist.continuous:
        _, _, lt = _continuous_log_terms(comp, w, state, hi_cut=K)
        terms.append(lt)
    return _lse(terms)


def price(payoff: Payoff, dist: MarketFactorDistribution, state: MarketState) -> float:
    """Time-t price e^{-r(T-t)} * E[h(X_T) | xi_t, gamma_tT].

    Atoms are summed exactly; continuous components are integrated by
    fixed Gauss-Legendre rules on tilt-adapted supports (trapezoid on the
    supplied nodes for tabulated components).  All mass terms are combined
    in log space after subtracting the running maximum.
    """
    _require_scalar(state, "price")
    if payoff.kind == "digital":
        return digital_price(payoff.K, dist, state)

    atom_xs, atom_logs = _atom_log_terms(dist, state)
    cont = [(comp, *_continuous_log_terms(comp, w, state)) for w, comp in dist.continuous]
    log_z = _normalization(atom_logs, [lt for _, _, _, lt in cont])
    disc = float(state.discount)

    if payoff.kind == "identity":
        # h(x) = x may be signed: accumulate in scaled linear space on the
        # same node set as the normalization integral
        mass_logs = [atom_logs] + [lt for _, _, _, lt in cont]
        m_log = float(np.max(np.concatenate(mass_logs)))
        num = float((atom_xs * np.exp(atom_logs - m_log)).sum()) if atom_xs.size else 0.0
        for _, xs, _, lt in cont:
            num += float((xs * np.exp(lt - m_log)).sum())
        return disc * num * math.exp(m_log - log_z)

    if payoff.kind == "exponential_scale":
        q = payoff.q
        num_atoms = atom_logs + q * atom_xs if atom_xs.size else atom_logs
        num_cont = [
            _continuous_log_terms(comp, w, state, extra_lin=q)[2]
            for w, comp in dist.continuous
        ]
        log_num = _lse([num_atoms] + num_cont)
        return disc * math.exp(log_num - log_z) if math.isfinite(log_num) else 0.0

    # custom payoff: evaluate h on atoms and kernel-adapted nodes
    h = payoff.h
    num_terms = []
    if atom_xs.size:
        h_atoms = np.array([float(h(x)) for x in atom_xs])
        if np.any(h_atoms < 0.0) or not np.all(np.isfinite(h_atoms)):
            raise DomainError("custom payoff must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            num_terms.append(atom_logs + np.log(h_atoms))
    for comp, xs, w, lt in cont:
        if xs.size == 0:
            continue
        h_vals = np.asarray([float(h(x)) for x in xs])
        if np.any(h_vals < 0.0) or not np.all(np.isfinite(h_vals)):
            raise DomainError("custom payoff must be finite and nonnegative")
        with np.errstate(divide="ignore"):
            lt_h = lt + np.log(h_vals)
        _check_tail_truncation(comp, xs, w, lt_h)
        num_terms.append(lt_h)
    log_num = _lse(num_terms)
    return disc * math.exp(log_num - log_z) if math.isfinite(log_num) else 0.0


def digital_price(K: float, dist: MarketFactorDistribution, state: MarketState) -> float:
    """Price of the digital payoff e^{rT} * 1{X_T <= K}, i.e. e^{rt} * P(X_T <= K | state).

    The CDF mass below K is integrated on dedicated quadrature windows cut
    at K, so the discontinuity never falls between nodes.
    """
    _require_scalar(state, "digital_price")
    if not math.isfinite(K):
        raise DomainError(f"digital_price requires finite K, got {K}")
    atom_xs, atom_logs = _atom_log_terms(dist, state)
    cont_logs = [
        _continuous_log_terms(comp, w, state)[2] for w, comp in dist.continuous
    ]
    log_z = _normalization(atom_logs, cont_logs)
    log_mass = _cdf_log_mass(dist, state, K)
    prob = math.exp(min(log_mass - log_z, 0.0)) if math.isfinite(log_mass) else 0.0
    return math.exp(state.r * state.t) * prob


def price_path(
    payoff: Payoff,
    dist: MarketFactorDistribution,
    bundle,
    params: ModelParams,
) -> np.ndarray:
    """Price trajectories S_{t_k} along simulated paths via the general kernel.

    ``bundle`` is a path_sim.PathBundle whose (sigma, m, T) must match
    ``params``.  For k < n_steps the Theorem-style conditional price is
    evaluated at each node; the terminal column holds the realized payoff
    h(x_draw) (the limit value of S_t as t -> T).
    """
    if bundle.sigma != params.sigma or bundle.m != params.m or bundle.grid.T != params.T:
        raise StateError(
            "bundle parameters (sigma, m, T) = "
            f"({bundle.sigma}, {bundle.m}, {bundle.grid.T}) do not match "
            f"params ({params.sigma}, {params.m}, {params.T})"
        )
    nodes = bundle.grid.nodes
    n_paths = bundle.info.shape[0]
    out = np.empty((n_paths, nodes.size))
    for k, t in enumerate(nodes[:-1]):
        for i in range(n_paths):
            st = MarketState(
                t=float(t),
                T=params.T,
                xi=float(bundle.info[i, k]),
                bridge=float(bundle.bridge[i, k]),
                sigma=params.sigma,
                r=params.r,
                m=params.m,
            )
            out[i, k] = price(payoff, dist, st)
    terminal = payoff.terminal_value(bundle.x_draw, params.r, params.T)
    out[:, -1] = np.asarray(terminal, dtype=float)
    return out
