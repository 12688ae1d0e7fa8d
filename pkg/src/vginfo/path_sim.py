"""Seedable simulation of gamma, gamma-bridge and VG information paths.

Follows the figure-generation recipe: draw the market factor, simulate a
gamma subordinator path on a uniform grid, normalize it into a gamma
bridge, subordinate an independent Brownian motion to build the normalized
variance-gamma bridge, and assemble the information process

    xi_t = Gamma_tT + sigma * gamma_tT * X_T.

Every path owns private RNG streams derived from (master seed, path index,
stage tag), so results are reproducible and independent of thread count or
evaluation order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DomainError, SimulationError
from .pricing_kernel import MarketFactorDistribution

__all__ = [
    "TimeGrid",
    "Seed",
    "PathBundle",
    "STAGE_GAMMA",
    "STAGE_GAUSS",
    "STAGE_FACTOR",
    "sample_gamma_path",
    "bridge_from_gamma",
    "sample_vg_bridge",
    "sample_information_path",
    "sample_market_factor",
    "simulate_paths",
    "decomposition_checks",
    "write_paths_csv",
]

# stage tags separating the RNG consumption of the three sampling stages;
# adding a stage never perturbs streams of existing stages
STAGE_GAMMA = 0
STAGE_GAUSS = 1
STAGE_FACTOR = 2

#: smallest admissible subordinator increment (underflow guard)
MIN_INCREMENT = 1e-300


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < t_1 < ... < t_n = T with t_k = k*T/n_steps."""

    T: float
    n_steps: int

    def __post_init__(self):
        if not (self.T > 0.0 and math.isfinite(self.T)):
            raise DomainError(f"TimeGrid requires T > 0, got {self.T}")
        if self.n_steps < 1 or self.n_steps != int(self.n_steps):
            raise DomainError(f"TimeGrid requires integer n_steps >= 1, got {self.n_steps}")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.n_steps + 1)

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    def index_of(self, t: float) -> int:
        """Index k with t_k == t (within rounding); raises if t is off-grid."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * max(self.T, 1.0):
            raise DomainError(f"{t} is not a node of the grid (T={self.T}, n_steps={self.n_steps})")
        return k


@dataclass(frozen=True)
class Seed:
    """Master seed plus per-path substream index.

    ``stream(stage)`` derives an independent generator by hashing
    (master, path_index, stage) through numpy's SeedSequence entropy
    mixer, so identical (master, path index) always reproduce the same
    path no matter how work is scheduled.
    """

    master: int
    path_index: int = 0

    def __post_init__(self):
        if not 0 <= int(self.master) < 2**64:
            raise DomainError(f"master seed must be a 64-bit unsigned integer, got {self.master}")
        if self.path_index < 0:
            raise DomainError(f"path_index must be >= 0, got {self.path_index}")

    def stream(self, stage: int) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=(int(self.master), int(self.path_index), int(stage)))
        return np.random.default_rng(ss)

    def for_path(self, path_index: int) -> "Seed":
        return Seed(master=self.master, path_index=path_index)


@dataclass(frozen=True, eq=False)
class PathBundle:
    """Simulated paths stacked as (n_paths, n_steps+1) arrays.

    ``w_terminal`` keeps the terminal subordinated-Brownian values so the
    sub-bridge decomposition checks can rebuild W at any node from
    vgb, bridge and gamma.
    """

    grid: TimeGrid
    gamma: np.ndarray
    bridge: np.ndarray
    vgb: np.ndarray
    info: np.ndarray
    x_draw: np.ndarray
    w_terminal: np.ndarray
    sigma: float
    m: float
    master_seed: int

    @property
    def n_paths(self) -> int:
        return self.gamma.shape[0]


class DecompositionResiduals(NamedTuple):
    vg_bridge: float
    information: float


# ---------------------------------------------------------------------------
# per-path sampling operations
# ---------------------------------------------------------------------------

def sample_gamma_path(grid: TimeGrid, m: float, seed: Seed) -> np.ndarray:
    """Standard gamma subordinator path: increments ~ Gamma(m*dt, 1/m).

    gamma[0] = 0 and E[gamma_t] = t.  Increments below 1e-300 are clamped
    so the terminal value can never vanish on fine grids.
    """
    if not m > 0.0:
        raise DomainError(f"sample_gamma_path requires m > 0, got {m}")
    rng = seed.stream(STAGE_GAMMA)
    inc = rng.gamma(shape=m * grid.dt, scale=1.0 / m, size=grid.n_steps)
    np.maximum(inc, MIN_INCREMENT, out=inc)
    out = np.empty(grid.n_steps + 1)
    out[0] = 0.0
    np.cumsum(inc, out=out[1:])
    return out


def bridge_from_gamma(gamma: np.ndarray) -> np.ndarray:
    """Gamma bridge gamma_tT = gamma_t / gamma_T with exact endpoints."""
    g_T = gamma[-1]
    if not g_T > 0.0:
        raise SimulationError(f"terminal subordinator value must be positive, got {g_T}")
    out = gamma / g_T
    out[0] = 0.0
    out[-1] = 1.0
    return out


def sample_vg_bridge(gamma: np.ndarray, bridge: np.ndarray, seed: Seed) -> tuple[np.ndarray, float]:
    """Normalized VG bridge Gamma_tT = (W_{gamma_t} - gamma_tT * W_{gamma_T}) / sqrt(gamma_T).

    The Brownian motion is built from Gaussian increments with variance
    equal to the subordinator increments.  Returns the bridge values and
    the terminal Brownian value W_{gamma_T}; vgb[0] and vgb[n] are exactly
    zero.
    """
    dg = np.diff(gamma)
    rng = seed.stream(STAGE_GAUSS)
    dw = rng.standard_normal(dg.size) * np.sqrt(dg)
    w = np.empty(gamma.size)
    w[0] = 0.0
    np.cumsum(dw, out=w[1:])
    w_T = w[-1]
    vgb = (w - bridge * w_T) / math.sqrt(gamma[-1])
    vgb[0] = 0.0
    vgb[-1] = 0.0
    return vgb, float(w_T)


def sample_information_path(vgb: np.ndarray, bridge: np.ndarray, sigma: float, x: float) -> np.ndarray:
    """Information process xi = vgb + sigma * bridge * x on the grid.

    Endpoints are exact: xi_0 = 0, xi_T = sigma * x.
    """
    if not sigma > 0.0:
        raise DomainError(f"sample_information_path requires sigma > 0, got {sigma}")
    return vgb + sigma * bridge * x


def sample_market_factor(dist: MarketFactorDistribution, seed: Seed) -> float:
    """Draw the terminal market factor X_T from the mixture prior."""
    rng = seed.stream(STAGE_FACTOR)
    return dist.sample(rng)


# ---------------------------------------------------------------------------
# bundle-level simulation
# ---------------------------------------------------------------------------

def _simulate_into(
    arrays: dict,
    grid: TimeGrid,
    m: float,
    sigma: float,
    dist: MarketFactorDistribution,
    master_seed: int,
    lo: int,
    hi: int,
) -> None:
    for i in range(lo, hi):
        seed = Seed(master=master_seed, path_index=i)
        g = sample_gamma_path(grid, m, seed)
        b = bridge_from_gamma(g)
        vgb, w_T = sample_vg_bridge(g, b, seed)
        x = sample_market_factor(dist, seed)
        arrays["gamma"][i] = g
        arrays["bridge"][i] = b
        arrays["vgb"][i] = vgb
        arrays["info"][i] = sample_information_path(vgb, b, sigma, x)
        arrays["x_draw"][i] = x
        arrays["w_terminal"][i] = w_T


def simulate_paths(
    grid: TimeGrid,
    m: float,
    sigma: float,
    dist: MarketFactorDistribution,
    n_paths: int,
    master_seed: int,
    n_threads: int | None = None,
) -> PathBundle:
    """Simulate a PathBundle of n_paths information paths.

    Deterministic in (master_seed, path index): the same bundle results
    for any ``n_threads``, because every path derives its own RNG streams
    and workers write disjoint row blocks.
    """
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    if n_threads is None:
        n_threads = os.cpu_count() or 1
    n_nodes = grid.n_steps + 1
    arrays = {
        "gamma": np.empty((n_paths, n_nodes)),
        "bridge": np.empty((n_paths, n_nodes)),
        "vgb": np.empty((n_paths, n_nodes)),
        "info": np.empty((n_paths, n_nodes)),
        "x_draw": np.empty(n_paths),
        "w_terminal": np.empty(n_paths),
    }
    if n_threads <= 1 or n_paths < 2:
        _simulate_into(arrays, grid, m, sigma, dist, master_seed, 0, n_paths)
    else:
        n_blocks = min(n_threads * 4, n_paths)
        bounds = np.linspace(0, n_paths, n_blocks + 1).astype(int)
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            futures = [
                pool.submit(
                    _simulate_into, arrays, grid, m, sigma, dist, master_seed, int(lo), int(hi)
                )
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                fut.result()
    return PathBundle(
        grid=grid,
        sigma=sigma,
        m=m,
        master_seed=master_seed,
        **arrays,
    )


# ---------------------------------------------------------------------------
# identity checks and CSV output
# ---------------------------------------------------------------------------

def decomposition_checks(bundle: PathBundle, s: float, t: float) -> DecompositionResiduals:
    """Max-absolute residuals of the sub-bridge decomposition identities.

    For grid times 0 <= s <= t <= T (t > 0) and u = T, checks

        Gamma_sT = sqrt(gamma_tT) * Gamma_st + gamma_st * Gamma_tT
        xi_s     = Gamma_st * sqrt(gamma_tT) + xi_t * gamma_st

    with all sub-bridges rebuilt from the same subordinator and Brownian
    values that generated the bundle (W at a node is recovered as
    vgb * sqrt(gamma_T) + bridge * W_T).
    """
    ks = bundle.grid.index_of(s)
    kt = bundle.grid.index_of(t)
    if not 0 <= ks <= kt:
        raise DomainError(f"need 0 <= s <= t, got s={s}, t={t}")
    if kt == 0:
        raise DomainError("t must be positive (gamma_t > 0 is required)")
    g_T = bundle.gamma[:, -1]
    sqrt_g_T = np.sqrt(g_T)
    w_T = bundle.w_terminal

    def w_at(k: int) -> np.ndarray:
        return bundle.vgb[:, k] * sqrt_g_T + bundle.bridge[:, k] * w_T

    g_s, g_t = bundle.gamma[:, ks], bundle.gamma[:, kt]
    w_s, w_t = w_at(ks), w_at(kt)
    gamma_st = g_s / g_t
    vgb_st = (w_s - gamma_st * w_t) / np.sqrt(g_t)
    bridge_s = g_s / g_T
    bridge_t = g_t / g_T
    vgb_sT = (w_s - bridge_s * w_T) / sqrt_g_T
    vgb_tT = (w_t - bridge_t * w_T) / sqrt_g_T

    res_vgb = np.max(np.abs(vgb_sT - (np.sqrt(bridge_t) * vgb_st + gamma_st * vgb_tT)))
    res_info = np.max(
        np.abs(bundle.info[:, ks] - (vgb_st * np.sqrt(bundle.bridge[:, kt]) + bundle.info[:, kt] * gamma_st))
    )
    return DecompositionResiduals(vg_bridge=float(res_vgb), information=float(res_info))


def write_paths_csv(bundle: PathBundle, path: str) -> None:
    """Write the bundle as CSV: path_id,k,t,gamma,bridge,vgb,info,x_draw.

    Floats are rendered with repr (shortest decimal string that round-trips
    to the same IEEE double), making output byte-identical for identical
    bundles.
    """
    nodes = bundle.grid.nodes
    with open(path, "w", newline="\n") as fh:
        fh.write("path_id,k,t,gamma,bridge,vgb,info,x_draw\n")
        for i in range(bundle.n_paths):
            x_repr = repr(float(bundle.x_draw[i]))
            for k in range(nodes.size):
                fh.write(
                    f"{i},{k},{float(nodes[k])!r},{float(bundle.gamma[i, k])!r},"
                    f"{float(bundle.bridge[i, k])!r},{float(bundle.vgb[i, k])!r},"
                    f"{float(bundle.info[i, k])!r},{x_repr}\n"
                )
