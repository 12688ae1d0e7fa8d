"""Path simulation: grids, seeds, subordinator/bridge sampling, identities.

Distributional targets checked against closed moments:

  * gamma subordinator: E[gamma_t] = t, Var[gamma_t] = t/m, nondecreasing
  * gamma bridge at time t: Beta(m*t, m*(T-t)), endpoints exactly 0 and 1
  * VG bridge at time t: mean 0, variance m*t*(T-t) / (T*(1+m*T)), zero at
    both endpoints
  * information path: xi = vgb + sigma * bridge * x exactly, xi_T = sigma*x

plus the sub-bridge decomposition identities, which must hold pathwise to
floating-point accuracy, and scheduling determinism of the threaded driver.
"""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps

from vginfo.errors import DomainError, SimulationError
from vginfo.path_sim import (
    STAGE_FACTOR,
    STAGE_GAMMA,
    STAGE_GAUSS,
    PathBundle,
    Seed,
    TimeGrid,
    bridge_from_gamma,
    decomposition_checks,
    sample_gamma_path,
    sample_information_path,
    sample_vg_bridge,
    simulate_paths,
    write_paths_csv,
)
from vginfo.pricing_kernel import MarketFactorDistribution
from vginfo.special_math import vg_bridge_variance
from vginfo.stats_validation import (
    correlation_zero_test,
    ks_test,
    mean_check,
    variance_check,
)

from conftest import MASTER_SEED


# ---------------------------------------------------------------------------
# TimeGrid
# ---------------------------------------------------------------------------

def test_grid_nodes_and_dt():
    grid = TimeGrid(T=2.0, n_steps=4)
    np.testing.assert_allclose(grid.nodes, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert grid.dt == 0.5
    assert grid.nodes[0] == 0.0 and grid.nodes[-1] == grid.T


@given(n_steps=st.integers(min_value=1, max_value=50), k=st.integers(min_value=0, max_value=50))
def test_grid_index_roundtrip(n_steps, k):
    k = min(k, n_steps)
    grid = TimeGrid(T=1.0, n_steps=n_steps)
    assert grid.index_of(float(grid.nodes[k])) == k


def test_grid_rejects_off_grid_times():
    grid = TimeGrid(T=1.0, n_steps=4)
    for bad in (0.1, -0.25, 1.25, 0.2500001):
        with pytest.raises(DomainError):
            grid.index_of(bad)


def test_grid_validation():
    with pytest.raises(DomainError):
        TimeGrid(T=0.0, n_steps=4)
    with pytest.raises(DomainError):
        TimeGrid(T=-1.0, n_steps=4)
    with pytest.raises(DomainError):
        TimeGrid(T=1.0, n_steps=0)


# ---------------------------------------------------------------------------
# Seed streams
# ---------------------------------------------------------------------------

def test_seed_streams_reproduce():
    a = Seed(master=5, path_index=3).stream(STAGE_GAMMA).uniform(size=8)
    b = Seed(master=5, path_index=3).stream(STAGE_GAMMA).uniform(size=8)
    np.testing.assert_array_equal(a, b)


def test_seed_stages_are_distinct():
    seed = Seed(master=5, path_index=3)
    draws = {
        stage: tuple(seed.stream(stage).uniform(size=4))
        for stage in (STAGE_GAMMA, STAGE_GAUSS, STAGE_FACTOR)
    }
    assert len(set(draws.values())) == 3


def test_seed_for_path_changes_stream():
    seed = Seed(master=5)
    a = seed.for_path(0).stream(STAGE_GAMMA).uniform(size=4)
    b = seed.for_path(1).stream(STAGE_GAMMA).uniform(size=4)
    assert not np.array_equal(a, b)
    assert seed.for_path(7).master == 5


def test_seed_validation():
    with pytest.raises(DomainError):
        Seed(master=-1)
    with pytest.raises(DomainError):
        Seed(master=2**64)
    with pytest.raises(DomainError):
        Seed(master=0, path_index=-2)


# ---------------------------------------------------------------------------
# gamma subordinator and gamma bridge
# ---------------------------------------------------------------------------

def test_gamma_path_shape_and_monotonicity():
    grid = TimeGrid(T=1.0, n_steps=16)
    g = sample_gamma_path(grid, m=2.0, seed=Seed(master=1, path_index=0))
    assert g.shape == (17,)
    assert g[0] == 0.0
    assert np.all(np.diff(g) > 0.0)


def test_gamma_path_rejects_bad_m():
    grid = TimeGrid(T=1.0, n_steps=4)
    with pytest.raises(DomainError):
        sample_gamma_path(grid, m=0.0, seed=Seed(master=1))


def test_gamma_moments(bundle_small):
    # E[gamma_t] = t and Var[gamma_t] = t/m at an interior node
    k = bundle_small.grid.index_of(0.5)
    sample = bundle_small.gamma[:, k]
    assert mean_check("gamma-mean", sample, 0.5).passed
    assert variance_check("gamma-var", sample, 0.5 / bundle_small.m).passed


def test_bridge_endpoints_exact(bundle_small):
    assert np.all(bundle_small.bridge[:, 0] == 0.0)
    assert np.all(bundle_small.bridge[:, -1] == 1.0)
    interior = bundle_small.bridge[:, 1:-1]
    assert np.all((interior > 0.0) & (interior < 1.0))


def test_bridge_is_beta_distributed(bundle_small):
    # gamma_tT ~ Beta(m t, m (T - t)); m = 100, t = 0.5, T = 1
    m, t, T = bundle_small.m, 0.5, bundle_small.grid.T
    sample = bundle_small.bridge[:, bundle_small.grid.index_of(t)]
    good = ks_test(sample, sps.beta(m * t, m * (T - t)).cdf, name="bridge-beta")
    assert good.passed, good.line()
    # a mis-specified activity parameter must be detected
    bad = ks_test(sample, sps.beta(50 * t, 50 * (T - t)).cdf, name="bridge-wrong-m")
    assert not bad.passed


def test_bridge_from_gamma_requires_positive_terminal():
    with pytest.raises(SimulationError):
        bridge_from_gamma(np.array([0.0, 0.0, 0.0]))


# ---------------------------------------------------------------------------
# VG bridge and information path
# ---------------------------------------------------------------------------

def test_vg_bridge_endpoints_and_moments(bundle_small):
    assert np.all(bundle_small.vgb[:, 0] == 0.0)
    assert np.all(bundle_small.vgb[:, -1] == 0.0)
    m, T = bundle_small.m, bundle_small.grid.T
    t = 0.5
    sample = bundle_small.vgb[:, bundle_small.grid.index_of(t)]
    assert mean_check("vgb-mean", sample, 0.0).passed
    assert variance_check("vgb-var", sample, vg_bridge_variance(m, t, T)).passed


def test_vg_bridge_matches_definition():
    # rebuild the bridge from a hand-rolled Brownian path
    grid = TimeGrid(T=1.0, n_steps=8)
    seed = Seed(master=77, path_index=0)
    g = sample_gamma_path(grid, m=5.0, seed=seed)
    b = bridge_from_gamma(g)
    vgb, w_T = sample_vg_bridge(g, b, seed)
    dw = seed.stream(STAGE_GAUSS).standard_normal(8) * np.sqrt(np.diff(g))
    w = np.concatenate([[0.0], np.cumsum(dw)])
    assert w_T == pytest.approx(w[-1], rel=1e-15)
    np.testing.assert_allclose(vgb[1:-1], (w - b * w[-1])[1:-1] / math.sqrt(g[-1]), rtol=1e-12)


def test_information_path_identity(bundle_small):
    # xi = vgb + sigma * bridge * x holds exactly (same arithmetic order)
    rebuilt = bundle_small.vgb + bundle_small.sigma * bundle_small.bridge * bundle_small.x_draw[:, None]
    np.testing.assert_array_equal(bundle_small.info, rebuilt)
    np.testing.assert_array_equal(
        bundle_small.info[:, -1], bundle_small.sigma * bundle_small.x_draw
    )
    assert np.all(bundle_small.info[:, 0] == 0.0)


def test_information_path_rejects_bad_sigma():
    with pytest.raises(DomainError):
        sample_information_path(np.zeros(3), np.zeros(3), sigma=0.0, x=1.0)


# ---------------------------------------------------------------------------
# bundle driver: determinism across scheduling
# ---------------------------------------------------------------------------

def _tiny_bundle(master: int, n_threads: int) -> PathBundle:
    """64 short paths with a two-point factor prior."""
    grid = TimeGrid(T=1.0, n_steps=6)
    dist = MarketFactorDistribution.from_atoms([(0.4, 0.0), (0.6, 1.0)])
    return simulate_paths(grid, m=10.0, sigma=1.0, dist=dist, n_paths=64,
                          master_seed=master, n_threads=n_threads)


def test_simulate_paths_thread_invariance():
    serial = _tiny_bundle(master=42, n_threads=1)
    threaded = _tiny_bundle(master=42, n_threads=4)
    for field in ("gamma", "bridge", "vgb", "info", "x_draw", "w_terminal"):
        np.testing.assert_array_equal(getattr(serial, field), getattr(threaded, field))


def test_simulate_paths_seed_sensitivity():
    a = _tiny_bundle(master=42, n_threads=2)
    b = _tiny_bundle(master=43, n_threads=2)
    assert not np.array_equal(a.gamma, b.gamma)
    assert not np.array_equal(a.info, b.info)


def test_simulate_paths_rejects_empty():
    grid = TimeGrid(T=1.0, n_steps=2)
    dist = MarketFactorDistribution.from_atoms([(1.0, 0.0)])
    with pytest.raises(DomainError):
        simulate_paths(grid, m=1.0, sigma=1.0, dist=dist, n_paths=0, master_seed=1)


# ---------------------------------------------------------------------------
# sub-bridge decomposition identities
# ---------------------------------------------------------------------------

def test_decomposition_identities_hold_pathwise(bundle_fine):
    rng = np.random.default_rng(314)
    nodes = bundle_fine.grid.nodes
    for _ in range(10):
        ks, kt = sorted(rng.choice(np.arange(1, nodes.size), size=2, replace=False))
        res = decomposition_checks(bundle_fine, float(nodes[ks]), float(nodes[kt]))
        assert res.vg_bridge < 1e-10, (ks, kt, res)
        assert res.information < 1e-10, (ks, kt, res)


def test_decomposition_argument_validation(bundle_fine):
    with pytest.raises(DomainError):
        decomposition_checks(bundle_fine, 0.7, 0.3)  # s > t
    with pytest.raises(DomainError):
        decomposition_checks(bundle_fine, 0.0, 0.0)  # gamma_t would vanish
    with pytest.raises(DomainError):
        decomposition_checks(bundle_fine, 0.005, 0.5)  # s off the grid


# ---------------------------------------------------------------------------
# independence structure
# ---------------------------------------------------------------------------

def test_vg_bridge_uncorrelated_with_terminal_gamma(bundle_small):
    k = bundle_small.grid.index_of(0.5)
    res = correlation_zero_test(
        bundle_small.vgb[:, k], bundle_small.gamma[:, -1], name="vgb-vs-gammaT"
    )
    assert res.passed, res.line()


def test_disjoint_sub_bridges_uncorrelated(bundle_small):
    # rebuild the VG bridge over [0, 1/2] and over [1/2, 1]; the sub-bridges
    # over disjoint spans must be uncorrelated
    g = bundle_small.gamma
    w_T = bundle_small.w_terminal
    w = bundle_small.vgb * np.sqrt(g[:, -1:]) + bundle_small.bridge * w_T[:, None]
    k_mid, k_end = 2, 4
    left = (w[:, 1] - (g[:, 1] / g[:, k_mid]) * w[:, k_mid]) / np.sqrt(g[:, k_mid])
    dg = g[:, k_end] - g[:, k_mid]
    right = (
        (w[:, 3] - w[:, k_mid]) - ((g[:, 3] - g[:, k_mid]) / dg) * (w[:, k_end] - w[:, k_mid])
    ) / np.sqrt(dg)
    res = correlation_zero_test(left, right, name="sub-bridge-disjoint")
    assert res.passed, res.line()


def test_correlation_control_detects_dependence():
    # Gamma_tT^2 and gamma_tT(1-gamma_tT) are genuinely dependent at small m;
    # the zero-correlation test must reject this pair or it has no power.
    grid = TimeGrid(T=1.0, n_steps=2)
    dist = MarketFactorDistribution.from_atoms([(1.0, 0.0)])
    bundle = simulate_paths(grid, m=4.0, sigma=1.0, dist=dist, n_paths=10_000,
                            master_seed=MASTER_SEED + 9, n_threads=2)
    b = bundle.bridge[:, 1]
    res = correlation_zero_test(bundle.vgb[:, 1] ** 2, b * (1.0 - b), name="dependence-control")
    assert not res.passed, res.line()


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def test_write_paths_csv_roundtrip(tmp_path):
    bundle = _tiny_bundle(master=7, n_threads=1)
    out = tmp_path / "paths.csv"
    write_paths_csv(bundle, str(out))
    with open(out, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == bundle.n_paths * (bundle.grid.n_steps + 1)
    assert list(rows[0]) == ["path_id", "k", "t", "gamma", "bridge", "vgb", "info", "x_draw"]
    for row in rows[:50] + rows[-50:]:
        i, k = int(row["path_id"]), int(row["k"])
        assert float(row["t"]) == bundle.grid.nodes[k]
        assert float(row["gamma"]) == bundle.gamma[i, k]
        assert float(row["bridge"]) == bundle.bridge[i, k]
        assert float(row["vgb"]) == bundle.vgb[i, k]
        assert float(row["info"]) == bundle.info[i, k]
        assert float(row["x_draw"]) == bundle.x_draw[i]


def test_write_paths_csv_deterministic_bytes(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_paths_csv(_tiny_bundle(master=7, n_threads=1), str(a))
    write_paths_csv(_tiny_bundle(master=7, n_threads=4), str(b))
    assert a.read_bytes() == b.read_bytes()
