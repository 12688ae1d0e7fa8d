"""Shared fixtures: small path bundles reused across test modules."""

import pytest

from vginfo.path_sim import TimeGrid, simulate_paths
from vginfo.pricing_kernel import MarketFactorDistribution

MASTER_SEED = 90210


@pytest.fixture(scope="session")
def two_atom_prior():
    return MarketFactorDistribution.from_atoms([(0.4, 0.0), (0.6, 1.0)])


@pytest.fixture(scope="session")
def bundle_small(two_atom_prior):
    """20k paths on a 4-step grid: enough for moment/KS/correlation checks."""
    grid = TimeGrid(T=1.0, n_steps=4)
    return simulate_paths(grid, m=100.0, sigma=1.0, dist=two_atom_prior,
                          n_paths=20_000, master_seed=MASTER_SEED, n_threads=4)


@pytest.fixture(scope="session")
def bundle_fine(two_atom_prior):
    """1k paths on a fine grid for pathwise-identity checks."""
    grid = TimeGrid(T=1.0, n_steps=100)
    return simulate_paths(grid, m=100.0, sigma=1.0, dist=two_atom_prior,
                          n_paths=1_000, master_seed=MASTER_SEED + 1, n_threads=4)
