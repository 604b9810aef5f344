import numpy as np
import pytest

from codedcache import Catalog, DemandTrace, SyntheticConfig, Topology, generate_synthetic


@pytest.fixture
def unit_catalog():
    return Catalog(np.array([1.0, 1.0]), 1.0)


@pytest.fixture
def small_catalog():
    return Catalog(np.array([10.0, 20.0, 40.0, 30.0]), 30.0)


def make_trace(demand, topology=None):
    """Wrap a raw (slots, sbs, files) array; topology defaults to isolated."""
    demand = np.asarray(demand, dtype=np.float64)
    if topology is None:
        topology = Topology.isolated(demand.shape[1])
    return DemandTrace(demand, topology)


def synthetic(
    seed,
    n_files=12,
    n_sbs=3,
    n_slots=40,
    budget_frac=0.3,
    zipf=0.8,
    n_regimes=1,
    regime_length=20,
    mixing=0.5,
    requests=200,
    topology=None,
):
    rng = np.random.default_rng(seed + 10_000)
    sizes = rng.integers(5, 50, size=n_files).astype(np.float64)
    catalog = Catalog(sizes, budget_frac * float(sizes.sum()))
    if topology is None:
        topology = Topology.ring(n_sbs)
    cfg = SyntheticConfig(
        zipf_exponent=zipf,
        n_regimes=n_regimes,
        regime_length=regime_length,
        cross_sbs_mixing=mixing,
        requests_per_slot=requests,
        seed=seed,
    )
    trace = generate_synthetic(catalog, topology, n_slots, cfg)
    return catalog, trace
