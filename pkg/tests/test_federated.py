import numpy as np
import pytest

from codedcache import (
    CachingStrategy,
    Catalog,
    Topology,
    federated_round,
    federated_solve,
    init_federated,
    neighbor_average,
)
from codedcache.validate import grid_min_prox

from conftest import make_trace, synthetic


def test_neighbor_average():
    stras = [
        CachingStrategy(np.array([1.0, 0.0])),
        CachingStrategy(np.array([0.2, 0.4])),
        CachingStrategy(np.array([0.3, 0.2])),
    ]
    assert np.allclose(neighbor_average(stras).fractions, [0.5, 0.2])
    assert np.allclose(neighbor_average(stras[:1]).fractions, [1.0, 0.0])
    assert np.allclose(
        neighbor_average([stras[0], CachingStrategy(np.array([0.0, 1.0]))]).fractions,
        [0.5, 0.5],
    )
    with pytest.raises(ValueError):
        neighbor_average([])


@pytest.mark.filterwarnings("ignore:cache_budget")
def test_solve_kkt_hand_values():
    cat = Catalog(np.array([1.0]), 1.0)
    anchor = np.array([0.0])
    s = federated_solve(np.array([2.0]), anchor, 1.0, cat)
    assert np.allclose(s.fractions, [1.0])
    s = federated_solve(np.array([2.0]), anchor, 2.0, cat)
    assert np.allclose(s.fractions, [0.5])


@pytest.mark.filterwarnings("ignore:cache_budget")
def test_solve_proximal_dominance_limit():
    cat = Catalog(np.array([1.0]), 1.0)
    s = federated_solve(np.array([2.0]), np.array([0.3]), 1e9, cat)
    assert abs(s.fractions[0] - 0.3) < 1e-6


def test_solve_matches_grid_oracle_when_binding():
    sizes = np.array([2.0, 3.0, 1.0])
    cat = Catalog(sizes, 2.5)
    d = np.array([4.0, 1.0, 2.0])
    anchor = np.array([0.6, 0.2, 0.9])
    s = federated_solve(d, anchor, 1.5, cat)
    assert s.is_feasible(cat)
    # budget must be tight when the unconstrained optimum is infeasible
    assert s.cache_load(cat) == pytest.approx(2.5, rel=1e-9)
    obj = float((1 - s.fractions) @ (d * sizes) + 1.5 * ((s.fractions - anchor) ** 2).sum())
    grid = grid_min_prox(d, anchor, 1.5, cat, step=0.02)
    slack = 0.02 * float(d @ sizes) + 3 * 1.5 * 3 * 0.02
    assert obj <= grid + slack


def test_solve_rejects_negative_lam_and_warns_on_zero(caplog):
    cat = Catalog(np.array([2.0, 2.0]), 2.0)
    with pytest.raises(ValueError):
        federated_solve(np.array([1.0, 1.0]), np.zeros(2), -1.0, cat)
    with caplog.at_level("WARNING"):
        s = federated_solve(np.array([3.0, 1.0]), np.zeros(2), 0.0, cat)
    assert "prox_lam=0" in caplog.text
    assert np.allclose(s.fractions, [1.0, 0.0])  # falls back to the knapsack


def test_init_federated_spread_evenly():
    sizes = np.array([10.0, 30.0])
    cat = Catalog(sizes, 20.0)
    state = init_federated(cat, 3, prox_lam=2.0)
    for s in state.strategies:
        assert np.allclose(s.fractions, 0.5)
    assert state.prox_lam == 2.0


def test_round_symmetry_under_identical_demands():
    demand = np.random.default_rng(8).poisson(4.0, size=(12, 1, 5)).astype(float)
    demand = np.repeat(demand, 4, axis=1)
    trace = make_trace(demand, topology=Topology.ring(4))
    sizes = np.arange(2.0, 7.0)
    cat = Catalog(sizes, 0.4 * sizes.sum())
    state = init_federated(cat, trace.n_sbs, prox_lam=2.0)
    for slot in range(1, 6):
        state = federated_round(state, trace, cat, slot=slot, window=3)
        base = state.strategies[0].fractions
        for s in state.strategies[1:]:
            assert np.allclose(s.fractions, base)
        for s in state.strategies:
            assert s.is_feasible(cat)


def test_round_huge_lam_freezes_strategies():
    catalog, trace = synthetic(61, n_sbs=3, n_slots=14)
    state = init_federated(catalog, trace.n_sbs, prox_lam=1e9)
    start = [s.fractions.copy() for s in state.strategies]
    for slot in range(1, 11):
        state = federated_round(state, trace, catalog, slot=slot, window=3)
    for s, s0 in zip(state.strategies, start):
        assert np.abs(s.fractions - s0).max() < 1e-3


def test_round_isolated_sbs_anchors_to_itself():
    catalog, trace = synthetic(62, n_sbs=2, n_slots=10, topology=Topology.isolated(2))
    state = init_federated(catalog, trace.n_sbs, prox_lam=1e9)
    start = state.strategies[0].fractions.copy()
    state = federated_round(state, trace, catalog, slot=4, window=3)
    # with no neighbors and a huge prox pull, the sBS stays where it was
    assert np.abs(state.strategies[0].fractions - start).max() < 1e-6
