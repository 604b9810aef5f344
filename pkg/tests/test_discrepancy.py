import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codedcache import (
    CachingStrategy,
    Catalog,
    bound_report,
    discrepancy_estimate,
    discrepancy_sup,
    drift_table,
    empirical_max_hit,
    global_local_discrepancy,
    mismatch_estimate,
)
from codedcache.discrepancy import DriftTable
from codedcache.regret import HitMatrix

from conftest import make_trace, synthetic


def test_drift_table_hand_value():
    # one file of size 2; past profile 1, recent profile 4 -> 2 * (4 - 1) = 6
    trace = make_trace([[[1.0]], [[4.0]]])
    cat = Catalog(np.array([2.0]), 1.0)
    table = drift_table(
        trace, cat, sbs=0, anchor=1, window=1, recent_window=1, past_window=1,
        use_normalized=False,
    )
    assert np.array_equal(table.values, [[6.0]])


def test_drift_table_stationary_trace_is_zero():
    trace = make_trace([[[3.0, 1.0]]] * 6)
    cat = Catalog(np.array([1.0, 1.0]), 1.0)
    table = drift_table(trace, cat, 0, anchor=5, window=2, recent_window=2, past_window=3)
    assert np.allclose(table.values, 0.0)


def test_drift_table_window_bounds():
    trace = make_trace([[[1.0]]] * 4)
    cat = Catalog(np.array([1.0]), 1.0)
    with pytest.raises(ValueError):
        # earliest window slot is 1, needs 2 past slots but only 1 exists
        drift_table(trace, cat, 0, anchor=3, window=3, recent_window=2, past_window=2)
    table = drift_table(trace, cat, 0, anchor=3, window=2, recent_window=2, past_window=2)
    assert table.values.shape == (2, 1)


def test_discrepancy_estimate_hand_value():
    table = DriftTable(np.array([[6.0, 0.0]]), sbs=0, anchor=1, window=1,
                       recent_window=1, past_window=1)
    est = discrepancy_estimate(table, np.array([1.0]), [CachingStrategy(np.array([1.0, 0.0]))])
    assert est == 6.0


def test_discrepancy_sup_sign_branches():
    cat = Catalog(np.array([1.0, 1.0]), 1.0)
    table = DriftTable(np.array([[6.0, -2.0]]), 0, 1, 1, 1, 1)
    sup, arg = discrepancy_sup(table, np.array([1.0]), cat)
    assert sup == 6.0
    assert np.allclose(arg[0].fractions, [1.0, 0.0])
    # negative branch wins when the negative mass dominates
    table = DriftTable(np.array([[1.0, -9.0]]), 0, 1, 1, 1, 1)
    sup, arg = discrepancy_sup(table, np.array([1.0]), cat)
    assert sup == 9.0
    assert np.allclose(arg[0].fractions, [0.0, 1.0])


def test_discrepancy_sup_zero_table():
    cat = Catalog(np.array([1.0, 1.0]), 1.0)
    table = DriftTable(np.zeros((2, 2)), 0, 3, 2, 1, 1)
    sup, arg = discrepancy_sup(table, np.array([0.5, 0.5]), cat)
    assert sup == 0.0
    for s in arg:
        assert np.allclose(s.fractions, 0.0)


@settings(max_examples=60, deadline=None)
@given(data=st.data())
def test_sup_dominates_estimate(data):
    window, n = data.draw(st.integers(1, 4)), data.draw(st.integers(1, 4))
    values = np.array(
        data.draw(st.lists(st.floats(-10, 10), min_size=window * n, max_size=window * n))
    ).reshape(window, n)
    table = DriftTable(values, 0, window, window, 1, 1)
    cat = Catalog(np.ones(n), max(1.0, 0.5 * n))
    alpha = np.array(data.draw(st.lists(st.floats(0.01, 1.0), min_size=window, max_size=window)))
    alpha = alpha / alpha.sum()
    iterates = [
        CachingStrategy(
            np.minimum(np.array(data.draw(
                st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))), 1.0)
        )
        for _ in range(window)
    ]
    feasible = [
        CachingStrategy(s.fractions * min(1.0, cat.cache_budget / max(s.cache_load(cat), 1e-12)))
        for s in iterates
    ]
    sup, _ = discrepancy_sup(table, alpha, cat)
    assert sup >= discrepancy_estimate(table, alpha, feasible) - 1e-9


def test_mismatch_hand_value():
    hs = HitMatrix(np.array([[5.0]]), sbs=0, anchor=1, window=1)
    hc = HitMatrix(np.array([[3.0]]), sbs=1, anchor=1, window=1)
    m = mismatch_estimate(np.array([1.0]), np.array([1.0]), [np.array([1.0])], hs, [hc])
    assert m == 2.0


def test_mismatch_zero_weights_and_symmetry():
    hs = HitMatrix(np.array([[5.0, 1.0], [2.0, 4.0]]), 0, 1, 2)
    alpha = np.array([0.5, 0.5])
    assert mismatch_estimate(np.array([0.0]), alpha, [alpha], hs, [hs]) == 0.0
    # identical neighbor cancels for any weight
    assert mismatch_estimate(np.array([0.7]), alpha, [alpha], hs, [hs]) == 0.0


@settings(max_examples=40, deadline=None)
@given(data=st.data())
def test_mismatch_antisymmetric_under_swap(data):
    window = data.draw(st.integers(1, 3))
    vals = lambda: np.array(
        data.draw(st.lists(st.floats(0, 20), min_size=window * window,
                           max_size=window * window))
    ).reshape(window, window)
    hs, hc = HitMatrix(vals(), 0, window, window), HitMatrix(vals(), 1, window, window)
    a_self = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=window, max_size=window)))
    a_self = a_self / a_self.sum()
    a_nb = np.array(data.draw(st.lists(st.floats(0.01, 1), min_size=window, max_size=window)))
    a_nb = a_nb / a_nb.sum()
    w = np.array([1.0])
    fwd = mismatch_estimate(w, a_self, [a_nb], hs, [hc])
    rev = mismatch_estimate(w, a_nb, [a_self], hc, [hs])
    assert math.isclose(fwd, -rev, abs_tol=1e-9)


def test_empirical_max_hit():
    cat = Catalog(np.array([1.0, 1.0]), 1.0)
    trace = make_trace([[[1.0, 0.0]], [[0.0, 7.0]], [[2.0, 2.0]]])
    assert empirical_max_hit(trace, cat, 0, anchor=2, window=3) == 7.0


def test_bound_report_uniform_alpha():
    h_max = 8.0
    rep = bound_report(
        np.full(4, 0.25), regret=0.0, discrepancy=0.0, mismatch=0.0,
        max_hit=h_max, delta=math.exp(-0.5),
    )
    # ||uniform||_2 * sqrt(2/tau * log(1/delta)) collapses to 1/tau
    assert math.isclose(rep.azuma_term, h_max / 4)
    assert rep.weight_deviation == 0.0
    assert math.isclose(rep.epsilon2, 2 * rep.azuma_term)
    assert rep.tail_slack == 0.0
    assert math.isclose(
        rep.epsilon1, rep.azuma_term + rep.mismatch + rep.discrepancy
    )


def test_bound_report_general_alpha():
    alpha = np.array([0.7, 0.3])
    rep = bound_report(alpha, regret=4.0, discrepancy=1.5, mismatch=0.5,
                       max_hit=10.0, delta=0.05)
    azuma = 10.0 * np.linalg.norm(alpha) * math.sqrt(math.log(1 / 0.05))
    assert math.isclose(rep.azuma_term, azuma)
    dev = 10.0 * np.abs(alpha - 0.5).sum()
    assert math.isclose(rep.weight_deviation, dev)
    assert math.isclose(rep.epsilon1, azuma + 0.5 + 1.5)
    assert math.isclose(rep.epsilon2, 2 * azuma + 0.5 + 2 * 4.0 / 2 + dev + 2 * 1.5)
    with pytest.raises(ValueError):
        bound_report(alpha, 0.0, 0.0, 0.0, max_hit=10.0, delta=1.5)


def test_global_local_hand_value():
    trace = make_trace(
        [[[4.0], [2.0]]],
        topology=None,
    )
    cat = Catalog(np.array([1.0]), 1.0)
    assert global_local_discrepancy(trace, cat, sbs=0, anchor=0, window=1) == 1.0


def test_global_local_zero_cases():
    cat = Catalog(np.array([1.0, 2.0]), 2.0)
    solo = make_trace([[[3.0, 1.0]]] * 4)
    assert global_local_discrepancy(solo, cat, 0, anchor=3, window=2) == 0.0
    twin = make_trace([[[3.0, 1.0], [3.0, 1.0]]] * 4)
    assert global_local_discrepancy(twin, cat, 1, anchor=3, window=2) == 0.0


def test_drift_decays_on_iid_trace():
    # longer averaging windows shrink the drift scale on a stationary stream
    catalog, trace = synthetic(31, n_slots=260, mixing=1.0, requests=400)
    alpha_of = lambda w: np.full(w, 1.0 / w)
    sup_small, _ = discrepancy_sup(
        drift_table(trace, catalog, 0, anchor=40, window=4, recent_window=4, past_window=4),
        alpha_of(4), catalog,
    )
    sup_big, _ = discrepancy_sup(
        drift_table(trace, catalog, 0, anchor=255, window=120, recent_window=120, past_window=120),
        alpha_of(120), catalog,
    )
    assert sup_big < sup_small
