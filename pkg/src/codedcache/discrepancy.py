"""Non-stationarity diagnostics: drift tables, discrepancy, mismatch, bounds.

The drift table compares a recent demand window against the history just
before each window slot; its weighted sup over feasible strategies is the
discrepancy estimate that the weight optimizer trades off against raw hits.
The mismatch estimator plays the same role across neighboring sBSs.

Public API:
    DriftTable, BoundReport
    drift_table, discrepancy_estimate, discrepancy_sup
    mismatch_estimate, empirical_max_hit, bound_report
    global_local_discrepancy
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .regret import HitMatrix, window_slots
from .strategy import CachingStrategy, hit_rate, knapsack_max, per_slot_optimal
from .traces import Catalog, DemandTrace, normalize_slot, slot_demand

__all__ = [
    "DriftTable",
    "BoundReport",
    "drift_table",
    "discrepancy_estimate",
    "discrepancy_sup",
    "mismatch_estimate",
    "empirical_max_hit",
    "bound_report",
    "global_local_discrepancy",
]


@dataclass(frozen=True)
class DriftTable:
    """values[t][f]: size-weighted demand drift for window slot t, file f.

    Row t holds size[f] * (mean demand over the recent window ending at the
    anchor - mean demand over the past_window slots ending at slot t-1).
    """

    values: np.ndarray
    sbs: int
    anchor: int
    window: int
    recent_window: int
    past_window: int


def drift_table(
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    recent_window: int,
    past_window: int,
    *,
    use_normalized: bool = False,
) -> DriftTable:
    if recent_window < 1 or past_window < 1:
        raise ValueError("recent_window and past_window must be >= 1")
    slots = window_slots(anchor, window, trace.n_slots)
    window_slots(anchor, recent_window, trace.n_slots)
    earliest = slots.start - past_window
    if earliest < 0:
        raise ValueError(
            f"past window of {past_window} before slot {slots.start} needs slot "
            f"{earliest}, before the trace starts"
        )

    def profile(t: int) -> np.ndarray:
        d = slot_demand(trace, sbs, t)
        return normalize_slot(d) if use_normalized else d

    stack = np.stack([profile(t) for t in range(earliest, anchor + 1)])
    # index into `stack` is slot - earliest
    recent = stack[anchor - recent_window + 1 - earliest :].mean(axis=0)
    values = np.empty((window, catalog.n_files))
    for i, t in enumerate(slots):
        past = stack[t - past_window - earliest : t - earliest].mean(axis=0)
        values[i] = catalog.sizes * (recent - past)
    return DriftTable(values, sbs, anchor, window, recent_window, past_window)


def _iterates_matrix(
    pi_iterates: list[CachingStrategy] | np.ndarray, window: int, n_files: int
) -> np.ndarray:
    if isinstance(pi_iterates, np.ndarray):
        mat = np.asarray(pi_iterates, dtype=np.float64)
    else:
        mat = np.stack([p.fractions for p in pi_iterates])
    if mat.shape != (window, n_files):
        raise ValueError("need one strategy iterate per window slot")
    return mat


def _check_time_weights(time_weights: np.ndarray, window: int) -> np.ndarray:
    a = np.asarray(time_weights, dtype=np.float64)
    if a.shape != (window,):
        raise ValueError("need one time weight per window slot")
    if np.any(a < 0) or abs(float(a.sum()) - 1.0) > 1e-9:
        raise ValueError("time weights must lie on the simplex (tol 1e-9)")
    return a


def discrepancy_estimate(
    table: DriftTable,
    time_weights: np.ndarray,
    pi_iterates: list[CachingStrategy] | np.ndarray,
) -> float:
    """|weighted drift| realized by the supplied strategy iterates."""
    a = _check_time_weights(time_weights, table.window)
    mat = _iterates_matrix(pi_iterates, table.window, table.values.shape[1])
    return abs(float(a @ np.einsum("tf,tf->t", mat, table.values)))


def discrepancy_sup(
    table: DriftTable,
    time_weights: np.ndarray,
    catalog: Catalog,
    *,
    cap: bool = True,
) -> tuple[float, list[CachingStrategy]]:
    """Exact sup of the weighted drift over per-slot feasible strategies.

    The absolute value splits into two sign branches; within a branch the
    slots decouple into independent fractional knapsacks, so the sup is exact.
    Returns the achieving value and per-slot strategies (ties prefer the
    positive branch).
    """
    a = _check_time_weights(time_weights, table.window)
    branches = []
    for sign in (1.0, -1.0):
        total = 0.0
        pis = []
        for t in range(table.window):
            val, pi = knapsack_max(sign * a[t] * table.values[t], catalog, cap=cap)
            total += val
            pis.append(pi)
        branches.append((total, pis))
    return branches[0] if branches[0][0] >= branches[1][0] else branches[1]


def mismatch_estimate(
    peer_weights: np.ndarray,
    time_weights_self: np.ndarray,
    time_weights_peers: list[np.ndarray],
    hits_self: HitMatrix,
    hits_peers: list[HitMatrix],
) -> float:
    """Weighted own-vs-neighbor gap of time-weighted window hits.

    hits_self scores the local comparator sequence on local demands;
    hits_peers[j] scores neighbor j's sequence (by default also on local
    demands, see the optimizer's mismatch_on_local switch). Antisymmetric
    under swapping self and a single peer when that peer's weight is 1.
    """
    window = hits_self.window
    w = np.asarray(peer_weights, dtype=np.float64)
    if len(time_weights_peers) != w.size or len(hits_peers) != w.size:
        raise ValueError("one time-weight vector and hit matrix per peer required")
    a_self = np.asarray(time_weights_self, dtype=np.float64)
    own = float(hits_self.values.sum(axis=0) @ a_self)
    total = 0.0
    for j in range(w.size):
        a_peer = np.asarray(time_weights_peers[j], dtype=np.float64)
        peer = float(hits_peers[j].values.sum(axis=0) @ a_peer)
        total += w[j] * (own - peer)
    return total / window


def empirical_max_hit(
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    *,
    use_normalized: bool = False,
) -> float:
    """Largest per-slot hindsight-optimal hit over the window.

    Serves as the empirical stand-in for the a-priori per-slot hit ceiling in
    the concentration terms below.
    """
    best = 0.0
    for t in window_slots(anchor, window, trace.n_slots):
        d = slot_demand(trace, sbs, t)
        if use_normalized:
            d = normalize_slot(d)
        best = max(best, hit_rate(per_slot_optimal(d, catalog), d, catalog))
    return best


@dataclass(frozen=True)
class BoundReport:
    """Additive pieces of the high-probability hit-deviation bounds.

    epsilon1 bounds the deviation of the blended strategy's expected next-slot
    hit from the weighted window hits; epsilon2 additionally pays for regret
    and non-uniform time weights. tail_slack is the martingale residual,
    reported separately (0 unless a reproduction study widens it).
    """

    azuma_term: float
    mismatch: float
    discrepancy: float
    regret_term: float
    weight_deviation: float
    tail_slack: float
    epsilon1: float
    epsilon2: float
    max_hit: float
    delta: float


def bound_report(
    time_weights: np.ndarray,
    regret: float,
    discrepancy: float,
    mismatch: float,
    max_hit: float,
    delta: float,
) -> BoundReport:
    """Assemble the deviation-bound diagnostics for one window.

    azuma = max_hit * ||time_weights||_2 * sqrt((2/window) * log(1/delta));
    with uniform weights this collapses to max_hit*sqrt(2*log(1/delta))/window.
    """
    a = np.asarray(time_weights, dtype=np.float64)
    window = a.size
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if max_hit <= 0:
        raise ValueError("max_hit must be positive")
    azuma = max_hit * float(np.linalg.norm(a)) * math.sqrt(
        2.0 / window * math.log(1.0 / delta)
    )
    regret_term = 2.0 * regret / window
    weight_dev = max_hit * float(np.abs(a - 1.0 / window).sum())
    eps1 = azuma + mismatch + discrepancy
    eps2 = 2.0 * azuma + mismatch + regret_term + weight_dev + 2.0 * discrepancy
    return BoundReport(
        azuma_term=azuma,
        mismatch=mismatch,
        discrepancy=discrepancy,
        regret_term=regret_term,
        weight_deviation=weight_dev,
        tail_slack=0.0,
        epsilon1=eps1,
        epsilon2=eps2,
        max_hit=max_hit,
        delta=delta,
    )


def global_local_discrepancy(
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
) -> float:
    """Sup hit gap between local and all-sBS-pooled windowed demand means.

    Proxy for how far one cell's demand sits from the network-wide average;
    enters the windowed-average bound diagnostic additively.
    """
    slots = window_slots(anchor, window, trace.n_slots)
    local = trace.demand[slots.start : slots.stop, sbs].mean(axis=0)
    pooled = trace.demand[slots.start : slots.stop].mean(axis=(0, 1))
    values = catalog.sizes * (local - pooled)
    up, _ = knapsack_max(values, catalog)
    down, _ = knapsack_max(-values, catalog)
    return max(up, down)
