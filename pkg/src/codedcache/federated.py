"""Federated proximal placement: local miss-cost QP anchored at peer average.

Each round an sBS averages the placements it received from its neighbors and
minimizes

    sum_f (1 - pi[f]) * size[f] * d_hat[f]  +  prox_lam * ||pi - anchor||^2

over the budgeted box. The objective is separable, so the exact solution is a
coordinate-wise clamp with a single dual variable for the budget, found by
bisection.

Public API:
    FederatedState
    neighbor_average, federated_solve, init_federated, federated_round
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .lrfu import windowed_demand_estimate
from .strategy import CachingStrategy, per_slot_optimal
from .traces import Catalog, DemandTrace

__all__ = [
    "FederatedState",
    "neighbor_average",
    "federated_solve",
    "init_federated",
    "federated_round",
]

log = logging.getLogger(__name__)

#: Budget residual target for the dual bisection, relative to the budget.
_RESIDUAL_RTOL = 1e-9


@dataclass(frozen=True)
class FederatedState:
    """Per-sBS placements and estimates carried across rounds."""

    strategies: list[CachingStrategy]
    anchors: list[CachingStrategy]
    demand_estimates: list[np.ndarray]
    prox_lam: float


def neighbor_average(received: list[CachingStrategy]) -> CachingStrategy:
    """Coordinate-wise mean of the received placements."""
    if not received:
        raise ValueError("neighbor_average needs at least one strategy")
    stack = np.stack([s.fractions for s in received])
    return CachingStrategy(stack.mean(axis=0))


def federated_solve(
    demand_estimate: np.ndarray,
    anchor: CachingStrategy | np.ndarray,
    prox_lam: float,
    catalog: Catalog,
) -> CachingStrategy:
    """Exact minimizer of the proximal miss-cost objective over the box.

    Without the budget the coordinate optimum is
    anchor[f] + size[f]*d_hat[f]/(2*prox_lam), clamped to [0, 1]; if that
    overshoots the budget, a non-negative dual price mu shifts every
    coordinate to clamp(anchor[f] + size[f]*(d_hat[f] - mu)/(2*prox_lam)) and
    monotone bisection drives the load onto the budget (relative residual
    1e-9). prox_lam = 0 degenerates to the plain hindsight optimum (warned);
    negative values are rejected.
    """
    d = np.asarray(demand_estimate, dtype=np.float64)
    if d.size != catalog.n_files:
        raise ValueError("estimate length must match the catalog")
    if np.any(d < 0):
        raise ValueError("demand estimate must be non-negative")
    if prox_lam < 0:
        raise ValueError("prox_lam must be non-negative")
    if prox_lam == 0.0:
        log.warning("federated_solve: prox_lam=0 degenerates to per_slot_optimal")
        return per_slot_optimal(d, catalog)
    base = anchor.fractions if isinstance(anchor, CachingStrategy) else np.asarray(anchor)
    if base.size != catalog.n_files:
        raise ValueError("anchor length must match the catalog")
    sizes = catalog.sizes
    budget = catalog.cache_budget

    def solution(mu: float) -> np.ndarray:
        return np.clip(base + sizes * (d - mu) / (2.0 * prox_lam), 0.0, 1.0)

    free = solution(0.0)
    if float(free @ sizes) <= budget * (1.0 + _RESIDUAL_RTOL):
        return CachingStrategy(free)
    # load(mu) decreases monotonically; this price zeroes every coordinate.
    lo, hi = 0.0, float(np.max(d + 2.0 * prox_lam * base / sizes))
    x = free
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        x = solution(mid)
        load = float(x @ sizes)
        if abs(load - budget) <= budget * _RESIDUAL_RTOL:
            break
        if load > budget:
            lo = mid
        else:
            hi = mid
    return CachingStrategy(x)


def init_federated(
    catalog: Catalog, n_sbs: int, prox_lam: float
) -> FederatedState:
    """Everyone starts from the spread-evenly placement."""
    start = min(catalog.cache_budget / catalog.total_size, 1.0)
    uniform = CachingStrategy(np.full(catalog.n_files, start))
    return FederatedState(
        strategies=[uniform] * n_sbs,
        anchors=[uniform] * n_sbs,
        demand_estimates=[np.zeros(catalog.n_files)] * n_sbs,
        prox_lam=prox_lam,
    )


def federated_round(
    state: FederatedState,
    trace: DemandTrace,
    catalog: Catalog,
    slot: int,
    window: int,
    *,
    include_self: bool = False,
) -> FederatedState:
    """One synchronous round producing the placements for `slot`.

    Demand estimates average the `window` slots before `slot`; anchors average
    the placements neighbors used in the previous round (optionally including
    the own one). An isolated sBS anchors at its own previous placement.
    """
    topo = trace.topology
    new_strats: list[CachingStrategy] = []
    anchors: list[CachingStrategy] = []
    estimates: list[np.ndarray] = []
    for b in range(topo.n_sbs):
        received = [state.strategies[p] for p in topo.neighbors[b]]
        if include_self or not received:
            received = [state.strategies[b]] + received
        anchor = neighbor_average(received)
        d_hat = windowed_demand_estimate(trace, b, slot, window, span=window)
        new_strats.append(federated_solve(d_hat, anchor, state.prox_lam, catalog))
        anchors.append(anchor)
        estimates.append(d_hat)
    return FederatedState(new_strats, anchors, estimates, state.prox_lam)
