"""Hindsight comparators and hit matrices over sliding windows.

All window arithmetic is 0-based: a window of length `window` anchored at slot
`anchor` covers slots [anchor - window + 1, anchor] inclusive.

Public API:
    HitMatrix
    regret_sequence, realized_regret, future_regret, hit_matrix
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .strategy import CachingStrategy, hit_rate, per_slot_optimal
from .traces import Catalog, DemandTrace, normalize_slot, slot_demand

__all__ = [
    "HitMatrix",
    "window_slots",
    "regret_sequence",
    "realized_regret",
    "future_regret",
    "hit_matrix",
]


def window_slots(anchor: int, window: int, n_slots: int) -> range:
    """Slots [anchor-window+1, anchor]; raises if the window does not fit."""
    if window < 1:
        raise ValueError("window must be >= 1")
    start = anchor - window + 1
    if start < 0:
        raise ValueError(
            f"window of length {window} anchored at slot {anchor} needs slot "
            f"{start}, before the trace starts"
        )
    if anchor >= n_slots:
        raise ValueError(f"anchor slot {anchor} beyond trace of {n_slots} slots")
    return range(start, anchor + 1)


@dataclass(frozen=True)
class HitMatrix:
    """values[l][s] = hit of the window-slot-s strategy on slot-l demands."""

    values: np.ndarray
    sbs: int
    anchor: int
    window: int


def _window_demands(
    trace: DemandTrace, sbs: int, anchor: int, window: int, normalized: bool
) -> np.ndarray:
    slots = window_slots(anchor, window, trace.n_slots)
    d = trace.demand[slots.start : slots.stop, sbs]
    if not normalized:
        return d
    totals = d.sum(axis=1, keepdims=True)
    out = np.zeros_like(d)
    np.divide(d, totals, out=out, where=totals > 0)
    return out


def regret_sequence(
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    mode: str = "per-slot-opt",
    *,
    use_normalized: bool = True,
) -> list[CachingStrategy]:
    """Comparator strategies, one per window slot.

    'per-slot-opt' takes each slot's own hindsight optimum, which pins the
    realized regret on observed demands to zero. 'ftl' follows the leader:
    slot t gets the optimum of the running demand average over the window
    prefix ending at t.
    """
    if mode not in ("per-slot-opt", "ftl"):
        raise ValueError(f"unknown regret mode {mode!r}")
    demands = _window_demands(trace, sbs, anchor, window, use_normalized)
    if mode == "per-slot-opt":
        return [per_slot_optimal(d, catalog) for d in demands]
    running = np.cumsum(demands, axis=0) / np.arange(1, window + 1)[:, None]
    return [per_slot_optimal(d, catalog) for d in running]


def realized_regret(
    strategies: list[CachingStrategy],
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    *,
    use_normalized: bool = False,
) -> float:
    """Window hit shortfall against each slot's own hindsight optimum.

    Non-negative by construction (clamped at 0 against float noise).
    """
    slots = window_slots(anchor, window, trace.n_slots)
    if len(strategies) != window:
        raise ValueError("need one strategy per window slot")
    total = 0.0
    for s, t in enumerate(slots):
        d = slot_demand(trace, sbs, t)
        if use_normalized:
            d = normalize_slot(d)
        best = hit_rate(per_slot_optimal(d, catalog), d, catalog)
        total += best - hit_rate(strategies[s], d, catalog)
    return max(total, 0.0)


def future_regret(
    strategies: list[CachingStrategy],
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    *,
    use_normalized: bool = False,
) -> float:
    """Alternative reading: all window strategies scored on slot anchor+1.

    Only computable once that slot has been observed; kept alongside
    realized_regret so both readings can be logged and compared.
    """
    if anchor + 1 >= trace.n_slots:
        raise ValueError("future_regret needs slot anchor+1 in the trace")
    window_slots(anchor, window, trace.n_slots)
    if len(strategies) != window:
        raise ValueError("need one strategy per window slot")
    d = slot_demand(trace, sbs, anchor + 1)
    if use_normalized:
        d = normalize_slot(d)
    best = hit_rate(per_slot_optimal(d, catalog), d, catalog)
    total = sum(best - hit_rate(s, d, catalog) for s in strategies)
    return max(total, 0.0)


def hit_matrix(
    strategies: list[CachingStrategy],
    trace: DemandTrace,
    catalog: Catalog,
    sbs: int,
    anchor: int,
    window: int,
    *,
    use_normalized: bool = False,
) -> HitMatrix:
    """Cross-evaluate window strategies on window demands of one sBS.

    The strategies may belong to a different sBS; evaluating a neighbor's
    sequence against local demands is how the mismatch estimator is fed.
    """
    if len(strategies) != window:
        raise ValueError("need one strategy per window slot")
    demands = _window_demands(trace, sbs, anchor, window, use_normalized)
    weighted = np.stack([s.fractions for s in strategies]) * catalog.sizes
    return HitMatrix(demands @ weighted.T, sbs, anchor, window)
