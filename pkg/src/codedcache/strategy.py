"""Caching strategies and the linear placement subproblems.

A strategy stores, per file, the fraction of that file kept in the local
cache. The per-slot hit metric is linear in the fractions,

    hit(pi, d) = sum_f d[f] * pi[f] * size[f],

so both the hindsight-optimal placement and the signed variants used by the
discrepancy estimator are fractional knapsacks solved exactly by a greedy
sweep.

Public API:
    CachingStrategy
    hit_rate, per_slot_optimal, knapsack_max
    project_budget, blend
    save_strategy, load_strategy
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .traces import Catalog

__all__ = [
    "CachingStrategy",
    "hit_rate",
    "per_slot_optimal",
    "knapsack_max",
    "project_budget",
    "blend",
    "save_strategy",
    "load_strategy",
]

log = logging.getLogger(__name__)

#: Budget feasibility slack, relative to the budget itself.
BUDGET_RTOL = 1e-9


@dataclass(frozen=True)
class CachingStrategy:
    """Per-file cached fractions; feasibility is checked against a catalog."""

    fractions: np.ndarray

    def __post_init__(self) -> None:
        fr = np.asarray(self.fractions, dtype=np.float64)
        object.__setattr__(self, "fractions", fr)
        if fr.ndim != 1:
            raise ValueError("fractions must be a 1-d vector")
        if not np.all(np.isfinite(fr)):
            raise ValueError("fractions must be finite")

    def cache_load(self, catalog: Catalog) -> float:
        return float(self.fractions @ catalog.sizes)

    def is_feasible(self, catalog: Catalog, *, cap: bool = True) -> bool:
        fr = self.fractions
        if fr.size != catalog.n_files:
            return False
        if np.any(fr < 0):
            return False
        if cap and np.any(fr > 1.0 + 1e-12):
            return False
        return self.cache_load(catalog) <= catalog.cache_budget * (1.0 + BUDGET_RTOL)


def _fractions(pi: CachingStrategy | np.ndarray) -> np.ndarray:
    if isinstance(pi, CachingStrategy):
        return pi.fractions
    return np.asarray(pi, dtype=np.float64)


def hit_rate(
    pi: CachingStrategy | np.ndarray, demand: np.ndarray, catalog: Catalog
) -> float:
    """Size-weighted expected hits of one strategy against one demand vector."""
    fr = _fractions(pi)
    d = np.asarray(demand, dtype=np.float64)
    if fr.shape != d.shape or fr.size != catalog.n_files:
        raise ValueError("strategy/demand/catalog dimensions disagree")
    return float(d @ (fr * catalog.sizes))


def per_slot_optimal(
    demand: np.ndarray, catalog: Catalog, *, cap: bool = True
) -> CachingStrategy:
    """Hindsight-optimal placement for one demand vector.

    Maximizing sum_f d[f]*pi[f]*size[f] under sum_f pi[f]*size[f] <= C is a
    fractional knapsack whose value density per unit of budget is d[f] itself,
    so sorting files by demand (descending, ties to the lower index) and
    filling until the budget runs out is exact. With cap=False the [0, 1] box
    is dropped and the whole budget goes to the densest file.
    """
    d = np.asarray(demand, dtype=np.float64)
    if d.size != catalog.n_files:
        raise ValueError("demand length must match the catalog")
    if np.any(d < 0):
        raise ValueError("demand entries must be non-negative")
    n = d.size
    if not cap:
        best = int(np.lexsort((np.arange(n), -d))[0])
        fr = np.zeros(n)
        fr[best] = catalog.cache_budget / catalog.sizes[best]
        return CachingStrategy(fr)
    order = np.lexsort((np.arange(n), -d))
    sizes = catalog.sizes[order]
    used_before = np.cumsum(sizes) - sizes
    fr_ord = np.clip((catalog.cache_budget - used_before) / sizes, 0.0, 1.0)
    fr = np.empty(n)
    fr[order] = fr_ord
    return CachingStrategy(fr)


def knapsack_max(
    values: np.ndarray, catalog: Catalog, *, cap: bool = True
) -> tuple[float, CachingStrategy]:
    """Exact max of sum_f values[f]*pi[f] over the budgeted box.

    Files with non-positive value stay at 0 (caching them cannot help), the
    rest are greedily filled by value density values[f]/size[f], ties to the
    lower index. Used by the discrepancy sup, where values carry arbitrary
    signs and sizes are NOT factored in.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size != catalog.n_files:
        raise ValueError("value length must match the catalog")
    n = v.size
    fr = np.zeros(n)
    pos = v > 0
    if not np.any(pos):
        return 0.0, CachingStrategy(fr)
    density = np.where(pos, v / catalog.sizes, -np.inf)
    if not cap:
        best = int(np.lexsort((np.arange(n), -density))[0])
        fr[best] = catalog.cache_budget / catalog.sizes[best]
        return float(v[best] * fr[best]), CachingStrategy(fr)
    order = np.lexsort((np.arange(n), -density))
    order = order[pos[order]]
    sizes = catalog.sizes[order]
    used_before = np.cumsum(sizes) - sizes
    fr[order] = np.clip((catalog.cache_budget - used_before) / sizes, 0.0, 1.0)
    return float(v @ fr), CachingStrategy(fr)


def project_budget(
    raw: CachingStrategy | np.ndarray,
    catalog: Catalog,
    mode: str = "only-if-exceeded",
    *,
    cap: bool = True,
) -> CachingStrategy:
    """Map a raw vector back into the feasible set.

    Negative entries are clipped first. 'always-scale' then rescales so the
    load equals the budget exactly; 'only-if-exceeded' (default) rescales only
    when the budget is violated, which leaves interior iterates untouched.
    When a rescale pushed entries above 1 they are clipped and the freed
    budget is redistributed greedily over the remaining fractional entries in
    descending-fraction order (ties to the lower index) until the load reaches
    min(C, total catalog size) or everything saturates; for a linear objective
    any budget-exhausting redistribution is optimal, so only determinism is at
    stake. A feasible input that merely has entries above 1 is clipped without
    redistribution, keeping the default mode idempotent and non-distorting.
    """
    if mode not in ("only-if-exceeded", "always-scale"):
        raise ValueError(f"unknown projection mode {mode!r}")
    x = np.clip(_fractions(raw), 0.0, None)
    if x.size != catalog.n_files:
        raise ValueError("strategy length must match the catalog")
    budget = catalog.cache_budget
    load = float(x @ catalog.sizes)
    scaled = False
    if mode == "always-scale":
        if load == 0.0:
            log.warning("project_budget: zero vector under always-scale; returning it")
            return CachingStrategy(x)
        x = x * (budget / load)
        scaled = True
    elif load > budget * (1.0 + BUDGET_RTOL):
        x = x * (budget / load)
        scaled = True
    if cap and np.any(x > 1.0):
        if scaled:
            x = _clip_and_redistribute(x, catalog)
        else:
            x = np.minimum(x, 1.0)
    return CachingStrategy(x)


def _clip_and_redistribute(x: np.ndarray, catalog: Catalog) -> np.ndarray:
    sizes = catalog.sizes
    target = min(catalog.cache_budget, catalog.total_size)
    x = np.minimum(x, 1.0)
    slack = target - float(x @ sizes)
    if slack <= 0.0:
        return x
    # One pass suffices: every visited entry absorbs as much slack as it can.
    order = np.lexsort((np.arange(x.size), -x))
    for f in order:
        if x[f] >= 1.0:
            continue
        add = min(1.0 - x[f], slack / sizes[f])
        x[f] += add
        slack -= add * sizes[f]
        if slack <= target * BUDGET_RTOL:
            break
    return x


def blend(
    strategies: list[CachingStrategy], weights: np.ndarray
) -> CachingStrategy:
    """Convex combination of strategies; weights must lie on the simplex."""
    if not strategies:
        raise ValueError("blend needs at least one strategy")
    w = np.asarray(weights, dtype=np.float64)
    if w.size != len(strategies):
        raise ValueError("one weight per strategy required")
    if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
        raise ValueError("weights must be non-negative and sum to 1 (tol 1e-9)")
    stack = np.stack([_fractions(s) for s in strategies])
    # Non-negative weights times non-negative fractions cannot drift below 0,
    # and the convex hull keeps the budget, so no re-projection is needed.
    return CachingStrategy(w @ stack)


def save_strategy(pi: CachingStrategy, path: str | Path) -> None:
    """Write 'file,fraction' rows with 17 significant digits (lossless)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "fraction"])
        for f, fr in enumerate(pi.fractions):
            w.writerow([f, format(float(fr), ".17g")])


def load_strategy(path: str | Path) -> CachingStrategy:
    rows: list[tuple[int, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["file", "fraction"]:
            raise ValueError(f"{path}:1: expected header 'file,fraction'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from exc
    rows.sort()
    if [f for f, _ in rows] != list(range(len(rows))):
        raise ValueError(f"{path}: file ids must be contiguous from 0")
    return CachingStrategy(np.array([fr for _, fr in rows]))
