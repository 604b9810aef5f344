"""Slot-by-slot simulation harness and policy comparisons.

Timing discipline: the placement serving slot T is fixed at the end of slot
T-1 from observed demands only, and realized hits are always scored on raw
demands (the weight optimization itself runs on per-slot popularity profiles).

Public API:
    POLICY_KINDS, SimConfig, MetricsLog
    run_simulation, exchange, compare_policies, lambda_sweep
    write_metrics_csv, ComparisonTable
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .discrepancy import bound_report, empirical_max_hit
from .federated import federated_round, init_federated
from .lrfu import LrfuConfig, lrfu_strategy, windowed_demand_estimate
from .regret import realized_regret, regret_sequence
from .strategy import CachingStrategy, hit_rate
from .traces import Catalog, DemandTrace, Topology
from .weights import OptimizerConfig, run_subroutine

__all__ = [
    "POLICY_KINDS",
    "SimConfig",
    "MetricsLog",
    "ComparisonRow",
    "ComparisonTable",
    "LambdaSweepRow",
    "run_simulation",
    "exchange",
    "compare_policies",
    "lambda_sweep",
    "write_metrics_csv",
    "write_comparison_csv",
    "write_lambda_sweep_csv",
]

#: Subroutine-family variants map to (alpha_mode, w_mode); the other kinds
#: have dedicated update paths.
_SUBROUTINE_MODES = {
    "proposed": ("optimize", "optimize"),
    "uniform-w": ("optimize", "uniform"),
    "uniform-alpha": ("uniform", "optimize"),
    "zero-w": ("optimize", "zero"),
    "uniform-static": ("uniform", "uniform"),
}

POLICY_KINDS = (*_SUBROUTINE_MODES, "lrfu", "federated")


@dataclass(frozen=True)
class SimConfig:
    """Windows, optimizer knobs and cadence shared by all policies."""

    window: int = 10
    recent_window: int = 5
    past_window: int = 5
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    lrfu: LrfuConfig = field(default_factory=LrfuConfig)
    federated_lam: float = 2.0
    regret_mode: str = "per-slot-opt"
    delta: float = 0.05
    refresh_every: int = 1
    use_normalized: bool = True
    compute_diagnostics: bool = True
    record_strategies: bool = False

    def __post_init__(self) -> None:
        if min(self.window, self.recent_window, self.past_window) < 1:
            raise ValueError("all windows must be >= 1")
        if self.refresh_every < 1:
            raise ValueError("refresh_every must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass
class MetricsLog:
    """Per-slot, per-sBS realized hits and per-window diagnostics.

    Diagnostics are NaN for slots/policies where they are not defined (warm-up,
    non-refresh slots, and the lrfu/federated baselines).
    """

    policy: str
    cache_frac: float
    hit: np.ndarray
    cum_hit: np.ndarray
    regret_over_window: np.ndarray
    discrepancy: np.ndarray
    mismatch: np.ndarray
    epsilon1: np.ndarray
    epsilon2: np.ndarray
    iters: np.ndarray
    strategies: np.ndarray | None = None

    @property
    def n_slots(self) -> int:
        return int(self.hit.shape[0])

    @property
    def n_sbs(self) -> int:
        return int(self.hit.shape[1])


def exchange(topology: Topology, payloads: list) -> list[list[tuple[int, object]]]:
    """Deliver per-sBS broadcast payloads to every neighbor inbox.

    inbox[b] lists (sender, payload) pairs in ascending sender order. Pure
    bookkeeping, but it is the single place where cross-sBS information flow
    happens, which keeps the causality story auditable.
    """
    if len(payloads) != topology.n_sbs:
        raise ValueError("one payload per sBS required")
    return [
        [(p, payloads[p]) for p in topology.neighbors[b]]
        for b in range(topology.n_sbs)
    ]


def _uniform_start(catalog: Catalog) -> CachingStrategy:
    frac = min(catalog.cache_budget / catalog.total_size, 1.0)
    return CachingStrategy(np.full(catalog.n_files, frac))


def run_simulation(
    trace: DemandTrace, catalog: Catalog, policy: str, cfg: SimConfig
) -> MetricsLog:
    """Run one policy over the whole trace.

    Subroutine-family policies need full regret + drift windows; before those
    fit, they fall back to the truncated-window fractional LRFU placement so
    every policy is data-driven from slot 1 on. Slot 0 is served by the
    spread-evenly placement for everyone.
    """
    if policy not in POLICY_KINDS:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICY_KINDS}")
    n_slots, n_sbs, n_files = trace.demand.shape
    hit = np.zeros((n_slots, n_sbs))
    regret_w, disc, mism, eps1, eps2, iters = (
        np.full((n_slots, n_sbs), np.nan) for _ in range(6)
    )
    recorded = (
        np.zeros((n_slots, n_sbs, n_files)) if cfg.record_strategies else None
    )

    installed = [_uniform_start(catalog) for _ in range(n_sbs)]
    fed_state = (
        init_federated(catalog, n_sbs, cfg.federated_lam)
        if policy == "federated"
        else None
    )
    first_ready = max(cfg.window + cfg.past_window, cfg.recent_window) - 1

    for t in range(n_slots):
        for b in range(n_sbs):
            hit[t, b] = hit_rate(installed[b], trace.demand[t, b], catalog)
            if recorded is not None:
                recorded[t, b] = installed[b].fractions
        if t == n_slots - 1:
            break

        if policy == "lrfu":
            installed = [
                lrfu_strategy(
                    windowed_demand_estimate(trace, b, t + 1, cfg.window),
                    catalog,
                    cfg.lrfu,
                )
                for b in range(n_sbs)
            ]
        elif policy == "federated":
            fed_state = federated_round(fed_state, trace, catalog, t + 1, cfg.window)
            installed = list(fed_state.strategies)
        elif t < first_ready:
            installed = [
                lrfu_strategy(
                    windowed_demand_estimate(trace, b, t + 1, cfg.window),
                    catalog,
                    LrfuConfig(mode="fractional"),
                )
                for b in range(n_sbs)
            ]
        elif (t - first_ready) % cfg.refresh_every == 0:
            alpha_mode, w_mode = _SUBROUTINE_MODES[policy]
            results = run_subroutine(
                trace,
                catalog,
                anchor=t,
                window=cfg.window,
                recent_window=cfg.recent_window,
                past_window=cfg.past_window,
                cfg=cfg.optimizer,
                alpha_mode=alpha_mode,
                w_mode=w_mode,
                regret_mode=cfg.regret_mode,
                use_normalized=cfg.use_normalized,
            )
            installed = [r.strategy for r in results]
            if cfg.compute_diagnostics:
                for b, r in enumerate(results):
                    comparators = regret_sequence(
                        trace, catalog, b, t, cfg.window, cfg.regret_mode,
                        use_normalized=cfg.use_normalized,
                    )
                    reg = realized_regret(
                        comparators, trace, catalog, b, t, cfg.window,
                        use_normalized=cfg.use_normalized,
                    )
                    regret_w[t + 1, b] = reg / cfg.window
                    disc[t + 1, b] = r.discrepancy
                    mism[t + 1, b] = r.mismatch
                    iters[t + 1, b] = r.n_iters
                    max_hit = empirical_max_hit(
                        trace, catalog, b, t, cfg.window,
                        use_normalized=cfg.use_normalized,
                    )
                    if max_hit > 0:
                        rep = bound_report(
                            r.state.time_weights, reg, r.discrepancy,
                            r.mismatch, max_hit, cfg.delta,
                        )
                        eps1[t + 1, b] = rep.epsilon1
                        eps2[t + 1, b] = rep.epsilon2
        # between refreshes the previous placement stays installed

    return MetricsLog(
        policy=policy,
        cache_frac=catalog.cache_budget / catalog.total_size,
        hit=hit,
        cum_hit=np.cumsum(hit, axis=0),
        regret_over_window=regret_w,
        discrepancy=disc,
        mismatch=mism,
        epsilon1=eps1,
        epsilon2=eps2,
        iters=iters,
        strategies=recorded,
    )


# ---------------------------------------------------------------------------
# comparisons


@dataclass(frozen=True)
class ComparisonRow:
    policy: str
    cache_frac: float
    sbs: str  # "0", "1", ... or "sum"
    avg_hit: float
    cum_hit: float
    log_ratio: float  # log(reference avg / this avg)


@dataclass(frozen=True)
class ComparisonTable:
    rows: list[ComparisonRow]
    reference: str


@dataclass(frozen=True)
class LambdaSweepRow:
    cache_frac: float
    prox_lam: float
    avg_hit: float


def _run_grid(
    trace: DemandTrace,
    sizes: np.ndarray,
    jobs: list[tuple[str, float]],
    cfg: SimConfig,
    threads: int,
) -> dict[tuple[str, float], MetricsLog]:
    """Run independent (policy, cache_frac) jobs, optionally on a thread pool.

    Each job is deterministic on its own, and results are keyed by job, so the
    outcome is identical for any thread count.
    """
    total = float(np.sum(sizes))

    def one(job: tuple[str, float]) -> MetricsLog:
        policy, frac = job
        catalog = Catalog(sizes, frac * total)
        return run_simulation(trace, catalog, policy, cfg)

    if threads <= 1:
        return {job: one(job) for job in jobs}
    with ThreadPoolExecutor(max_workers=threads) as pool:
        outs = list(pool.map(one, jobs))
    return dict(zip(jobs, outs))


def compare_policies(
    trace: DemandTrace,
    sizes: np.ndarray,
    policies: list[str],
    cache_fracs: list[float],
    cfg: SimConfig,
    *,
    threads: int = 1,
) -> tuple[ComparisonTable, list[MetricsLog]]:
    """Run every policy on the identical trace across a cache-size sweep.

    The log-ratio column compares against "proposed" when present, else
    against the first policy listed.
    """
    if not policies:
        raise ValueError("need at least one policy")
    for frac in cache_fracs:
        if frac <= 0:
            raise ValueError("cache fractions must be positive")
    reference = "proposed" if "proposed" in policies else policies[0]
    jobs = [(p, f) for p in policies for f in cache_fracs]
    logs = _run_grid(trace, sizes, jobs, cfg, threads)

    def averages(m: MetricsLog) -> dict[str, tuple[float, float]]:
        out = {
            str(b): (float(m.hit[:, b].mean()), float(m.hit[:, b].sum()))
            for b in range(m.n_sbs)
        }
        per_slot = m.hit.sum(axis=1)
        out["sum"] = (float(per_slot.mean()), float(per_slot.sum()))
        return out

    rows = []
    for frac in cache_fracs:
        ref_avg = averages(logs[(reference, frac)])
        for policy in policies:
            for sbs, (avg, cum) in averages(logs[(policy, frac)]).items():
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = float(np.log(ref_avg[sbs][0] / avg))
                rows.append(ComparisonRow(policy, frac, sbs, avg, cum, ratio))
    ordered_logs = [logs[j] for j in jobs]
    return ComparisonTable(rows, reference), ordered_logs


def lambda_sweep(
    trace: DemandTrace,
    sizes: np.ndarray,
    prox_lams: list[float],
    cache_fracs: list[float],
    cfg: SimConfig,
    *,
    threads: int = 1,
) -> list[LambdaSweepRow]:
    """Average summed hit of the federated policy per (cache size, prox_lam)."""
    jobs = [(f"federated@{lam}", frac) for lam in prox_lams for frac in cache_fracs]
    total = float(np.sum(sizes))

    def one(job: tuple[str, float]) -> MetricsLog:
        name, frac = job
        lam = float(name.split("@", 1)[1])
        catalog = Catalog(sizes, frac * total)
        return run_simulation(
            trace, catalog, "federated", replace(cfg, federated_lam=lam)
        )

    if threads <= 1:
        outs = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outs = list(pool.map(one, jobs))
    rows = []
    for (name, frac), log in zip(jobs, outs):
        lam = float(name.split("@", 1)[1])
        rows.append(
            LambdaSweepRow(frac, lam, float(log.hit.sum(axis=1).mean()))
        )
    return rows


# ---------------------------------------------------------------------------
# CSV writers


def _g17(x: float) -> str:
    if math.isnan(x):
        return "nan"
    return format(float(x), ".17g")


def write_metrics_csv(logs: list[MetricsLog], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            ["slot", "sbs", "policy", "cache_frac", "hit", "cum_hit",
             "regret_over_tau", "disc_hat", "mismatch_hat", "eps1", "eps2",
             "iters"]
        )
        for m in logs:
            for t in range(m.n_slots):
                for b in range(m.n_sbs):
                    it = m.iters[t, b]
                    w.writerow(
                        [t, b, m.policy, _g17(m.cache_frac), _g17(m.hit[t, b]),
                         _g17(m.cum_hit[t, b]), _g17(m.regret_over_window[t, b]),
                         _g17(m.discrepancy[t, b]), _g17(m.mismatch[t, b]),
                         _g17(m.epsilon1[t, b]), _g17(m.epsilon2[t, b]),
                         "nan" if math.isnan(it) else str(int(it))]
                    )


def write_comparison_csv(table: ComparisonTable, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["policy", "cache_frac", "sbs", "avg_hit", "cum_hit", "log_ratio"])
        for r in table.rows:
            w.writerow(
                [r.policy, _g17(r.cache_frac), r.sbs, _g17(r.avg_hit),
                 _g17(r.cum_hit), _g17(r.log_ratio)]
            )


def write_lambda_sweep_csv(rows: list[LambdaSweepRow], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["cache_frac", "lambda", "avg_hit"])
        for r in rows:
            w.writerow([_g17(r.cache_frac), _g17(r.prox_lam), _g17(r.avg_hit)])
