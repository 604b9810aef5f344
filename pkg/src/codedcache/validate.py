"""Self-contained correctness checks with brute-force oracles.

The greedy knapsack and the proximal QP are checked against exhaustive grid
search (the oracles share no code with the solvers they check); the weight
subroutine is checked for simplex/feasibility invariants on random windows;
the windowed-average bound is Monte-Carlo checked on traces whose expected
demand is known in closed form. `codedcache validate` runs everything and
exits non-zero on any failure.

Public API:
    CheckResult, grid_max_hit, grid_min_prox
    check_knapsack_oracle, check_qp_oracle, check_simplex_invariants
    check_bound_monte_carlo, check_discrepancy_dominance
    run_all_checks
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .discrepancy import discrepancy_estimate, discrepancy_sup, drift_table
from .federated import federated_solve
from .lrfu import lrfu_bound_diagnostic
from .strategy import CachingStrategy, per_slot_optimal
from .traces import Catalog, DemandTrace, SyntheticConfig, Topology, generate_synthetic, slot_pmf
from .weights import OptimizerConfig, run_subroutine

__all__ = [
    "CheckResult",
    "grid_max_hit",
    "grid_min_prox",
    "check_knapsack_oracle",
    "check_qp_oracle",
    "check_simplex_invariants",
    "check_bound_monte_carlo",
    "check_discrepancy_dominance",
    "run_all_checks",
]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _grid(n: int, step: float) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, round(1.0 / step) + 1)
    mesh = np.meshgrid(*([axis] * n), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_max_hit(demand: np.ndarray, catalog: Catalog, step: float = 0.05) -> float:
    """Brute-force max of the linear hit over the feasible grid."""
    pts = _grid(catalog.n_files, step)
    feasible = pts @ catalog.sizes <= catalog.cache_budget * (1.0 + 1e-12)
    values = pts @ (np.asarray(demand) * catalog.sizes)
    return float(values[feasible].max())


def grid_min_prox(
    demand_estimate: np.ndarray,
    anchor: np.ndarray,
    prox_lam: float,
    catalog: Catalog,
    step: float = 0.02,
) -> float:
    """Brute-force min of the proximal miss-cost objective over the grid."""
    pts = _grid(catalog.n_files, step)
    feasible = pts @ catalog.sizes <= catalog.cache_budget * (1.0 + 1e-12)
    miss = (1.0 - pts) @ (np.asarray(demand_estimate) * catalog.sizes)
    prox = prox_lam * ((pts - np.asarray(anchor)) ** 2).sum(axis=1)
    return float((miss + prox)[feasible].min())


def _prox_objective(
    fr: np.ndarray, demand_estimate: np.ndarray, anchor: np.ndarray,
    prox_lam: float, catalog: Catalog,
) -> float:
    miss = float((1.0 - fr) @ (demand_estimate * catalog.sizes))
    return miss + prox_lam * float(((fr - anchor) ** 2).sum())


def check_knapsack_oracle(
    seed: int = 0,
    n_instances: int = 200,
    step: float = 0.05,
    solver=per_slot_optimal,
) -> CheckResult:
    """Greedy placement vs. grid search on random small instances.

    The grid undershoots the true optimum by at most step * n * max(d*size)
    (round the optimum down to the grid: it stays feasible), so the solver
    must land in [grid - 1e-6, grid + slack].
    """
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    failures = 0
    for _ in range(n_instances):
        n = int(rng.integers(1, 5))
        sizes = rng.uniform(0.5, 3.0, size=n)
        demand = rng.uniform(0.0, 5.0, size=n)
        budget = rng.uniform(0.2, 1.0) * float(sizes.sum())
        catalog = Catalog(sizes, budget)
        got = solver(demand, catalog)
        fr = got.fractions if isinstance(got, CachingStrategy) else np.asarray(got)
        value = float(demand @ (fr * sizes))
        best = grid_max_hit(demand, catalog, step)
        slack = float(np.max(demand * sizes)) * step * n
        gap = abs(value - best)
        worst = max(worst, gap - slack)
        if value < best - 1e-6 or value > best + slack + 1e-6:
            failures += 1
    dt = time.perf_counter() - t0
    return CheckResult(
        "knapsack-oracle",
        failures == 0,
        f"{n_instances} instances, {failures} failures, "
        f"worst gap beyond slack {worst:.3e}, {dt:.1f}s",
    )


def check_qp_oracle(
    seed: int = 0,
    n_instances: int = 200,
    step: float = 0.02,
    solver=federated_solve,
) -> CheckResult:
    """Proximal QP solver vs. grid search, plus budget-residual audit."""
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    failures = 0
    worst = 0.0
    for _ in range(n_instances):
        n = int(rng.integers(1, 4))
        sizes = rng.uniform(0.5, 3.0, size=n)
        demand = rng.uniform(0.0, 5.0, size=n)
        anchor = rng.uniform(0.0, 1.0, size=n)
        prox_lam = float(rng.uniform(0.2, 5.0))
        budget = rng.uniform(0.2, 1.0) * float(sizes.sum())
        catalog = Catalog(sizes, budget)
        got = solver(demand, anchor, prox_lam, catalog)
        obj = _prox_objective(got.fractions, demand, anchor, prox_lam, catalog)
        best = grid_min_prox(demand, anchor, prox_lam, catalog, step)
        # Grid overshoots the true min by at most the Lipschitz slack of one
        # grid cell (round the optimum down: feasibility is preserved).
        slack = step * float((demand * sizes).sum()) + 3.0 * prox_lam * n * step
        gap = max(obj - best, best - slack - obj)
        worst = max(worst, gap)
        bad = obj > best + 1e-3 or obj < best - slack - 1e-3
        load = got.cache_load(catalog)
        if load > budget * (1.0 + 1e-9):
            bad = True
        unconstrained = np.clip(
            anchor + sizes * demand / (2.0 * prox_lam), 0.0, 1.0
        )
        if float(unconstrained @ sizes) > budget and abs(load - budget) > 1e-9 * budget:
            bad = True  # budget binds: residual must be tiny
        failures += bad
    dt = time.perf_counter() - t0
    return CheckResult(
        "qp-oracle",
        failures == 0,
        f"{n_instances} instances, {failures} failures, "
        f"worst objective excess {worst:.3e}, {dt:.1f}s",
    )


def check_simplex_invariants(seed: int = 0, n_windows: int = 50) -> CheckResult:
    """Weight vectors stay on their simplices after every iteration."""
    rng = np.random.default_rng(seed)
    violations = 0
    for i in range(n_windows):
        n_files = int(rng.integers(3, 8))
        window = int(rng.integers(2, 6))
        past = int(rng.integers(1, 4))
        recent = int(rng.integers(1, window + 1))
        n_slots = window + past + int(rng.integers(1, 4))
        topo = Topology.ring(int(rng.integers(1, 4)))
        sizes = rng.uniform(1.0, 5.0, size=n_files)
        catalog = Catalog(sizes, 0.4 * float(sizes.sum()))
        cfg_syn = SyntheticConfig(
            zipf_exponent=float(rng.uniform(0.2, 1.2)),
            requests_per_slot=100,
            seed=int(rng.integers(0, 2**32)),
        )
        trace = generate_synthetic(catalog, topo, n_slots, cfg_syn)
        cfg = OptimizerConfig(max_iters=40, tol=0.0, lam=float(rng.uniform(0, 2)))
        results = run_subroutine(
            trace, catalog, n_slots - 1, window, recent, past, cfg,
            record_trace=True,
        )
        for r in results:
            for st in r.state_trace:
                a = st.time_weights
                w = st.full_weights()
                if np.any(a < 0) or abs(float(a.sum()) - 1.0) > 1e-9:
                    violations += 1
                if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-9:
                    violations += 1
                for row in st.inner:
                    if not CachingStrategy(row).is_feasible(catalog):
                        violations += 1
            if not r.strategy.is_feasible(catalog):
                violations += 1
    return CheckResult(
        "simplex-invariants",
        violations == 0,
        f"{n_windows} windows, {violations} violations",
    )


def check_bound_monte_carlo(
    seed: int = 0, n_windows: int = 500, delta: float = 0.05, window: int = 10
) -> CheckResult:
    """Empirical violation frequency of the windowed-average bound.

    Runs on an i.i.d. trace whose per-slot expected demand is known exactly,
    so the best-achievable term is analytic. The bound may fail with
    probability delta; the check allows delta + 0.05.
    """
    topo = Topology.ring(2)
    rng = np.random.default_rng(seed)
    sizes = rng.uniform(2.0, 10.0, size=20)
    catalog = Catalog(sizes, 0.3 * float(sizes.sum()))
    cfg_syn = SyntheticConfig(
        zipf_exponent=0.7, cross_sbs_mixing=1.0, requests_per_slot=300, seed=seed
    )
    first = 2 * window + 2
    n_slots = first + (n_windows + 1) // 2 + 1
    trace = generate_synthetic(catalog, topo, n_slots, cfg_syn)
    expected = [
        cfg_syn.requests_per_slot * slot_pmf(catalog, topo, cfg_syn, b, 0)
        for b in range(2)
    ]
    violations = 0
    checked = 0
    slot = first
    while checked < n_windows:
        b = checked % 2
        rep = lrfu_bound_diagnostic(
            trace, catalog, b, slot, window, delta, expected_demand=expected[b]
        )
        violations += not rep.holds
        checked += 1
        if b == 1:
            slot += 1
    freq = violations / n_windows
    return CheckResult(
        "bound-monte-carlo",
        freq <= delta + 0.05,
        f"{violations}/{n_windows} violations (freq {freq:.3f}, "
        f"allowed {delta + 0.05:.3f})",
    )


def check_discrepancy_dominance(seed: int = 0, n_draws: int = 1000) -> CheckResult:
    """sup estimate dominates the estimate at any feasible iterates."""
    rng = np.random.default_rng(seed)
    bad = 0
    worst = 0.0
    for _ in range(n_draws):
        n_files = int(rng.integers(1, 6))
        window = int(rng.integers(1, 5))
        sizes = rng.uniform(0.5, 3.0, size=n_files)
        catalog = Catalog(sizes, float(rng.uniform(0.2, 1.0)) * float(sizes.sum()))
        table = _random_table(rng, window, n_files, catalog)
        alpha = rng.dirichlet(np.ones(window))
        iterates = np.stack(
            [
                per_slot_optimal(rng.uniform(0, 1, size=n_files), catalog).fractions
                * rng.uniform(0, 1)
                for _ in range(window)
            ]
        )
        est = discrepancy_estimate(table, alpha, iterates)
        sup, _ = discrepancy_sup(table, alpha, catalog)
        worst = max(worst, est - sup)
        bad += est > sup + 1e-9
    return CheckResult(
        "discrepancy-dominance",
        bad == 0,
        f"{n_draws} draws, {bad} violations, worst excess {worst:.3e}",
    )


def _random_table(rng, window: int, n_files: int, catalog: Catalog):
    from .discrepancy import DriftTable

    values = rng.normal(0.0, 2.0, size=(window, n_files)) * catalog.sizes
    return DriftTable(values, 0, window - 1, window, 1, 1)


def run_all_checks(seed: int = 0) -> list[CheckResult]:
    return [
        check_knapsack_oracle(seed),
        check_qp_oracle(seed),
        check_simplex_invariants(seed),
        check_bound_monte_carlo(seed),
        check_discrepancy_dominance(seed),
    ]
