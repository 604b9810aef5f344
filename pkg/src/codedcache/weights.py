"""Synchronous weight optimization across sBSs.

Each sBS blends the hindsight comparator strategies of its own demand window
(time weights) with its neighbors' blends (peer weights). Both weight vectors
live on probability simplices and are fitted by projected first-order steps
that trade raw window hits against the drift (discrepancy) and neighbor
mismatch estimates. All sBSs step in lockstep: every iteration reads only the
previous iteration's broadcast weights, which keeps the result independent of
sBS update order.

Public API:
    OptimizerConfig, WeightState, SubroutineResult
    init_state, update_inner, update_time_weights, update_peer_weights
    run_subroutine
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .discrepancy import (
    DriftTable,
    discrepancy_estimate,
    drift_table,
    mismatch_estimate,
)
from .regret import hit_matrix, regret_sequence
from .strategy import CachingStrategy, blend, project_budget
from .traces import Catalog, DemandTrace

__all__ = [
    "OptimizerConfig",
    "WeightState",
    "SubroutineResult",
    "init_state",
    "update_inner",
    "update_time_weights",
    "update_peer_weights",
    "run_subroutine",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OptimizerConfig:
    """Step sizes and trade-off coefficients for the weight subroutine.

    a scales the drift (discrepancy) term, b_coef the neighbor-mismatch term;
    both default to 1, reproducing the plain update rules. lam pulls the time
    weights toward uniform when penalty_sign is "penalize" (default) and
    rewards deviation when "literal". Step sizes decay as x0/sqrt(k).
    """

    a: float = 1.0
    b_coef: float = 1.0
    lam: float = 1.0
    eta0: float = 1.0
    beta0: float = 0.01
    gamma0: float = 0.4
    max_iters: int = 500
    tol: float = 1e-4
    penalty_sign: str = "penalize"
    projection_mode: str = "only-if-exceeded"
    mismatch_on_local: bool = True

    def __post_init__(self) -> None:
        if self.penalty_sign not in ("penalize", "literal"):
            raise ValueError(f"unknown penalty_sign {self.penalty_sign!r}")
        if self.max_iters < 0 or self.tol < 0:
            raise ValueError("max_iters and tol must be non-negative")
        if min(self.eta0, self.beta0, self.gamma0) < 0 or self.lam < 0:
            raise ValueError("step sizes and lam must be non-negative")


@dataclass(frozen=True)
class WeightState:
    """One sBS's optimizer state.

    inner holds the window-slot strategy iterates of the drift ascent (one row
    per window slot); time_weights and (self_weight, peer_weights) are the two
    simplex-constrained weight vectors.
    """

    time_weights: np.ndarray
    self_weight: float
    peer_weights: np.ndarray
    inner: np.ndarray
    iteration: int = 0

    @property
    def window(self) -> int:
        return int(self.time_weights.size)

    def full_weights(self) -> np.ndarray:
        return np.concatenate(([self.self_weight], self.peer_weights))


@dataclass(frozen=True)
class SubroutineResult:
    sbs: int
    strategy: CachingStrategy
    state: WeightState
    converged: bool
    n_iters: int
    discrepancy: float
    mismatch: float
    objective_trace: list[float] = field(default_factory=list)
    state_trace: list[WeightState] = field(default_factory=list)


def init_state(catalog: Catalog, window: int, n_peers: int) -> WeightState:
    """Uniform weights, inner iterates at the spread-evenly strategy."""
    if window < 1:
        raise ValueError("window must be >= 1")
    if n_peers < 0:
        raise ValueError("n_peers must be >= 0")
    start = min(catalog.cache_budget / catalog.total_size, 1.0)
    inner = np.full((window, catalog.n_files), start)
    u = 1.0 / (n_peers + 1)
    return WeightState(
        time_weights=np.full(window, 1.0 / window),
        self_weight=u,
        peer_weights=np.full(n_peers, u),
        inner=inner,
    )


def _drift_scores(inner: np.ndarray, table: DriftTable) -> np.ndarray:
    return np.einsum("tf,tf->t", inner, table.values)


def _project_rows(inner: np.ndarray, catalog: Catalog, mode: str) -> np.ndarray:
    """project_budget applied row-wise, vectorizing the common no-cap path."""
    x = np.clip(inner, 0.0, None)
    loads = x @ catalog.sizes
    budget = catalog.cache_budget
    if mode == "always-scale":
        needs = loads > 0
        factors = np.where(needs, budget / np.where(needs, loads, 1.0), 1.0)
        x = x * factors[:, None]
    else:
        over = loads > budget * (1.0 + 1e-9)
        if np.any(over):
            x[over] *= (budget / loads[over])[:, None]
    hot = np.flatnonzero(x.max(axis=1) > 1.0)
    for t in hot:  # rare: only when a rescale pushed entries past 1
        x[t] = project_budget(x[t], catalog, mode).fractions
    return x


def update_inner(
    state: WeightState, table: DriftTable, eta: float, catalog: Catalog,
    mode: str = "only-if-exceeded",
) -> WeightState:
    """Signed ascent step on the weighted drift, then per-row projection.

    The shared sign follows the current total drift score: ascend when
    positive, descend otherwise, so the iterates chase |weighted drift|.
    """
    total = float(state.time_weights @ _drift_scores(state.inner, table))
    sign = 1.0 if total > 0 else -1.0
    grad = sign * state.time_weights[:, None] * table.values
    raw = state.inner + 2.0 * eta * grad
    return replace(state, inner=_project_rows(raw, catalog, mode))


def _simplex_or_uniform(raw: np.ndarray, what: str) -> np.ndarray:
    clipped = np.clip(raw, 0.0, None)
    total = float(clipped.sum())
    if total == 0.0:
        log.warning("%s collapsed to zero after clipping; reset to uniform", what)
        return np.full(raw.size, 1.0 / raw.size)
    return clipped / total


def update_time_weights(
    state: WeightState,
    table: DriftTable,
    own_slot_hits: np.ndarray,
    self_hit_colsums: np.ndarray,
    cfg: OptimizerConfig,
    beta: float,
) -> WeightState:
    """Ascent step on the per-slot trade-off, then clip + renormalize.

    Coordinate t moves with (own-slot hit) - a*2|drift score| - b*(mismatch
    gradient) +/- lam*(uniform pull). The drift scores are recomputed from the
    freshly projected inner iterates; the mismatch gradient for coordinate t is
    (2/window) * (total peer weight) * (column sum t of the self hit matrix).
    The printed subgradient of the uniform pull is 1{a_t < 1/window} -
    1{a_t >= 1/window}, i.e. the *negative* of the true l1 subgradient, so
    "penalize" keeps it as printed (pulls toward uniform) and "literal" flips
    it (ascends the deviation-rewarding objective).
    """
    window = state.window
    a = state.time_weights
    scores = _drift_scores(state.inner, table)
    grad_mismatch = (
        2.0 / window * float(state.peer_weights.sum()) * self_hit_colsums
    )
    pull = np.where(a < 1.0 / window, 1.0, -1.0)
    if cfg.penalty_sign == "literal":
        pull = -pull
    raw = a + beta * (
        own_slot_hits
        - cfg.a * 2.0 * np.abs(scores)
        - cfg.b_coef * grad_mismatch
        + cfg.lam * pull
    )
    return replace(state, time_weights=_simplex_or_uniform(raw, "time weights"))


def update_peer_weights(
    state: WeightState,
    snapshot_time_weights: np.ndarray,
    peer_time_weights: list[np.ndarray],
    self_hit_colsums: np.ndarray,
    peer_hit_colsums: list[np.ndarray],
    cfg: OptimizerConfig,
    gamma: float,
) -> WeightState:
    """Descent step on the mismatch, then the one-sided simplex projection.

    Peer j's weight moves against (2/window) * (own weighted hits - peer j's
    weighted hits), both evaluated with the previous iteration's time weights.
    After clipping, the self weight absorbs the remaining mass; if the peers
    already hold at least 1 the self weight drops to 0 and peers renormalize.
    """
    window = state.window
    w = state.peer_weights.copy()
    own = float(snapshot_time_weights @ self_hit_colsums)
    for j in range(w.size):
        peer = float(peer_time_weights[j] @ peer_hit_colsums[j])
        w[j] -= gamma * cfg.b_coef * (2.0 / window) * (own - peer)
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    if total < 1.0:
        return replace(state, peer_weights=w, self_weight=1.0 - total)
    return replace(state, peer_weights=w / total, self_weight=0.0)


def _weights_delta(a: WeightState, b: WeightState) -> float:
    d = abs(a.self_weight - b.self_weight)
    if a.peer_weights.size:
        d = max(d, float(np.abs(a.peer_weights - b.peer_weights).max()))
    return max(d, float(np.abs(a.time_weights - b.time_weights).max()))


def _objective(
    state: WeightState,
    table: DriftTable,
    own_slot_hits: np.ndarray,
    mismatch: float,
    cfg: OptimizerConfig,
) -> float:
    window = state.window
    disc = discrepancy_estimate(table, state.time_weights, state.inner)
    dev = float(np.abs(state.time_weights - 1.0 / window).sum())
    pen = -cfg.lam * dev if cfg.penalty_sign == "penalize" else cfg.lam * dev
    return (
        float(state.time_weights @ own_slot_hits)
        - cfg.a * disc
        - cfg.b_coef * mismatch
        + pen
    )


def run_subroutine(
    trace: DemandTrace,
    catalog: Catalog,
    anchor: int,
    window: int,
    recent_window: int,
    past_window: int,
    cfg: OptimizerConfig,
    *,
    alpha_mode: str = "optimize",
    w_mode: str = "optimize",
    regret_mode: str = "per-slot-opt",
    use_normalized: bool = True,
    record_objective: bool = False,
    record_trace: bool = False,
) -> list[SubroutineResult]:
    """Run the lockstep weight optimization for every sBS at one anchor slot.

    alpha_mode: "optimize" or "uniform" (freeze time weights).
    w_mode: "optimize", "uniform" (freeze at equal weights) or "zero"
    (self-only). With both vectors frozen no iterations are needed and the
    blend is returned directly.

    Returns one result per sBS; result.strategy is the peer-and-time blended
    placement for slot anchor+1, projected back to the budget.
    """
    if alpha_mode not in ("optimize", "uniform"):
        raise ValueError(f"unknown alpha_mode {alpha_mode!r}")
    if w_mode not in ("optimize", "uniform", "zero"):
        raise ValueError(f"unknown w_mode {w_mode!r}")
    topo = trace.topology
    n_sbs = topo.n_sbs

    comparators = [
        regret_sequence(
            trace, catalog, b, anchor, window, regret_mode,
            use_normalized=use_normalized,
        )
        for b in range(n_sbs)
    ]
    tables = [
        drift_table(
            trace, catalog, b, anchor, window, recent_window, past_window,
            use_normalized=use_normalized,
        )
        for b in range(n_sbs)
    ]
    own_hits = []
    self_colsums = []
    self_hit_matrices = []
    peer_hits: list[list] = []
    peer_colsums: list[list[np.ndarray]] = []
    for b in range(n_sbs):
        h_self = hit_matrix(
            comparators[b], trace, catalog, b, anchor, window,
            use_normalized=use_normalized,
        )
        self_hit_matrices.append(h_self)
        own_hits.append(np.diagonal(h_self.values).copy())
        self_colsums.append(h_self.values.sum(axis=0))
        hs, cs = [], []
        for peer in topo.neighbors[b]:
            demand_sbs = b if cfg.mismatch_on_local else peer
            h = hit_matrix(
                comparators[peer], trace, catalog, demand_sbs, anchor, window,
                use_normalized=use_normalized,
            )
            hs.append(h)
            cs.append(h.values.sum(axis=0))
        peer_hits.append(hs)
        peer_colsums.append(cs)

    states = [init_state(catalog, window, len(topo.neighbors[b])) for b in range(n_sbs)]
    if w_mode == "zero":
        states = [
            replace(s, self_weight=1.0, peer_weights=np.zeros_like(s.peer_weights))
            for s in states
        ]

    objective_traces: list[list[float]] = [[] for _ in range(n_sbs)]
    state_traces: list[list[WeightState]] = [[] for _ in range(n_sbs)]

    def current_mismatch(b: int, sts: list[WeightState]) -> float:
        return mismatch_estimate(
            sts[b].peer_weights,
            sts[b].time_weights,
            [sts[p].time_weights for p in topo.neighbors[b]],
            self_hit_matrices[b],
            peer_hits[b],
        )

    optimize_any = alpha_mode == "optimize" or w_mode == "optimize"
    converged = not optimize_any
    n_iters = 0
    if optimize_any:
        for k in range(1, cfg.max_iters + 1):
            eta = cfg.eta0 / math.sqrt(k)
            beta = cfg.beta0 / math.sqrt(k)
            gamma = cfg.gamma0 / math.sqrt(k)
            snapshot = states
            new_states = []
            for b in range(n_sbs):
                st = update_inner(
                    snapshot[b], tables[b], eta, catalog, cfg.projection_mode
                )
                if alpha_mode == "optimize":
                    st = update_time_weights(
                        st, tables[b], own_hits[b], self_colsums[b], cfg, beta
                    )
                if w_mode == "optimize":
                    st = update_peer_weights(
                        st,
                        snapshot[b].time_weights,
                        [snapshot[p].time_weights for p in topo.neighbors[b]],
                        self_colsums[b],
                        peer_colsums[b],
                        cfg,
                        gamma,
                    )
                new_states.append(replace(st, iteration=k))
            delta = max(
                _weights_delta(snapshot[b], new_states[b]) for b in range(n_sbs)
            )
            states = new_states
            n_iters = k
            if record_objective:
                for b in range(n_sbs):
                    objective_traces[b].append(
                        _objective(states[b], tables[b], own_hits[b],
                                   current_mismatch(b, states), cfg)
                    )
            if record_trace:
                for b in range(n_sbs):
                    state_traces[b].append(states[b])
            if delta < cfg.tol:
                converged = True
                break

    results = []
    for b in range(n_sbs):
        st = states[b]
        own_blend = blend(comparators[b], st.time_weights)
        parts = [own_blend] + [
            blend(comparators[p], states[p].time_weights) for p in topo.neighbors[b]
        ]
        strategy = project_budget(
            blend(parts, st.full_weights()).fractions, catalog
        )
        results.append(
            SubroutineResult(
                sbs=b,
                strategy=strategy,
                state=st,
                converged=converged,
                n_iters=n_iters,
                discrepancy=discrepancy_estimate(
                    tables[b], st.time_weights, st.inner
                ),
                mismatch=current_mismatch(b, states),
                objective_trace=objective_traces[b],
                state_trace=state_traces[b],
            )
        )
    return results
