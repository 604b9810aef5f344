"""Coded caching across cooperating small-cell base stations.

The package simulates fractional cache placement under a shared budget:
per-window hindsight comparators are blended with learned time weights and
peer weights, with drift and mismatch diagnostics, plus windowed-frequency
and proximal-consensus baselines for comparison.
"""

from .discrepancy import (
    BoundReport,
    DriftTable,
    bound_report,
    discrepancy_estimate,
    discrepancy_sup,
    drift_table,
    empirical_max_hit,
    global_local_discrepancy,
    mismatch_estimate,
)
from .federated import (
    FederatedState,
    federated_round,
    federated_solve,
    init_federated,
    neighbor_average,
)
from .lrfu import (
    LrfuBoundReport,
    LrfuConfig,
    lrfu_bound_diagnostic,
    lrfu_strategy,
    windowed_demand_estimate,
)
from .regret import (
    HitMatrix,
    future_regret,
    hit_matrix,
    realized_regret,
    regret_sequence,
    window_slots,
)
from .simulate import (
    POLICY_KINDS,
    ComparisonRow,
    ComparisonTable,
    LambdaSweepRow,
    MetricsLog,
    SimConfig,
    compare_policies,
    exchange,
    lambda_sweep,
    run_simulation,
    write_comparison_csv,
    write_lambda_sweep_csv,
    write_metrics_csv,
)
from .strategy import (
    CachingStrategy,
    blend,
    hit_rate,
    knapsack_max,
    load_strategy,
    per_slot_optimal,
    project_budget,
    save_strategy,
)
from .traces import (
    Catalog,
    DemandTrace,
    SyntheticConfig,
    Topology,
    TraceFormatError,
    generate_synthetic,
    import_movielens,
    load_catalog,
    load_trace,
    normalize_slot,
    read_catalog_sizes,
    save_catalog,
    save_trace,
    slot_demand,
    slot_pmf,
)
from .validate import (
    CheckResult,
    check_bound_monte_carlo,
    check_discrepancy_dominance,
    check_knapsack_oracle,
    check_qp_oracle,
    check_simplex_invariants,
    grid_max_hit,
    grid_min_prox,
    run_all_checks,
)
from .weights import (
    OptimizerConfig,
    SubroutineResult,
    WeightState,
    init_state,
    run_subroutine,
)

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CachingStrategy",
    "Catalog",
    "CheckResult",
    "ComparisonRow",
    "ComparisonTable",
    "DemandTrace",
    "DriftTable",
    "FederatedState",
    "HitMatrix",
    "LambdaSweepRow",
    "LrfuBoundReport",
    "LrfuConfig",
    "MetricsLog",
    "OptimizerConfig",
    "POLICY_KINDS",
    "SimConfig",
    "SubroutineResult",
    "SyntheticConfig",
    "Topology",
    "TraceFormatError",
    "WeightState",
    "blend",
    "bound_report",
    "check_bound_monte_carlo",
    "check_discrepancy_dominance",
    "check_knapsack_oracle",
    "check_qp_oracle",
    "check_simplex_invariants",
    "compare_policies",
    "discrepancy_estimate",
    "discrepancy_sup",
    "drift_table",
    "empirical_max_hit",
    "exchange",
    "federated_round",
    "federated_solve",
    "future_regret",
    "generate_synthetic",
    "global_local_discrepancy",
    "grid_max_hit",
    "grid_min_prox",
    "hit_matrix",
    "hit_rate",
    "import_movielens",
    "init_federated",
    "init_state",
    "knapsack_max",
    "lambda_sweep",
    "load_catalog",
    "load_strategy",
    "load_trace",
    "lrfu_bound_diagnostic",
    "lrfu_strategy",
    "mismatch_estimate",
    "neighbor_average",
    "normalize_slot",
    "per_slot_optimal",
    "project_budget",
    "read_catalog_sizes",
    "realized_regret",
    "regret_sequence",
    "run_all_checks",
    "run_simulation",
    "run_subroutine",
    "save_catalog",
    "save_strategy",
    "save_trace",
    "slot_demand",
    "slot_pmf",
    "window_slots",
    "windowed_demand_estimate",
    "write_comparison_csv",
    "write_lambda_sweep_csv",
    "write_metrics_csv",
]
