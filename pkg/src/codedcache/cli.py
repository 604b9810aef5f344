"""Command line interface: generate / run / validate / import-movielens.

All commands read one JSON config (see README for the schema) with flag
overrides for the common knobs, write everything below the --out directory,
and dump the fully resolved config next to the outputs so a run can be
reproduced byte-for-byte from that file alone.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import numpy as np

from . import plots
from .lrfu import LrfuConfig
from .simulate import (
    POLICY_KINDS,
    SimConfig,
    compare_policies,
    lambda_sweep,
    write_comparison_csv,
    write_lambda_sweep_csv,
    write_metrics_csv,
)
from .traces import (
    DemandTrace,
    SyntheticConfig,
    Topology,
    _STREAM_SIZES,
    _rng,
    import_movielens,
    load_trace,
    read_catalog_sizes,
    save_catalog,
    save_trace,
    Catalog,
    generate_synthetic,
)
from .validate import run_all_checks
from .weights import OptimizerConfig

__all__ = ["main", "DEFAULT_CONFIG"]

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "out": "out",
    "threads": 1,
    "policies": ["proposed", "lrfu", "uniform-static", "federated"],
    "cache_fracs": [0.1, 0.3, 0.5],
    "lambda_sweep": [],
    "catalog": {"n_files": 100, "size_min": 10, "size_max": 100},
    "topology": {"kind": "ring", "n_sbs": 5},
    "trace": {
        "n_slots": 200,
        "zipf_exponent": 0.9,
        "n_regimes": 3,
        "regime_length": 67,
        "cross_sbs_mixing": 0.3,
        "requests_per_slot": 1000,
    },
    "sim": {
        "window": 10,
        "recent_window": 5,
        "past_window": 5,
        "regret_mode": "per-slot-opt",
        "delta": 0.05,
        "refresh_every": 1,
        "federated_lam": 2.0,
        "lrfu_mode": "fractional",
        "lrfu_ordering": "by-value",
    },
    "optimizer": {
        "a": 1.0,
        "b_coef": 1.0,
        "lam": 1.0,
        "eta0": 1.0,
        "beta0": 0.01,
        "gamma0": 0.4,
        "max_iters": 500,
        "tol": 1e-4,
        "penalty_sign": "penalize",
    },
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path: str | None) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    with open(path) as fh:
        user = json.load(fh)
    if not isinstance(user, dict):
        raise ValueError(f"{path}: config must be a JSON object")
    return _merge(DEFAULT_CONFIG, user)


def _apply_overrides(cfg: dict, args: argparse.Namespace) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        cfg["out"] = args.out
    if getattr(args, "policies", None):
        cfg["policies"] = args.policies.split(",")
    if getattr(args, "cache_fracs", None):
        cfg["cache_fracs"] = [float(x) for x in args.cache_fracs.split(",")]
    if getattr(args, "lambda_sweep", None):
        cfg["lambda_sweep"] = [float(x) for x in args.lambda_sweep.split(",")]
    if getattr(args, "threads", None) is not None:
        cfg["threads"] = args.threads
    return cfg


def build_topology(d: dict) -> Topology:
    if "edges" in d:
        return Topology.from_edges(
            int(d["n_sbs"]), [tuple(e) for e in d["edges"]]
        )
    kind = d.get("kind", "ring")
    n = int(d.get("n_sbs", 5))
    if kind == "ring":
        return Topology.ring(n)
    if kind == "isolated":
        return Topology.isolated(n)
    raise ValueError(f"unknown topology kind {kind!r}")


def build_sizes(cfg: dict) -> np.ndarray:
    cat = cfg["catalog"]
    if "path" in cat:
        return read_catalog_sizes(cat["path"])
    rng = _rng(int(cfg["seed"]), _STREAM_SIZES)
    sizes = rng.integers(
        int(cat.get("size_min", 10)), int(cat.get("size_max", 100)) + 1,
        size=int(cat["n_files"]),
    )
    return sizes.astype(np.float64)


def build_trace(cfg: dict, sizes: np.ndarray, topology: Topology) -> DemandTrace:
    tr = cfg["trace"]
    if "path" in tr:
        # budget placeholder: runs sweep the budget themselves
        _, trace = load_trace(
            cfg["catalog"]["path"], tr["path"], 0.3 * float(sizes.sum()),
            topology=topology, n_slots=tr.get("n_slots"),
        )
        return trace
    syn = SyntheticConfig(
        zipf_exponent=float(tr.get("zipf_exponent", 0.8)),
        n_regimes=int(tr.get("n_regimes", 1)),
        regime_length=int(tr.get("regime_length", 50)),
        cross_sbs_mixing=float(tr.get("cross_sbs_mixing", 0.0)),
        requests_per_slot=int(tr.get("requests_per_slot", 1000)),
        seed=int(cfg["seed"]),
    )
    catalog = Catalog(sizes, 0.3 * float(sizes.sum()))
    return generate_synthetic(catalog, topology, int(tr["n_slots"]), syn)


def build_sim_config(cfg: dict) -> SimConfig:
    sim = cfg["sim"]
    opt = cfg["optimizer"]
    return SimConfig(
        window=int(sim["window"]),
        recent_window=int(sim["recent_window"]),
        past_window=int(sim["past_window"]),
        optimizer=OptimizerConfig(
            a=float(opt["a"]),
            b_coef=float(opt["b_coef"]),
            lam=float(opt["lam"]),
            eta0=float(opt["eta0"]),
            beta0=float(opt["beta0"]),
            gamma0=float(opt["gamma0"]),
            max_iters=int(opt["max_iters"]),
            tol=float(opt["tol"]),
            penalty_sign=str(opt["penalty_sign"]),
        ),
        lrfu=LrfuConfig(
            mode=str(sim.get("lrfu_mode", "fractional")),
            ordering=str(sim.get("lrfu_ordering", "by-value")),
        ),
        federated_lam=float(sim["federated_lam"]),
        regret_mode=str(sim["regret_mode"]),
        delta=float(sim["delta"]),
        refresh_every=int(sim["refresh_every"]),
    )


def _dump_effective(cfg: dict, out: Path) -> None:
    with open(out / "effective_config.json", "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    topology = build_topology(cfg["topology"])
    sizes = build_sizes(cfg)
    trace = build_trace(cfg, sizes, topology)
    catalog = Catalog(sizes, 0.3 * float(sizes.sum()))
    save_catalog(catalog, out / "catalog.csv")
    save_trace(trace, out / "trace.csv")
    _dump_effective(cfg, out)
    print(f"wrote {out / 'catalog.csv'} ({catalog.n_files} files)")
    print(f"wrote {out / 'trace.csv'} ({trace.n_slots} slots, {trace.n_sbs} sBSs)")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    for policy in cfg["policies"]:
        if policy not in POLICY_KINDS:
            print(
                f"error: unknown policy {policy!r}; valid kinds: "
                f"{', '.join(POLICY_KINDS)}",
                file=sys.stderr,
            )
            return 2
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    topology = build_topology(cfg["topology"])
    sizes = build_sizes(cfg)
    trace = build_trace(cfg, sizes, topology)
    sim_cfg = build_sim_config(cfg)
    threads = int(cfg["threads"])

    table, logs = compare_policies(
        trace, sizes, list(cfg["policies"]), [float(f) for f in cfg["cache_fracs"]],
        sim_cfg, threads=threads,
    )
    write_metrics_csv(logs, out / "metrics.csv")
    write_comparison_csv(table, out / "comparison.csv")
    for b in range(trace.n_sbs):
        plots.plot_hit_vs_cache(table, str(b), out / f"hit_vs_cache_sbs{b}.svg")
    plots.plot_hit_vs_cache(table, "sum", out / "hit_vs_cache_sum.svg")
    plots.plot_log_ratio(table, out / "log_ratio.svg")

    if cfg["lambda_sweep"]:
        rows = lambda_sweep(
            trace, sizes, [float(x) for x in cfg["lambda_sweep"]],
            [float(f) for f in cfg["cache_fracs"]], sim_cfg, threads=threads,
        )
        write_lambda_sweep_csv(rows, out / "lambda_sweep.csv")
        plots.plot_lambda_sweep(rows, out / "lambda_sweep.svg")

    _dump_effective(cfg, out)
    print(f"wrote results for {len(cfg['policies'])} policies x "
          f"{len(cfg['cache_fracs'])} cache sizes under {out}/")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    results = run_all_checks(int(cfg["seed"]))
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def cmd_import_movielens(args: argparse.Namespace) -> int:
    out = Path(args.out if args.out is not None else "out")
    out.mkdir(parents=True, exist_ok=True)
    topology = Topology.ring(args.n_sbs)
    catalog, trace = import_movielens(
        args.ratings,
        n_files=args.n_files,
        n_slots=args.n_slots,
        topology=topology,
        size_min=args.size_min,
        size_max=args.size_max,
        seed=args.seed if args.seed is not None else 0,
    )
    save_catalog(catalog, out / "catalog.csv")
    save_trace(trace, out / "trace.csv")
    print(f"wrote {out / 'catalog.csv'} and {out / 'trace.csv'} "
          f"({trace.n_slots} slots, {trace.n_sbs} sBSs, {catalog.n_files} files)")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file (defaults merged in)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help="worker threads for run grids")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="codedcache",
        description="distributed coded-caching simulator and diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("generate", help="write a synthetic catalog + trace")
    _add_common(p_gen)
    p_gen.set_defaults(func=cmd_generate)

    p_run = sub.add_parser("run", help="simulate policies and write reports")
    _add_common(p_run)
    p_run.add_argument("--policies", help="comma-separated policy kinds")
    p_run.add_argument("--cache-fracs", help="comma-separated cache fractions")
    p_run.add_argument("--lambda-sweep", help="comma-separated proximal coefficients")
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="run the built-in oracle checks")
    _add_common(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_imp = sub.add_parser(
        "import-movielens", help="convert a ratings log into catalog + trace CSVs"
    )
    p_imp.add_argument("--ratings", required=True, help="ratings .csv or .dat file")
    p_imp.add_argument("--out", help="output directory")
    p_imp.add_argument("--seed", type=int, help="sizes / chunk assignment seed")
    p_imp.add_argument("--n-files", type=int, default=800)
    p_imp.add_argument("--n-slots", type=int, default=200)
    p_imp.add_argument("--n-sbs", type=int, default=5)
    p_imp.add_argument("--size-min", type=int, default=10)
    p_imp.add_argument("--size-max", type=int, default=100)
    p_imp.set_defaults(func=cmd_import_movielens)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
