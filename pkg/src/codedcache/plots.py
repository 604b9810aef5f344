"""Vector-graphic summaries of comparison and sweep CSV outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless; must precede pyplot import

import matplotlib.pyplot as plt

from .simulate import ComparisonTable, LambdaSweepRow

__all__ = ["plot_hit_vs_cache", "plot_log_ratio", "plot_lambda_sweep"]

_MARKERS = ["o", "s", "^", "v", "D", "x", "+", "*"]


def _series(table: ComparisonTable, sbs: str) -> dict[str, tuple[list, list]]:
    out: dict[str, tuple[list, list]] = {}
    for r in table.rows:
        if r.sbs != sbs:
            continue
        xs, ys = out.setdefault(r.policy, ([], []))
        xs.append(r.cache_frac)
        ys.append(r.avg_hit)
    return out


def plot_hit_vs_cache(table: ComparisonTable, sbs: str, path: str | Path) -> None:
    """Average hit vs cache fraction, one line per policy, for one sBS row."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (policy, (xs, ys)) in enumerate(sorted(_series(table, sbs).items())):
        ax.plot(xs, ys, marker=_MARKERS[i % len(_MARKERS)], label=policy)
    ax.set_xlabel("cache fraction")
    ax.set_ylabel("average cache hit")
    ax.set_title(f"sBS {sbs}" if sbs != "sum" else "all sBSs (sum)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def plot_log_ratio(table: ComparisonTable, path: str | Path) -> None:
    """log(reference avg / policy avg) on the summed hits per cache point."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, (policy, (xs, ys)) in enumerate(sorted(_ratio_series(table).items())):
        ax.plot(xs, ys, marker=_MARKERS[i % len(_MARKERS)], label=policy)
    ax.axhline(0.0, color="k", linewidth=0.8)
    ax.set_xlabel("cache fraction")
    ax.set_ylabel(f"log({table.reference} / policy)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _ratio_series(table: ComparisonTable) -> dict[str, tuple[list, list]]:
    out: dict[str, tuple[list, list]] = {}
    for r in table.rows:
        if r.sbs != "sum":
            continue
        xs, ys = out.setdefault(r.policy, ([], []))
        xs.append(r.cache_frac)
        ys.append(r.log_ratio)
    return out


def plot_lambda_sweep(rows: list[LambdaSweepRow], path: str | Path) -> None:
    """Federated average hit vs proximal coefficient, one line per cache size."""
    fig, ax = plt.subplots(figsize=(6, 4))
    fracs = sorted({r.cache_frac for r in rows})
    for i, frac in enumerate(fracs):
        pts = sorted(
            (r.prox_lam, r.avg_hit) for r in rows if r.cache_frac == frac
        )
        ax.plot(
            [p[0] for p in pts],
            [p[1] for p in pts],
            marker=_MARKERS[i % len(_MARKERS)],
            label=f"cache {frac:g}",
        )
    ax.set_xscale("log")
    ax.set_xlabel("proximal coefficient")
    ax.set_ylabel("average cache hit (summed)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
