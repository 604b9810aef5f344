"""Catalogs, demand traces, topologies, and synthetic trace generation.

Public API:
    Catalog, Topology, DemandTrace, SyntheticConfig
    load_catalog / save_catalog / load_trace / save_trace
    generate_synthetic, slot_pmf
    slot_demand, normalize_slot
    import_movielens
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Catalog",
    "Topology",
    "DemandTrace",
    "SyntheticConfig",
    "TraceFormatError",
    "load_catalog",
    "read_catalog_sizes",
    "save_catalog",
    "load_trace",
    "save_trace",
    "generate_synthetic",
    "slot_pmf",
    "slot_demand",
    "normalize_slot",
    "import_movielens",
]

_U64 = (1 << 64) - 1

# Distinct stream tags so regime permutations and slot draws never share a
# generator even for colliding (slot, sbs) coordinates.
_STREAM_GLOBAL_PERM = 1
_STREAM_LOCAL_PERM = 2
_STREAM_SLOT = 3
_STREAM_SIZES = 4
_STREAM_CHUNKS = 5


class TraceFormatError(ValueError):
    """Raised for malformed catalog/trace CSV rows; message names the line."""


@dataclass(frozen=True)
class Catalog:
    """File sizes and the shared per-sBS cache budget.

    sizes are positive reals (generated catalogs use integers, see README);
    cache_budget is the capacity C every sBS has to split across files.
    """

    sizes: np.ndarray
    cache_budget: float

    def __post_init__(self) -> None:
        sizes = np.asarray(self.sizes, dtype=np.float64)
        object.__setattr__(self, "sizes", sizes)
        if sizes.ndim != 1 or sizes.size == 0:
            raise ValueError("catalog needs a non-empty 1-d size vector")
        if not np.all(np.isfinite(sizes)) or np.any(sizes <= 0):
            raise ValueError("file sizes must be finite and positive")
        if not np.isfinite(self.cache_budget) or self.cache_budget <= 0:
            raise ValueError("cache_budget must be finite and positive")
        if self.cache_budget >= float(sizes.sum()):
            warnings.warn(
                "cache_budget covers the whole catalog; caching is trivial",
                stacklevel=2,
            )

    @property
    def n_files(self) -> int:
        return int(self.sizes.size)

    @property
    def total_size(self) -> float:
        return float(self.sizes.sum())


@dataclass(frozen=True)
class Topology:
    """Symmetric neighbor lists, no self-loops; sBS ids are 0-based."""

    n_sbs: int
    neighbors: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if self.n_sbs < 1:
            raise ValueError("topology needs at least one sBS")
        if len(self.neighbors) != self.n_sbs:
            raise ValueError("neighbor list length must equal n_sbs")
        norm = tuple(tuple(sorted(set(ns))) for ns in self.neighbors)
        object.__setattr__(self, "neighbors", norm)
        for b, ns in enumerate(norm):
            for j in ns:
                if not 0 <= j < self.n_sbs:
                    raise ValueError(f"sBS {b}: neighbor {j} out of range")
                if j == b:
                    raise ValueError(f"sBS {b} lists itself as a neighbor")
                if b not in norm[j]:
                    raise ValueError(f"edge {b}<->{j} is not symmetric")

    @staticmethod
    def from_edges(n_sbs: int, edges: list[tuple[int, int]]) -> "Topology":
        ns: list[set[int]] = [set() for _ in range(n_sbs)]
        for a, b in edges:
            if not (0 <= a < n_sbs and 0 <= b < n_sbs):
                raise ValueError(f"edge ({a}, {b}) outside [0, {n_sbs})")
            ns[a].add(b)
            ns[b].add(a)
        return Topology(n_sbs, tuple(tuple(sorted(s)) for s in ns))

    @staticmethod
    def ring(n_sbs: int) -> "Topology":
        """Ring of n_sbs cells; the 5-cell ring is the reference layout."""
        if n_sbs == 1:
            return Topology(1, ((),))
        if n_sbs == 2:
            return Topology.from_edges(2, [(0, 1)])
        edges = [(b, (b + 1) % n_sbs) for b in range(n_sbs)]
        return Topology.from_edges(n_sbs, edges)

    @staticmethod
    def isolated(n_sbs: int) -> "Topology":
        return Topology(n_sbs, tuple(() for _ in range(n_sbs)))


@dataclass(frozen=True)
class DemandTrace:
    """Per-slot, per-sBS, per-file request counts (non-negative reals)."""

    demand: np.ndarray  # (n_slots, n_sbs, n_files)
    topology: Topology

    def __post_init__(self) -> None:
        demand = np.asarray(self.demand, dtype=np.float64)
        object.__setattr__(self, "demand", demand)
        if demand.ndim != 3:
            raise ValueError("demand must be (n_slots, n_sbs, n_files)")
        if not np.all(np.isfinite(demand)) or np.any(demand < 0):
            raise ValueError("demands must be finite and non-negative")
        if demand.shape[1] != self.topology.n_sbs:
            raise ValueError(
                f"trace has {demand.shape[1]} sBSs but topology has "
                f"{self.topology.n_sbs}"
            )

    @property
    def n_slots(self) -> int:
        return int(self.demand.shape[0])

    @property
    def n_sbs(self) -> int:
        return int(self.demand.shape[1])

    @property
    def n_files(self) -> int:
        return int(self.demand.shape[2])


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the regime-switching Zipf request generator."""

    zipf_exponent: float = 0.8
    n_regimes: int = 1
    regime_length: int = 50
    cross_sbs_mixing: float = 0.0
    requests_per_slot: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.zipf_exponent < 0:
            raise ValueError("zipf_exponent must be >= 0")
        if self.n_regimes < 1:
            raise ValueError("n_regimes must be >= 1")
        if self.regime_length < 1:
            raise ValueError("regime_length must be >= 1")
        if not 0.0 <= self.cross_sbs_mixing <= 1.0:
            raise ValueError("cross_sbs_mixing must be in [0, 1]")
        if self.requests_per_slot < 1:
            raise ValueError("requests_per_slot must be a positive integer")


def slot_demand(trace: DemandTrace, sbs: int, slot: int) -> np.ndarray:
    """Demand vector for one (sBS, slot); raises IndexError out of range."""
    if not 0 <= slot < trace.n_slots:
        raise IndexError(f"slot {slot} out of range [0, {trace.n_slots})")
    if not 0 <= sbs < trace.n_sbs:
        raise IndexError(f"sBS {sbs} out of range [0, {trace.n_sbs})")
    return trace.demand[slot, sbs]


def normalize_slot(demand: np.ndarray) -> np.ndarray:
    """Popularity profile of one slot: demand / sum, all-zero stays zero."""
    d = np.asarray(demand, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("demand entries must be non-negative")
    total = d.sum()
    if total == 0.0:
        return np.zeros_like(d)
    return d / total


# ---------------------------------------------------------------------------
# synthetic generation


def _rng(seed: int, *coords: int) -> np.random.Generator:
    entropy = [int(seed) & _U64] + [int(c) & _U64 for c in coords]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _zipf_pmf(n_files: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n_files + 1, dtype=np.float64)
    weights = ranks**-exponent
    return weights / weights.sum()


def _regime_profiles(
    n_files: int, n_sbs: int, cfg: SyntheticConfig
) -> tuple[np.ndarray, np.ndarray]:
    """(global[r, f], local[b, r, f]) popularity profiles per regime.

    Each regime draws fresh rank permutations, so a regime switch reshuffles
    which files are popular while keeping the Zipf shape.
    """
    base = _zipf_pmf(n_files, cfg.zipf_exponent)
    glob = np.empty((cfg.n_regimes, n_files))
    loc = np.empty((n_sbs, cfg.n_regimes, n_files))
    for r in range(cfg.n_regimes):
        perm = _rng(cfg.seed, _STREAM_GLOBAL_PERM, r).permutation(n_files)
        glob[r, perm] = base
        for b in range(n_sbs):
            perm = _rng(cfg.seed, _STREAM_LOCAL_PERM, r, b).permutation(n_files)
            loc[b, r, perm] = base
    return glob, loc


def slot_pmf(
    catalog: Catalog, topology: Topology, cfg: SyntheticConfig, sbs: int, slot: int
) -> np.ndarray:
    """Exact request distribution the generator samples for (sbs, slot).

    Exposed so tests and bound diagnostics can compute expected hits
    analytically instead of estimating them from samples.
    """
    glob, loc = _regime_profiles(catalog.n_files, topology.n_sbs, cfg)
    r = (slot // cfg.regime_length) % cfg.n_regimes
    x = cfg.cross_sbs_mixing
    return x * glob[r] + (1.0 - x) * loc[sbs, r]


def generate_synthetic(
    catalog: Catalog, topology: Topology, n_slots: int, cfg: SyntheticConfig
) -> DemandTrace:
    """Sample a regime-switching Zipf trace, deterministic in cfg.seed.

    Every request is drawn from the mixture
    (1 - cross_sbs_mixing) * local profile + cross_sbs_mixing * global profile,
    which for a whole slot is one multinomial draw on the mixture pmf. All
    randomness is keyed on (seed, stream, slot, sbs), never on call order.
    """
    if n_slots < 0:
        raise ValueError("n_slots must be >= 0")
    n_files = catalog.n_files
    glob, loc = _regime_profiles(n_files, topology.n_sbs, cfg)
    x = cfg.cross_sbs_mixing
    demand = np.zeros((n_slots, topology.n_sbs, n_files))
    for t in range(n_slots):
        r = (t // cfg.regime_length) % cfg.n_regimes
        for b in range(topology.n_sbs):
            pmf = x * glob[r] + (1.0 - x) * loc[b, r]
            rng = _rng(cfg.seed, _STREAM_SLOT, t, b)
            demand[t, b] = rng.multinomial(cfg.requests_per_slot, pmf)
    return DemandTrace(demand, topology)


# ---------------------------------------------------------------------------
# CSV interfaces
#
# catalog.csv : header "file,size", file ids contiguous from 0
# trace.csv   : header "slot,sbs,file,demand", sparse (zeros omitted),
#               rows sorted by (slot, sbs, file)


def save_catalog(catalog: Catalog, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["file", "size"])
        for f in range(catalog.n_files):
            w.writerow([f, _fmt(catalog.sizes[f])])


def load_catalog(path: str | Path, cache_budget: float) -> Catalog:
    """Read a catalog CSV; the budget is supplied by the caller (run config)."""
    return Catalog(read_catalog_sizes(path), cache_budget)


def read_catalog_sizes(path: str | Path) -> np.ndarray:
    """Just the size vector, for callers that sweep the budget separately."""
    rows: list[tuple[int, float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["file", "size"]:
            raise TraceFormatError(f"{path}:1: expected header 'file,size'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append((int(row[0]), float(row[1])))
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(f"{path}:{lineno}: malformed row {row!r}") from exc
    if not rows:
        raise TraceFormatError(f"{path}: catalog has no files")
    rows.sort()
    ids = [f for f, _ in rows]
    if ids != list(range(len(rows))):
        raise TraceFormatError(
            f"{path}: file ids must be contiguous from 0, got {ids[:8]}..."
        )
    return np.array([s for _, s in rows])


def save_trace(trace: DemandTrace, path: str | Path) -> None:
    """Write the sparse trace CSV; zero demands are omitted."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "sbs", "file", "demand"])
        nz = np.argwhere(trace.demand > 0)
        for t, b, f in nz:  # argwhere already yields lexicographic order
            w.writerow([t, b, f, _fmt(trace.demand[t, b, f])])


def load_trace(
    catalog_path: str | Path,
    trace_path: str | Path,
    cache_budget: float,
    *,
    topology: Topology | None = None,
    n_slots: int | None = None,
    n_sbs: int | None = None,
) -> tuple[Catalog, DemandTrace]:
    """Read catalog + trace CSVs into validated in-memory types.

    The trace CSV is sparse, so trailing all-zero slots (or idle sBSs) are not
    representable; pass n_slots / n_sbs / topology to pin the dimensions when
    they exceed what the rows imply. An empty trace body is a valid all-zero
    trace of the pinned (or zero) dimensions.
    """
    catalog = load_catalog(catalog_path, cache_budget)
    entries: list[tuple[int, int, int, float]] = []
    max_slot = -1
    max_sbs = -1
    with open(trace_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expect = ["slot", "sbs", "file", "demand"]
        if header is None or [h.strip() for h in header] != expect:
            raise TraceFormatError(f"{trace_path}:1: expected header 'slot,sbs,file,demand'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, b, f, d = int(row[0]), int(row[1]), int(row[2]), float(row[3])
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(
                    f"{trace_path}:{lineno}: malformed row {row!r}"
                ) from exc
            if t < 0 or b < 0:
                raise TraceFormatError(
                    f"{trace_path}:{lineno}: negative slot or sBS index"
                )
            if not 0 <= f < catalog.n_files:
                raise TraceFormatError(
                    f"{trace_path}:{lineno}: file {f} outside catalog "
                    f"[0, {catalog.n_files})"
                )
            if not np.isfinite(d) or d < 0:
                raise TraceFormatError(
                    f"{trace_path}:{lineno}: negative or non-finite demand {d}"
                )
            entries.append((t, b, f, d))
            max_slot = max(max_slot, t)
            max_sbs = max(max_sbs, b)

    slots = max(max_slot + 1, n_slots or 0)
    if topology is not None:
        sbss = topology.n_sbs
        if max_sbs >= sbss:
            raise ValueError(f"{trace_path}: sBS {max_sbs} outside topology ({sbss})")
    else:
        sbss = max(max_sbs + 1, n_sbs or 1)
        topology = Topology.isolated(sbss)
    demand = np.zeros((slots, sbss, catalog.n_files))
    for t, b, f, d in entries:
        demand[t, b, f] += d
    return catalog, DemandTrace(demand, topology)


def _fmt(x: float) -> str:
    """17 significant digits: enough for exact float64 round-trips."""
    if float(x) == int(x):
        return str(int(x))
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# MovieLens conversion
#
# Ratings logs (either "userId,movieId,rating,timestamp" CSV or the
# '::'-separated .dat layout) become request traces: the n_files most-rated
# movies form the catalog, events are bucketed into n_slots equal-count slots
# by timestamp, and every event lands on one of n_sbs disjoint chunks.


def import_movielens(
    ratings_path: str | Path,
    *,
    n_files: int = 800,
    n_slots: int = 200,
    topology: Topology,
    size_min: int = 10,
    size_max: int = 100,
    seed: int = 0,
) -> tuple[Catalog, DemandTrace]:
    if size_min <= 0 or size_max < size_min:
        raise ValueError("need 0 < size_min <= size_max")
    events: list[tuple[int, int, int]] = []  # (timestamp, movie, rank-breaker)
    counts: dict[int, int] = {}
    with open(ratings_path, newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split("::") if "::" in line else line.split(",")
            if lineno == 1 and not parts[0].strip().isdigit():
                continue  # header
            try:
                user = int(parts[0])
                movie = int(parts[1])
                ts = int(float(parts[3]))
            except (ValueError, IndexError) as exc:
                raise TraceFormatError(
                    f"{ratings_path}:{lineno}: malformed rating row"
                ) from exc
            counts[movie] = counts.get(movie, 0) + 1
            events.append((ts, movie, user))
    if not events:
        raise ValueError(f"{ratings_path}: no rating events found")

    top = sorted(counts, key=lambda m: (-counts[m], m))[:n_files]
    if len(top) < n_files:
        raise ValueError(
            f"only {len(top)} distinct movies; cannot build a {n_files}-file catalog"
        )
    file_of = {m: i for i, m in enumerate(top)}

    sizes = _rng(seed, _STREAM_SIZES).integers(size_min, size_max + 1, size=n_files)
    # Budget placeholder: callers rescale via cache-frac sweeps.
    catalog = Catalog(sizes.astype(np.float64), 0.3 * float(sizes.sum()))

    kept = [(ts, m, u) for ts, m, u in events if m in file_of]
    kept.sort()
    demand = np.zeros((n_slots, topology.n_sbs, n_files))
    chunks = _rng(seed, _STREAM_CHUNKS).integers(0, topology.n_sbs, size=len(kept))
    for rank, (ts, movie, _user) in enumerate(kept):
        slot = min(rank * n_slots // len(kept), n_slots - 1)
        demand[slot, chunks[rank], file_of[movie]] += 1.0
    return catalog, DemandTrace(demand, topology)
