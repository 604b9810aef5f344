import numpy as np
import pytest

from codedcache import (
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
    save_catalog,
    save_trace,
    slot_demand,
    slot_pmf,
)

from conftest import make_trace


def test_catalog_validation():
    cat = Catalog(np.array([10.0, 20.0]), 12.0)
    assert cat.n_files == 2
    assert cat.total_size == 30.0
    with pytest.raises(ValueError):
        Catalog(np.array([0.0, 1.0]), 1.0)
    with pytest.raises(ValueError):
        Catalog(np.array([1.0, 2.0]), -1.0)
    with pytest.warns(UserWarning):
        Catalog(np.array([1.0, 2.0]), 3.0)


def test_topology_ring_and_validation():
    ring = Topology.ring(5)
    assert ring.neighbors[2] == (1, 3)
    assert ring.neighbors[0] == (1, 4)
    assert Topology.isolated(3).neighbors[1] == ()
    assert Topology.ring(2).neighbors[0] == (1,)
    with pytest.raises(ValueError):
        Topology.from_edges(2, [(0, 0)])
    with pytest.raises(ValueError):
        Topology.from_edges(2, [(0, 5)])
    with pytest.raises(ValueError):
        Topology(2, ((1,), ()))  # asymmetric edge


def test_trace_accessors():
    demand = np.zeros((4, 2, 3))
    demand[3, 1] = [0.0, 2.0, 5.0]
    trace = make_trace(demand)
    assert np.array_equal(slot_demand(trace, 1, 3), [0.0, 2.0, 5.0])
    with pytest.raises(IndexError):
        slot_demand(trace, 1, 4)
    with pytest.raises(ValueError):
        DemandTrace(demand * -1.0, Topology.isolated(2))


def test_normalize_slot():
    assert np.allclose(normalize_slot(np.array([2.0, 6.0])), [0.25, 0.75])
    assert np.array_equal(normalize_slot(np.zeros(3)), np.zeros(3))


def test_csv_round_trip(tmp_path):
    cat = Catalog(np.array([10.0, 20.0]), 12.0)
    demand = np.zeros((2, 1, 2))
    demand[0, 0, 0] = 5.0
    trace = make_trace(demand)
    save_catalog(cat, tmp_path / "catalog.csv")
    save_trace(trace, tmp_path / "trace.csv")
    assert (tmp_path / "catalog.csv").read_text().splitlines()[:2] == [
        "file,size",
        "0,10",
    ]
    assert "0,0,0,5" in (tmp_path / "trace.csv").read_text()
    # n_slots pins the trailing all-zero slot the sparse format drops
    cat2, tr2 = load_trace(
        tmp_path / "catalog.csv", tmp_path / "trace.csv", 12.0, n_slots=2
    )
    assert np.array_equal(cat2.sizes, cat.sizes)
    assert np.array_equal(tr2.demand, trace.demand)


def test_load_trace_reports_bad_lines(tmp_path):
    (tmp_path / "catalog.csv").write_text("file,size\n0,10\n1,20\n")
    (tmp_path / "trace.csv").write_text("slot,sbs,file,demand\n0,0,0,5\n0,0,7,1\n")
    with pytest.raises(TraceFormatError, match=":3:"):
        load_trace(tmp_path / "catalog.csv", tmp_path / "trace.csv", 12.0)
    (tmp_path / "trace.csv").write_text("slot,sbs,file,demand\n0,0,0,-2\n")
    with pytest.raises(TraceFormatError, match=":2:"):
        load_trace(tmp_path / "catalog.csv", tmp_path / "trace.csv", 12.0)
    (tmp_path / "trace.csv").write_text("slot,sbs,file,demand\n0,0,x,1\n")
    with pytest.raises(TraceFormatError, match=":2:"):
        load_trace(tmp_path / "catalog.csv", tmp_path / "trace.csv", 12.0)


def test_load_catalog_rejects_bad_rows(tmp_path):
    (tmp_path / "catalog.csv").write_text("file,size\n0,10\n2,20\n")
    with pytest.raises(TraceFormatError):
        load_catalog(tmp_path / "catalog.csv", 12.0)


def _simple_synth(seed, **kw):
    sizes = np.full(kw.pop("n_files", 10), 10.0)
    catalog = Catalog(sizes, 0.3 * sizes.sum())
    topo = Topology.ring(kw.pop("n_sbs", 2))
    cfg = SyntheticConfig(
        zipf_exponent=kw.pop("zipf", 0.8),
        n_regimes=kw.pop("n_regimes", 1),
        regime_length=kw.pop("regime_length", 50),
        cross_sbs_mixing=kw.pop("mixing", 0.0),
        requests_per_slot=kw.pop("requests", 100),
        seed=seed,
    )
    return catalog, topo, cfg


def test_generate_synthetic_shape_and_mass():
    catalog, topo, cfg = _simple_synth(1)
    trace = generate_synthetic(catalog, topo, 8, cfg)
    assert trace.demand.shape == (8, 2, 10)
    # one multinomial draw per (slot, sBS): totals are exact
    assert np.all(trace.demand.sum(axis=2) == cfg.requests_per_slot)


def test_generate_synthetic_deterministic():
    catalog, topo, cfg = _simple_synth(3)
    a = generate_synthetic(catalog, topo, 6, cfg)
    b = generate_synthetic(catalog, topo, 6, cfg)
    assert np.array_equal(a.demand, b.demand)
    cfg2 = SyntheticConfig(
        zipf_exponent=cfg.zipf_exponent,
        n_regimes=cfg.n_regimes,
        regime_length=cfg.regime_length,
        cross_sbs_mixing=cfg.cross_sbs_mixing,
        requests_per_slot=cfg.requests_per_slot,
        seed=4,
    )
    c = generate_synthetic(catalog, topo, 6, cfg2)
    assert not np.array_equal(a.demand, c.demand)


def test_flat_popularity_matches_uniform_mean():
    # zipf exponent 0 is the uniform distribution; per-file empirical mean
    # over many slots must sit within 3 standard errors of requests/N
    catalog, topo, cfg = _simple_synth(7, zipf=0.0, n_sbs=1, requests=50)
    n_slots = 10_000
    trace = generate_synthetic(catalog, topo, n_slots, cfg)
    p = 1.0 / catalog.n_files
    expect = cfg.requests_per_slot * p
    stderr = np.sqrt(cfg.requests_per_slot * p * (1 - p) / n_slots)
    means = trace.demand[:, 0, :].mean(axis=0)
    assert np.all(np.abs(means - expect) <= 3 * stderr)


def test_full_mixing_shares_profile_across_sbs():
    catalog, topo, cfg = _simple_synth(11, mixing=1.0, requests=400)
    trace = generate_synthetic(catalog, topo, 500, cfg)
    totals = trace.demand.sum(axis=(0, 2))
    profiles = trace.demand.sum(axis=0) / totals[:, None]
    assert np.abs(profiles[0] - profiles[1]).max() < 0.02
    assert np.allclose(
        slot_pmf(catalog, topo, cfg, sbs=0, slot=0),
        slot_pmf(catalog, topo, cfg, sbs=1, slot=0),
    )


def test_slot_pmf_matches_empirical_profile():
    catalog, topo, cfg = _simple_synth(13, zipf=1.1, mixing=0.4, requests=200)
    trace = generate_synthetic(catalog, topo, 4000, cfg)
    pmf = slot_pmf(catalog, topo, cfg, sbs=1, slot=0)
    emp = trace.demand[:, 1, :].sum(axis=0)
    emp = emp / emp.sum()
    assert np.abs(emp - pmf).max() < 0.01


def test_regime_switch_changes_profile():
    catalog, topo, cfg = _simple_synth(5, zipf=1.2, n_regimes=2, regime_length=10)
    pmf_a = slot_pmf(catalog, topo, cfg, sbs=0, slot=9)
    pmf_b = slot_pmf(catalog, topo, cfg, sbs=0, slot=10)
    assert np.abs(pmf_a - pmf_b).max() > 0.01
    # same regime, same pmf
    assert np.allclose(slot_pmf(catalog, topo, cfg, sbs=0, slot=0), pmf_a)


def test_import_movielens_csv(tmp_path):
    lines = ["userId,movieId,rating,timestamp"]
    # movie 3 is requested most, then 1, then 2
    stamps = iter(range(100, 400, 7))
    for movie, count in [(3, 18), (1, 12), (2, 6)]:
        for _ in range(count):
            lines.append(f"{movie % 4},{movie},4.0,{next(stamps)}")
    path = tmp_path / "ratings.csv"
    path.write_text("\n".join(lines) + "\n")

    catalog, trace = import_movielens(
        path, n_files=2, n_slots=4, topology=Topology.ring(2), seed=9
    )
    assert catalog.n_files == 2
    assert trace.demand.shape == (4, 2, 2)
    # only the top-2 movies survive; file 0 is the most-requested one
    assert trace.demand[:, :, 0].sum() == 18
    assert trace.demand[:, :, 1].sum() == 12
    # equal-count slotting: each slot carries ~1/4 of the kept ratings
    per_slot = trace.demand.sum(axis=(1, 2))
    assert per_slot.sum() == 30
    assert per_slot.max() - per_slot.min() <= 2


def test_import_movielens_dat(tmp_path):
    path = tmp_path / "ratings.dat"
    rows = [f"{u}::{m}::5::{1000 + i}" for i, (u, m) in enumerate([(1, 7)] * 5 + [(2, 9)] * 3)]
    path.write_text("\n".join(rows) + "\n")
    catalog, trace = import_movielens(
        path, n_files=2, n_slots=2, topology=Topology.isolated(1), seed=0
    )
    assert trace.demand[:, :, 0].sum() == 5
    assert trace.demand[:, :, 1].sum() == 3
