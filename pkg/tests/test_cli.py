import json
import re

import numpy as np
import pytest

from codedcache import load_trace, per_slot_optimal, read_catalog_sizes
from codedcache.cli import main
from codedcache.validate import check_knapsack_oracle


SMALL = {
    "seed": 3,
    "catalog": {"n_files": 8, "size_min": 5, "size_max": 20},
    "topology": {"kind": "ring", "n_sbs": 2},
    "trace": {
        "n_slots": 30,
        "zipf_exponent": 0.8,
        "n_regimes": 2,
        "regime_length": 15,
        "cross_sbs_mixing": 0.3,
        "requests_per_slot": 200,
    },
    "sim": {"window": 4, "recent_window": 2, "past_window": 2},
    "optimizer": {"max_iters": 15},
    "policies": ["proposed", "lrfu"],
    "cache_fracs": [0.2, 0.4],
}


def write_cfg(tmp_path, extra=None):
    cfg = json.loads(json.dumps(SMALL))
    if extra:
        cfg.update(extra)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return path


def test_generate_round_trip(tmp_path):
    cfg = write_cfg(tmp_path)
    out = tmp_path / "gen"
    assert main(["generate", "--config", str(cfg), "--out", str(out)]) == 0
    sizes = read_catalog_sizes(out / "catalog.csv")
    assert sizes.shape == (8,)
    _, trace = load_trace(
        out / "catalog.csv", out / "trace.csv", 0.3 * sizes.sum(), n_slots=30
    )
    assert trace.n_slots == 30 and trace.n_sbs == 2
    assert (out / "effective_config.json").exists()


def test_generate_deterministic(tmp_path):
    cfg = write_cfg(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    main(["generate", "--config", str(cfg), "--out", str(a)])
    main(["generate", "--config", str(cfg), "--out", str(b)])
    for name in ("catalog.csv", "trace.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    c = tmp_path / "c"
    main(["generate", "--config", str(cfg), "--out", str(c), "--seed", "4"])
    assert (a / "trace.csv").read_bytes() != (c / "trace.csv").read_bytes()


def test_run_outputs_and_config_round_trip(tmp_path):
    cfg = write_cfg(tmp_path)
    out1 = tmp_path / "r1"
    assert main(["run", "--config", str(cfg), "--out", str(out1)]) == 0
    for name in (
        "metrics.csv",
        "comparison.csv",
        "hit_vs_cache_sbs0.svg",
        "hit_vs_cache_sbs1.svg",
        "hit_vs_cache_sum.svg",
        "log_ratio.svg",
        "effective_config.json",
    ):
        assert (out1 / name).exists(), name
    header = (out1 / "metrics.csv").read_text().splitlines()[0]
    assert header.startswith("slot,sbs,policy,cache_frac,hit")

    # rerunning from the dumped effective config reproduces the outputs
    out2 = tmp_path / "r2"
    eff = out1 / "effective_config.json"
    assert main(["run", "--config", str(eff), "--out", str(out2)]) == 0
    for name in ("metrics.csv", "comparison.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_threads_match(tmp_path):
    cfg = write_cfg(tmp_path)
    out1, out4 = tmp_path / "t1", tmp_path / "t4"
    main(["run", "--config", str(cfg), "--out", str(out1), "--threads", "1"])
    main(["run", "--config", str(cfg), "--out", str(out4), "--threads", "4"])
    assert (out1 / "metrics.csv").read_bytes() == (out4 / "metrics.csv").read_bytes()


def test_run_rejects_unknown_policy(tmp_path, capsys):
    cfg = write_cfg(tmp_path)
    code = main(
        ["run", "--config", str(cfg), "--out", str(tmp_path / "x"),
         "--policies", "proposed,lru"]
    )
    assert code == 2
    assert "unknown policy" in capsys.readouterr().err


def test_lambda_sweep_rows_per_cache_point(tmp_path):
    cfg = write_cfg(tmp_path, {"policies": ["federated"]})
    out = tmp_path / "sweep"
    code = main(
        ["run", "--config", str(cfg), "--out", str(out),
         "--lambda-sweep", "0.5,1,2,4,8"]
    )
    assert code == 0
    lines = (out / "lambda_sweep.csv").read_text().splitlines()
    assert lines[0] == "cache_frac,lambda,avg_hit"
    assert len(lines) == 1 + 5 * len(SMALL["cache_fracs"])
    fracs = [line.split(",")[0] for line in lines[1:]]
    assert all(fracs.count(f) == 5 for f in set(fracs))
    assert (out / "lambda_sweep.svg").exists()


def test_validate_passes(tmp_path, capsys):
    assert main(["validate", "--seed", "0"]) == 0
    text = capsys.readouterr().out
    assert text.count("[PASS]") == 5
    assert "[FAIL]" not in text
    assert "5/5 checks passed" in text


def test_validate_exit_nonzero_on_failure(monkeypatch, capsys):
    from codedcache.validate import CheckResult

    def fake(seed):
        return [CheckResult("knapsack-oracle", False, "injected")]

    monkeypatch.setattr("codedcache.cli.run_all_checks", fake)
    assert main(["validate"]) == 1
    assert "[FAIL]" in capsys.readouterr().out


def test_knapsack_check_flags_injected_perturbation():
    # a solver that caches only half of the optimal placement must be caught
    def crippled(demand, catalog):
        return per_slot_optimal(demand, catalog).fractions * 0.5

    res = check_knapsack_oracle(seed=1, n_instances=20, solver=crippled)
    assert not res.passed
    m = re.search(r"worst gap beyond slack (\S+),", res.detail)
    assert m and float(m.group(1)) > 0.0
    assert res.line().startswith("[FAIL] knapsack-oracle")


def test_import_movielens_cli(tmp_path):
    lines = ["userId,movieId,rating,timestamp"]
    rng = np.random.default_rng(0)
    for u in range(30):
        movie = int(rng.integers(1, 4))
        lines.append(f"{u},{movie},4.0,{800000000 + u * 1000}")
    ratings = tmp_path / "ratings.csv"
    ratings.write_text("\n".join(lines) + "\n")
    out = tmp_path / "ml"
    code = main(
        ["import-movielens", "--ratings", str(ratings), "--out", str(out),
         "--n-files", "3", "--n-slots", "4", "--n-sbs", "2"]
    )
    assert code == 0
    sizes = read_catalog_sizes(out / "catalog.csv")
    assert sizes.shape == (3,)
    _, trace = load_trace(
        out / "catalog.csv", out / "trace.csv", 0.3 * sizes.sum(), n_slots=4
    )
    assert trace.n_slots == 4 and trace.n_sbs == 2
    assert trace.demand.sum() == 30


def test_main_requires_subcommand(capsys):
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 2
