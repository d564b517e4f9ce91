import csv
import dataclasses

import pytest

from ranslice.errors import ConfigError
from ranslice.harness import (
    AGGREGATE_COLUMNS,
    RAW_COLUMNS,
    ScenarioConfig,
    derive_seed,
    load_config,
    prepare_scenario,
    read_aggregate,
    run_experiment,
    run_single,
    sweep,
    trend_violations,
)
from ranslice.scm import EnforcementStrategy

SMALL = ScenarioConfig(num_runs=3, mno_counts=(2, 4), slicing_window_ttis=10)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_seed_derivation():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(1, m, r) for m in range(1, 9) for r in range(50)}
    assert len(seeds) == 400
    assert all(0 <= s < 2**64 for s in seeds)


def test_demand_bounds_scale_with_mno_count():
    cfg = ScenarioConfig(num_mnos=8, demand_range=(40, 50))
    assert cfg.demand_bounds(8) == (40, 50)
    assert cfg.demand_bounds(2) == (160, 200)


def test_single_mno_fully_coordinated():
    cfg = ScenarioConfig(num_mnos=1, demand_range=(400, 400), threshold_km=100.0, num_runs=1)
    for s in EnforcementStrategy:
        r = run_single(cfg, s, 1, 0)
        assert (r.full_pct, r.partial_pct) == (100.0, 100.0)
        assert r.admitted == 1


def test_run_single_deterministic():
    a = run_single(SMALL, "coordination", 3, 5)
    b = run_single(SMALL, "coordination", 3, 5)
    assert a == b


@pytest.mark.parametrize("run", range(10))
def test_coordination_dominates_greedy_per_seed(run):
    cfg = ScenarioConfig()
    sc = prepare_scenario(cfg, 2, run)
    ca = run_single(cfg, "coordination", 2, run, sc)
    gr = run_single(cfg, "greedy", 2, run, sc)
    fc = run_single(cfg, "fcfs", 2, run, sc)
    assert ca.partial_pct >= max(gr.partial_pct, fc.partial_pct)


def test_common_random_numbers():
    results = sweep(SMALL)
    cells = {}
    for r in results:
        cells.setdefault((r.mno_count, r.run), []).append(r)
    for rows in cells.values():
        assert len({(r.seed, r.admitted, r.throughput, r.mean_congestion) for r in rows}) == 1


def test_all_rejected_yields_zero_metrics():
    cfg = dataclasses.replace(SMALL, budget_per_rb=0.0)
    r = run_single(cfg, "coordination", 2, 0)
    assert (r.admitted, r.full_pct, r.partial_pct, r.throughput) == (0, 0.0, 0.0, 0.0)


def test_throughput_positive():
    r = run_single(SMALL, "fcfs", 2, 0)
    # at most every RB at max efficiency, at least every RB at min efficiency
    rbs = r.mean_congestion * 8 * 50
    assert rbs * 0.5 * 0.18 - 1e-6 <= r.throughput <= rbs * 6.0 * 0.18 + 1e-6


def test_run_experiment_files(tmp_path):
    raw, agg = run_experiment(SMALL, tmp_path / "a")
    rows = read_rows(raw)
    assert tuple(rows[0]) == RAW_COLUMNS
    assert len(rows) == 3 * 2 * 3
    keys = [(r["strategy"], int(r["mno_count"]), int(r["run"])) for r in rows]
    assert keys == sorted(keys)
    agg_rows = read_rows(agg)
    assert tuple(agg_rows[0]) == AGGREGATE_COLUMNS
    assert len(agg_rows) == 6
    for a in agg_rows:
        vals = [float(r["partial_pct"]) for r in rows
                if r["strategy"] == a["strategy"] and r["mno_count"] == a["mno_count"]]
        assert float(a["mean_partial"]) == pytest.approx(sum(vals) / len(vals), abs=1e-6)
        assert int(a["n"]) == 3
    raw2, agg2 = run_experiment(SMALL, tmp_path / "b")
    assert raw.read_bytes() == raw2.read_bytes()
    assert agg.read_bytes() == agg2.read_bytes()


def test_single_run_zero_halfwidth(tmp_path):
    cfg = dataclasses.replace(SMALL, num_runs=1)
    _, agg = run_experiment(cfg, tmp_path)
    assert all(a.ci_partial == 0.0 and a.ci_full == 0.0 for a in read_aggregate(agg))


def test_parallel_matches_serial():
    par = dataclasses.replace(SMALL, workers=2)
    assert sweep(par) == sweep(SMALL)


def test_load_config(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text(
        "base_seed = 9\nnum_runs = 4\nmno_counts = [2, 3]\nstrategies = ['fcfs']\n"
        "[topology]\nnum_bs = 5\nseed = 2\nprice_range = [1.0, 3.0]\n"
    )
    cfg = load_config(p)
    assert cfg.base_seed == 9 and cfg.mno_counts == (2, 3) and cfg.strategies == ("fcfs",)
    assert cfg.synthetic.num_bs == 5 and cfg.synthetic.price_range == (1.0, 3.0)


def test_load_config_topology_path(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[topology]\npath = "cells.csv"\n')
    assert load_config(p).topology_path == str(tmp_path / "cells.csv")


def test_load_config_unknown_key(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        load_config(p)


@pytest.mark.parametrize(
    "kw",
    [dict(num_runs=0), dict(mno_counts=(0,)), dict(demand_range=(60, 70)), dict(strategies=("x",))],
)
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        sweep(dataclasses.replace(SMALL, **kw))


def test_trend_violations_helper():
    from ranslice.harness import AggregateRow

    rows = [
        AggregateRow("s", 2, 10, 50.0, 1.0, 0, 0),
        AggregateRow("s", 3, 10, 50.5, 1.0, 0, 0),
        AggregateRow("s", 4, 10, 60.0, 1.0, 0, 0),
    ]
    assert trend_violations(rows, "s") == [(3, 4, 50.5, 60.0)]


def test_shipped_config_matches_defaults():
    from pathlib import Path

    path = Path(__file__).resolve().parent.parent / "configs" / "default.toml"
    assert load_config(path) == ScenarioConfig()
