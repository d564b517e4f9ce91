"""Experiment orchestration.

One run walks the whole slicing lifecycle: request generation by the MNOs,
admission/allocation/enforcement at the infrastructure provider, then a
window of TTI scheduling inside every granted slice. A sweep repeats that
over strategies, MNO counts and seeds and writes plot-ready CSVs.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .metrics import FULL_SCOPE_CLUSTER, aggregate_runs, shared_rb_stats
from .middleware import (
    Admitted,
    Notification,
    Outbox,
    Rejected,
    RequestBuffers,
    SliceRequest,
    collect_requests,
    notify,
    snapshot_dvi,
    submit_request,
)
from .mno_agent import (
    RB_BANDWIDTH_HZ,
    Directive,
    MnoAgent,
    MnoProfile,
    draw_mus,
    run_best_response_dynamics,
    window_throughput,
)
from .scm import (
    EnforcementStrategy,
    RBGrid,
    SlicePolicy,
    UNALLOCATED,
    admission_control,
    allocate_slices,
    enforce_slicing,
)
from .topology import Topology, build_interference_graph, load_topology, synthetic_topology

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

log = logging.getLogger(__name__)

RAW_COLUMNS = (
    "strategy", "mno_count", "run", "seed", "full_pct", "partial_pct",
    "mean_congestion", "admitted", "throughput",
)
AGGREGATE_COLUMNS = (
    "strategy", "mno_count", "n", "mean_partial", "ci_partial", "mean_full", "ci_full",
)
DEFAULT_STRATEGIES = ("coordination", "greedy", "fcfs")

_MASK64 = (1 << 64) - 1


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def derive_seed(base_seed, mno_count, run_index):
    """64-bit seed for one (mno_count, run) cell; shared by every strategy."""
    x = splitmix64(base_seed & _MASK64)
    x = splitmix64(x ^ (mno_count & _MASK64))
    return splitmix64(x ^ (run_index & _MASK64))


@dataclass(frozen=True)
class SyntheticTopology:
    num_bs: int = 8
    num_rbs: int = 50
    seed: int = 5
    layout: str = "uniform"
    extent_km: float = 3.0
    price_range: tuple[float, float] = (1.0, 2.0)


@dataclass(frozen=True)
class ScenarioConfig:
    topology_path: str | None = None
    synthetic: SyntheticTopology = field(default_factory=SyntheticTopology)
    threshold_km: float = 1.0
    # demand_range is per MNO when num_mnos MNOs share the network; other
    # MNO counts scale it by num_mnos / mno_count so offered load is constant
    num_mnos: int = 8
    demand_range: tuple[int, int] = (40, 50)
    lambda_congestion: float = 5.0
    budget_per_rb: float = 10.0
    prices: tuple[float, ...] | None = None
    # redraw every BS price per run from synthetic.price_range
    redraw_prices: bool = True
    num_runs: int = 200
    base_seed: int = 2019
    strategies: tuple[str, ...] = DEFAULT_STRATEGIES
    mno_counts: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    slicing_window_ttis: int = 100
    directive: str = "RoundRobin"
    confidence: float = 0.95
    mus_per_mno: tuple[int, int] = (5, 20)
    num_classes: int = 1
    max_rounds: int = 100
    rb_bandwidth_hz: float = RB_BANDWIDTH_HZ
    full_scope: str = FULL_SCOPE_CLUSTER
    require_edge: bool = True
    workers: int = 1

    def __post_init__(self):
        for name in ("demand_range", "mus_per_mno", "strategies", "mno_counts"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.prices is not None:
            object.__setattr__(self, "prices", tuple(float(p) for p in self.prices))
        if isinstance(self.synthetic, dict):
            syn = dict(self.synthetic)
            if "price_range" in syn:
                syn["price_range"] = tuple(syn["price_range"])
            object.__setattr__(self, "synthetic", SyntheticTopology(**syn))

    def validate(self, topology=None):
        if self.num_runs < 1:
            raise ConfigError("num_runs must be >= 1")
        if not self.mno_counts or any(m < 1 for m in self.mno_counts):
            raise ConfigError("mno_counts must be non-empty and >= 1")
        if self.num_mnos < 1:
            raise ConfigError("num_mnos must be >= 1")
        lo, hi = self.demand_range
        if not 1 <= lo <= hi:
            raise ConfigError("demand_range must satisfy 1 <= min <= max")
        if not self.threshold_km > 0:
            raise ConfigError("threshold_km must be > 0")
        if not 0 < self.confidence < 1:
            raise ConfigError("confidence must lie in (0, 1)")
        if self.slicing_window_ttis < 0:
            raise ConfigError("slicing_window_ttis must be >= 0")
        for s in self.strategies:
            try:
                EnforcementStrategy.parse(s)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        try:
            Directive.parse(self.directive)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if topology is not None:
            total = sum(s.num_rbs for s in topology)
            if hi > total / self.num_mnos:
                raise ConfigError(
                    f"demand max {hi} exceeds capacity share {total / self.num_mnos:.2f}"
                )
            if self.prices is not None and len(self.prices) != len(topology):
                raise ConfigError("prices must list one value per BS")
        return self

    def demand_bounds(self, mno_count):
        lo, hi = self.demand_range
        hi_m = hi * self.num_mnos // mno_count
        lo_m = min(lo * self.num_mnos // mno_count, hi_m)
        return max(1, lo_m), max(1, hi_m)

    def with_overrides(self, **kw):
        return dataclasses.replace(self, **{k: v for k, v in kw.items() if v is not None})


def load_config(path):
    data = tomllib.loads(Path(path).read_text(encoding="utf-8"))
    data = dict(data.get("scenario", data))
    topo = data.pop("topology", None)
    kwargs = {}
    if isinstance(topo, str):
        kwargs["topology_path"] = topo
    elif isinstance(topo, dict):
        topo = dict(topo)
        if "path" in topo:
            p = Path(topo.pop("path"))
            if not p.is_absolute():
                p = Path(path).parent / p
            kwargs["topology_path"] = str(p)
        if topo:
            kwargs["synthetic"] = topo
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs.update(data)
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def config_topology(config):
    if config.topology_path:
        topo = load_topology(config.topology_path)
    else:
        s = config.synthetic
        topo = synthetic_topology(
            num_bs=s.num_bs, num_rbs=s.num_rbs, seed=s.seed, layout=s.layout,
            extent_km=s.extent_km, price_range=s.price_range,
        )
    if config.prices is not None:
        topo = Topology(
            tuple(dataclasses.replace(st, price_per_rb=p) for st, p in zip(topo.stations, config.prices))
        )
    return topo


@dataclass
class Scenario:
    """Everything upstream of enforcement for one (mno_count, run) draw."""

    seed: int
    topology: object
    graph: object
    profiles: list
    requests: list  # in submission order
    admitted: list
    rejections: list
    policy: SlicePolicy
    request_order: list
    dynamics_converged: bool


def _bbox(topology):
    lats = [s.latitude for s in topology]
    lons = [s.longitude for s in topology]
    return min(lats), max(lats), min(lons), max(lons)


def prepare_scenario(config, mno_count, run_index, topology=None, graph=None):
    seed = derive_seed(config.base_seed, mno_count, run_index)
    rng = np.random.default_rng(seed)
    topology = topology or config_topology(config)
    graph = graph or build_interference_graph(topology, config.threshold_km)
    if config.redraw_prices:
        lo_p, hi_p = config.synthetic.price_range
        drawn = rng.uniform(lo_p, hi_p, size=len(topology))
        topology = Topology(
            tuple(
                dataclasses.replace(st, price_per_rb=round(float(p), 6))
                for st, p in zip(topology.stations, drawn)
            )
        )
    caps, prices = topology.capacities, topology.prices

    lo, hi = config.demand_bounds(mno_count)
    demands = rng.integers(lo, hi + 1, size=mno_count)
    submit_order = rng.permutation(mno_count)
    classes = rng.integers(0, max(1, config.num_classes), size=mno_count)
    bbox = _bbox(topology)
    profiles, first = [], 1
    for k in range(mno_count):
        n_mus = int(rng.integers(config.mus_per_mno[0], config.mus_per_mno[1] + 1))
        mus = draw_mus(rng, n_mus, bbox, first_id=first)
        first += n_mus
        profiles.append(
            MnoProfile(
                mno_id=k + 1,
                demand_rbs=int(demands[k]),
                lambda_congestion=config.lambda_congestion,
                max_price=float(demands[k]) * config.budget_per_rb,
                mus=mus,
                class_id=int(classes[k]),
            )
        )

    dyn = run_best_response_dynamics(profiles, prices, caps, config.max_rounds)
    if not dyn.converged:
        log.warning("best-response dynamics did not converge (seed %d)", seed)

    buffers = RequestBuffers()
    requests = []
    for ts, k in enumerate(submit_order, start=1):
        p = profiles[k]
        req = SliceRequest(p.mno_id, p.class_id, ts, dict(dyn.requests[p.mno_id]), p.max_price)
        submit_request(buffers, req)
        requests.append(req)
    collected = collect_requests(buffers)
    admitted, rejections = admission_control(collected, caps, prices)
    policy = allocate_slices(admitted, caps)
    request_order = [r.mno_id for r in sorted(admitted, key=lambda r: r.timestamp)]
    return Scenario(
        seed, topology, graph, profiles, requests, admitted, rejections, policy,
        request_order, dyn.converged,
    )


@dataclass(frozen=True)
class RunResult:
    strategy: str
    mno_count: int
    run: int
    seed: int
    full_pct: float
    partial_pct: float
    mean_congestion: float
    admitted: int
    throughput: float  # aggregate MNO rate, Mbit/s

    def row(self):
        return [
            self.strategy, self.mno_count, self.run, self.seed,
            f"{self.full_pct:.6f}", f"{self.partial_pct:.6f}",
            f"{self.mean_congestion:.6f}", self.admitted, f"{self.throughput:.6f}",
        ]


def run_single(config, strategy, mno_count, run_index, scenario=None):
    strategy = EnforcementStrategy.parse(strategy)
    sc = scenario or prepare_scenario(config, mno_count, run_index)
    topo, graph = sc.topology, sc.graph
    caps = topo.capacities

    if sc.admitted:
        grid = enforce_slicing(
            sc.policy, graph, strategy, sc.request_order, capacities=caps
        )
    else:
        width = max(caps.values())
        grid = RBGrid(
            graph.bs_ids, tuple(caps[b] for b in graph.bs_ids),
            np.full((graph.n, width), UNALLOCATED, dtype=np.int64),
        )

    outbox = Outbox()
    admitted_ids = {r.mno_id for r in sc.admitted}
    for req, reason in sc.rejections:
        notify(outbox, Notification(req.mno_id, Rejected(reason)))
    for req in sc.admitted:
        granted = {b: sc.policy.granted(b, req.mno_id) for b in req.demanded}
        granted = {b: c for b, c in granted.items() if c > 0}
        price = sum(c * topo.prices[b] for b, c in granted.items())
        notify(outbox, Notification(req.mno_id, Admitted(granted, price)))

    directive = Directive.parse(config.directive)
    throughput = 0.0
    for p in sc.profiles:
        agent = MnoAgent(p)
        for n in outbox.drain(p.mno_id):
            agent.receive(n, grid if n.admitted else None)
        if p.mno_id in admitted_ids and agent.pool.rb_indices:
            rates = window_throughput(
                agent.pool, p.mus, directive, 0, config.slicing_window_ttis,
                config.rb_bandwidth_hz,
            )
            throughput += sum(rates.values())

    dvi = snapshot_dvi(topo, grid)
    congestion = float(np.mean([r.congestion for r in dvi.records]))
    if sc.admitted:
        st = shared_rb_stats(grid, graph, config.full_scope, config.require_edge)
        full, partial = st.full_pct, st.partial_pct
    else:
        full = partial = 0.0
    return RunResult(
        strategy=strategy.value,
        mno_count=mno_count,
        run=run_index,
        seed=sc.seed,
        full_pct=full,
        partial_pct=partial,
        mean_congestion=congestion,
        admitted=len(sc.admitted),
        throughput=throughput / 1e6,
    )


def _cell(args):
    config, mno_count, run_index = args
    topo = config_topology(config)
    graph = build_interference_graph(topo, config.threshold_km)
    sc = prepare_scenario(config, mno_count, run_index, topo, graph)
    return [run_single(config, s, mno_count, run_index, sc) for s in config.strategies]


def sweep(config, progress=None):
    """All RunResults of the sweep, sorted by (strategy, mno_count, run)."""
    topo = config_topology(config)
    config.validate(topo)
    graph = build_interference_graph(topo, config.threshold_km)
    tasks = [(m, r) for m in config.mno_counts for r in range(config.num_runs)]
    results = []
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            for out in pool.map(_cell, [(config, m, r) for m, r in tasks], chunksize=8):
                results.extend(out)
    else:
        for m, r in tasks:
            sc = prepare_scenario(config, m, r, topo, graph)
            results.extend(run_single(config, s, m, r, sc) for s in config.strategies)
            if progress:
                progress(m, r)
    results.sort(key=lambda x: (x.strategy, x.mno_count, x.run))
    return results


@dataclass(frozen=True)
class AggregateRow:
    strategy: str
    mno_count: int
    n: int
    mean_partial: float
    ci_partial: float
    mean_full: float
    ci_full: float

    def row(self):
        return [
            self.strategy, self.mno_count, self.n,
            f"{self.mean_partial:.6f}", f"{self.ci_partial:.6f}",
            f"{self.mean_full:.6f}", f"{self.ci_full:.6f}",
        ]


def aggregate(results, confidence=0.95):
    cells = {}
    for r in results:
        cells.setdefault((r.strategy, r.mno_count), []).append(r)
    out = []
    for (s, m), rows in sorted(cells.items()):
        part = aggregate_runs([r.partial_pct for r in rows], confidence)
        full = aggregate_runs([r.full_pct for r in rows], confidence)
        out.append(AggregateRow(s, m, len(rows), part.mean, part.ci_halfwidth, full.mean, full.ci_halfwidth))
    return out


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def run_experiment(config, out_path, progress=None):
    """Write ``raw.csv`` and ``aggregate.csv`` into ``out_path``; return both paths."""
    out = Path(out_path)
    out.mkdir(parents=True, exist_ok=True)
    results = sweep(config, progress)
    agg = aggregate(results, config.confidence)
    raw_path, agg_path = out / "raw.csv", out / "aggregate.csv"
    _write_csv(raw_path, RAW_COLUMNS, (r.row() for r in results))
    _write_csv(agg_path, AGGREGATE_COLUMNS, (a.row() for a in agg))
    return raw_path, agg_path


def read_aggregate(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [
        AggregateRow(
            r["strategy"], int(r["mno_count"]), int(r["n"]),
            float(r["mean_partial"]), float(r["ci_partial"]),
            float(r["mean_full"]), float(r["ci_full"]),
        )
        for r in rows
    ]


def trend_violations(agg_rows, strategy, key="partial"):
    """Pairs of consecutive MNO counts where the mean rises by more than one CI half-width."""
    rows = sorted((a for a in agg_rows if a.strategy == strategy), key=lambda a: a.mno_count)
    bad = []
    for a, b in zip(rows, rows[1:]):
        ma, mb = getattr(a, f"mean_{key}"), getattr(b, f"mean_{key}")
        ci = max(getattr(a, f"ci_{key}"), getattr(b, f"ci_{key}"))
        if mb > ma + ci:
            bad.append((a.mno_count, b.mno_count, ma, mb))
    return bad
