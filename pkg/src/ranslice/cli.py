"""Command line entry point: ``ranslice <subcommand>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import RansliceError
from .harness import load_config, ScenarioConfig, run_experiment
from .metrics import shared_rb_stats
from .middleware import load_request_batch, RequestBuffers
from .scm import (
    EnforcementStrategy,
    admission_control,
    allocate_slices,
    enforce_slicing,
    load_policy,
    oracle_enforce,
)
from .topology import (
    DEFAULT_THRESHOLD_KM,
    build_interference_graph,
    load_topology,
    synthetic_topology,
    write_topology,
)


def _emit(text, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_simulate(args):
    config = load_config(args.config) if args.config else ScenarioConfig()
    config = config.with_overrides(base_seed=args.seed, num_runs=args.runs, workers=args.workers)
    raw, agg = run_experiment(config, args.out)
    print(f"wrote {raw}")
    print(f"wrote {agg}")
    return 0


def _policy_and_order(args, topo):
    caps = topo.capacities
    order = None
    if args.requests:
        buffers = RequestBuffers()
        for req in load_request_batch(args.requests):
            buffers.submit(req)
        admitted, rejected = admission_control(buffers.collect(), caps, topo.prices)
        for req, reason in rejected:
            print(f"rejected MNO {req.mno_id}: {reason}", file=sys.stderr)
        order = [r.mno_id for r in sorted(admitted, key=lambda r: r.timestamp)]
        policy = allocate_slices(admitted, caps)
    if args.policy:
        policy = load_policy(args.policy)
    if args.order:
        order = [int(x) for x in args.order.split(",") if x.strip()]
    return policy, order


def cmd_enforce(args):
    topo = load_topology(args.topology)
    graph = build_interference_graph(topo, args.threshold_km)
    policy, order = _policy_and_order(args, topo)
    grid = enforce_slicing(policy, graph, args.strategy, order, capacities=topo.capacities)
    _emit(grid.to_csv(), args.out)
    st = shared_rb_stats(grid, graph)
    print(
        f"strategy={EnforcementStrategy.parse(args.strategy).value} "
        f"partial={st.partial_pct:.2f}% full={st.full_pct:.2f}%",
        file=sys.stderr,
    )
    return 0


def cmd_oracle(args):
    topo = load_topology(args.topology)
    graph = build_interference_graph(topo, args.threshold_km)
    policy, _ = _policy_and_order(args, topo)
    grid, best = oracle_enforce(policy, graph, capacities=topo.capacities)
    _emit(grid.to_csv(), args.out)
    print(f"optimal_shared={best}", file=sys.stderr)
    return 0


def cmd_topology_validate(args):
    topo = load_topology(args.csv)
    graph = build_interference_graph(topo, args.threshold_km)
    print(
        f"ok: {len(topo)} base stations, {sum(topo.capacities.values())} RBs, "
        f"{graph.num_edges()} interference edges at {args.threshold_km} km"
    )
    return 0


def cmd_topology_generate(args):
    topo = synthetic_topology(
        num_bs=args.num_bs, num_rbs=args.num_rbs, seed=args.seed if args.seed is not None else 5,
        layout=args.layout, extent_km=args.extent_km,
    )
    write_topology(topo, args.out)
    print(f"wrote {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="ranslice", description="RAN slicing simulator")
    p.add_argument("--seed", type=int, default=None, help="base seed (overrides config)")
    p.add_argument("--runs", type=int, default=None, help="runs per cell (overrides config)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run the strategy x MNO-count sweep")
    s.add_argument("--config", help="TOML scenario file (defaults used if omitted)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_simulate)

    def slicing_inputs(sp):
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--policy", help="JSON {bs_id: {mno_id: count}}")
        src.add_argument("--requests", help="JSON array of slice requests")
        sp.add_argument("--topology", required=True, help="topology CSV")
        sp.add_argument("--threshold-km", type=float, default=DEFAULT_THRESHOLD_KM)
        sp.add_argument("--out", help="write grid CSV here instead of stdout")

    e = sub.add_parser("enforce", help="place a policy on the RB grid")
    slicing_inputs(e)
    e.add_argument("--strategy", default="coordination", help="fcfs | greedy | coordination")
    e.add_argument("--order", help="comma-separated mno_ids in submission order")
    e.set_defaults(func=cmd_enforce)

    o = sub.add_parser("oracle", help="exhaustive optimum for a small policy")
    slicing_inputs(o)
    o.set_defaults(func=cmd_oracle, order=None)

    t = sub.add_parser("topology", help="topology utilities")
    tsub = t.add_subparsers(dest="topology_command", required=True)
    v = tsub.add_parser("validate", help="check a topology CSV")
    v.add_argument("csv")
    v.add_argument("--threshold-km", type=float, default=DEFAULT_THRESHOLD_KM)
    v.set_defaults(func=cmd_topology_validate)
    g = tsub.add_parser("generate", help="write a synthetic topology CSV")
    g.add_argument("--out", required=True)
    g.add_argument("--num-bs", type=int, default=8)
    g.add_argument("--num-rbs", type=int, default=50)
    g.add_argument("--extent-km", type=float, default=3.0)
    g.add_argument("--layout", choices=("uniform", "grid"), default="uniform")
    g.set_defaults(func=cmd_topology_generate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (RansliceError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
