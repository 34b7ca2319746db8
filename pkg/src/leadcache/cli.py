"""Command-line interface.

Subcommands: gen-net, gen-trace, simulate, lp, round, oracle, bounds,
experiment. File formats: networks are JSON {n, m, edges}; traces are CSV
(raw `seq,file_id[,size]` or assigned `t,user_id,file_id`); weights are CSV
`user_id,file_id,weight`; fractional allocations are CSV
`kind,entity_id,file_id,value` (kind y: entity is a cache, kind z: a user;
slack mass is reconstructed on load); placements are CSV `cache_id,file_id`;
per-slot metrics are CSV `t,policy,hits,fetches,cum_hits,cum_fetches`.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigurationError
from .harness import (
    ExperimentConfig,
    hindsight_benchmark,
    run_cell,
    run_experiment,
    write_metrics_csv,
)
from .lp import FractionalAllocation, build_lp, solve_lp
from .model import BipartiteNetwork, build_random_network
from .bounds import bound_report
from .reward import fetch_rate, hit_rate
from .rounding import (
    SurrogateEvaluator,
    exact_ilp,
    madow_round,
    pipage_round,
    replacement_round,
)
from .traces import gen_adversarial_uniform, gen_renewal, gen_zipf, load_trace, save_trace


def _read_weights(path) -> dict:
    weights = {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1:
                try:
                    int(row[0])
                except ValueError:
                    continue
            i, f, w = int(row[0]), int(row[1]), float(row[2])
            weights[(i, f)] = w
    return weights


def _load_alloc(path, net, capacity: int) -> FractionalAllocation:
    """Rebuild an allocation from its CSV; slack mass is re-padded to C."""
    y_rows, z_rows = {}, {}
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[0] not in ("y", "z"):
                continue
            kind, ent, fid, val = row[0], int(row[1]), int(row[2]), float(row[3])
            (y_rows if kind == "y" else z_rows)[(ent, fid)] = val
    files = tuple(sorted({f for _, f in y_rows} | {f for _, f in z_rows}))
    s = len(files)
    col = {f: k for k, f in enumerate(files)}
    y = np.zeros((net.m, s + capacity))
    for (j, f), v in y_rows.items():
        y[j, col[f]] = v
    for j in range(net.m):
        deficit = max(0.0, capacity - y[j, :s].sum())
        y[j, s:] = min(1.0, deficit / capacity)
        short = capacity - y[j].sum()
        if abs(short) > 1e-12:
            y[j, s:] = np.clip(y[j, s:] + short / capacity, 0.0, 1.0)
    z = np.zeros((net.n, s))
    for (i, f), v in z_rows.items():
        z[i, col[f]] = v
    return FractionalAllocation(
        files=files, y=y, z=z, objective=0.0, capacity=capacity, n_slack=capacity
    )


# ---------- subcommands ----------


def cmd_gen_net(args) -> int:
    net = build_random_network(args.users, args.caches, args.degree, args.seed)
    net.save(args.out)
    print(f"wrote {args.out} (n={net.n} m={net.m} d={net.d} delta={net.delta})")
    return 0


def cmd_gen_trace(args) -> int:
    if args.kind == "zipf":
        trace = gen_zipf(args.catalog, args.alpha, args.users, args.horizon, args.seed)
    elif args.kind == "renewal":
        if not args.rates:
            raise ConfigurationError("renewal traces need --rates CSV")
        pairs = _read_weights(args.rates)
        rates = np.zeros((args.users, args.catalog))
        for (i, f), w in pairs.items():
            rates[i, f] = w
        trace = gen_renewal(
            args.catalog, args.users, args.horizon, "geometric",
            {"rates": rates}, args.seed,
        )
    elif args.kind == "adversarial":
        trace = gen_adversarial_uniform(args.k, args.users, args.horizon, args.seed)
    else:
        raise ConfigurationError(f"unknown generator {args.kind!r}")
    save_trace(trace, args.out)
    print(f"wrote {args.out} (catalog={trace.catalog} horizon={trace.horizon})")
    return 0


def cmd_simulate(args) -> int:
    net = BipartiteNetwork.load(args.net)
    trace = load_trace(args.trace, net.n, args.catalog, args.assignment)
    spec = {
        "name": args.policy,
        "mode": args.mode,
        "gamma": args.gamma,
        "rate": args.rate,
        "fetch_mode": args.fetch_mode,
        "exact_support": args.exact_support,
    }
    hits, fetches = run_cell(net, trace, args.capacity, spec, args.seed, args.budget)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    label = args.policy if args.policy != "leadcache" else f"leadcache-{args.mode}"
    write_metrics_csv(out_dir / "metrics.csv", label, hits, fetches)
    summary = {
        "policy": label,
        "horizon": trace.horizon,
        "hits": int(hits.sum()),
        "fetches": int(fetches.sum()),
        "hit_rate": hit_rate(hits.sum(), net.n, trace.horizon),
        "fetch_rate": fetch_rate(fetches.sum(), net.m, trace.horizon),
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_lp(args) -> int:
    net = BipartiteNetwork.load(args.net)
    weights = _read_weights(args.theta)
    frac = solve_lp(build_lp(weights, net, args.capacity))
    s = frac.num_support
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "entity_id", "file_id", "value"])
        for j in range(net.m):
            for k in range(s):
                if frac.y[j, k] > 1e-12:
                    writer.writerow(["y", j, frac.files[k], repr(float(frac.y[j, k]))])
        for i in range(net.n):
            for k in range(s):
                if frac.z[i, k] > 1e-12:
                    writer.writerow(["z", i, frac.files[k], repr(float(frac.z[i, k]))])
    print(f"objective {float(frac.objective)!r} -> {args.out}")
    return 0


def cmd_round(args) -> int:
    net = BipartiteNetwork.load(args.net)
    frac = _load_alloc(args.alloc, net, args.capacity)
    if args.method in ("pipage", "exact") and not args.theta:
        raise ConfigurationError(f"{args.method} rounding needs --theta")
    if args.method == "pipage":
        evaluator = SurrogateEvaluator.for_allocation(
            _read_weights(args.theta), frac, net
        )
        config = pipage_round(frac, evaluator, net)
    elif args.method == "madow":
        config, _ = madow_round(frac, net, args.seed)
    elif args.method == "replacement":
        config = replacement_round(frac, net, args.seed)
    elif args.method == "exact":
        support = set(frac.files)
        theta = {
            pair: w for pair, w in _read_weights(args.theta).items()
            if pair[1] in support
        }
        config = exact_ilp(theta, net, args.capacity, args.budget)
    else:
        raise ConfigurationError(f"unknown rounding method {args.method!r}")
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cache_id", "file_id"])
        for j, files in enumerate(config.sets):
            for f in sorted(files):
                writer.writerow([j, f])
    print(f"wrote {args.out}")
    return 0


def cmd_oracle(args) -> int:
    net = BipartiteNetwork.load(args.net)
    trace = load_trace(args.trace, net.n, args.catalog, args.assignment)
    value, exact, _ = hindsight_benchmark(net, trace, args.capacity, args.budget)
    doc = {"value": value, "exact": exact, "horizon": trace.horizon}
    text = json.dumps(doc, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_bounds(args) -> int:
    report = bound_report(
        args.users, args.caches, args.capacity, args.degree,
        args.catalog, args.horizon, args.max_user_degree,
    )
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


def cmd_experiment(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.out_dir:
        config.output_dir = args.out_dir
    if args.no_figures:
        config.figures = False
    for item in args.set or []:
        key, _, value = item.partition("=")
        if not _:
            raise ConfigurationError(f"--set expects key=value, got {item!r}")
        config.override(key, value)
    summary = run_experiment(config)
    for label, agg in sorted(summary["aggregates"].items()):
        print(f"{label}: {json.dumps(agg, sort_keys=True)}")
    print(f"summary -> {Path(config.output_dir) / 'summary.json'}")
    return 0


# ---------- parser ----------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="leadcache",
        description="Online caching on bipartite user-cache networks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-net", help="generate a random network file")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--caches", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_net)

    p = sub.add_parser("gen-trace", help="generate a synthetic assigned trace")
    p.add_argument("--kind", choices=["zipf", "renewal", "adversarial"], required=True)
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--catalog", type=int, default=100)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--k", type=int, default=1, help="adversarial: catalog is 2k")
    p.add_argument("--rates", help="renewal: CSV user_id,file_id,rate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("simulate", help="run one policy over a trace")
    p.add_argument("--net", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--assignment", choices=["round_robin", "by_column"],
                   default="round_robin")
    p.add_argument("--catalog", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--policy", choices=["leadcache", "lru", "lfu", "belady"],
                   default="leadcache")
    p.add_argument("--mode", choices=["exact", "pipage", "madow", "replacement"],
                   default="pipage")
    p.add_argument("--gamma", choices=["fixed", "fresh"], default="fixed")
    p.add_argument("--rate", choices=["integral", "relaxed"], default="integral")
    p.add_argument("--fetch-mode", choices=["all", "first"], default="all")
    p.add_argument("--exact-support", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--out-dir", default="out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("lp", help="solve the placement relaxation for given weights")
    p.add_argument("--net", required=True)
    p.add_argument("--theta", required=True, help="CSV user_id,file_id,weight")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lp)

    p = sub.add_parser("round", help="round a fractional allocation")
    p.add_argument("--net", required=True)
    p.add_argument("--alloc", required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--method", choices=["pipage", "madow", "replacement", "exact"],
                   required=True)
    p.add_argument("--theta", help="CSV user_id,file_id,weight (pipage/exact)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--budget", type=int, default=10**7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_round)

    p = sub.add_parser("oracle", help="hindsight best-static benchmark for a trace")
    p.add_argument("--net", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--assignment", choices=["round_robin", "by_column"],
                   default="round_robin")
    p.add_argument("--catalog", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--budget", type=int, default=10**6)
    p.add_argument("--out")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bounds", help="evaluate regret bounds and rounding factor")
    p.add_argument("--users", type=int, required=True)
    p.add_argument("--caches", type=int, required=True)
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--catalog", type=int, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--max-user-degree", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("experiment", help="run an experiment grid from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config field (dotted path, JSON value)")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
