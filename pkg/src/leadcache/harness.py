"""Experiment orchestration: cells, metrics files, summaries, and benchmarks.

An experiment is a grid of cells (policy x sub-interval x replicate) over one
network and one trace source. Each cell writes a per-slot metrics CSV; the
run writes a deterministic summary JSON (stable key order, no timestamps)
and, by default, report figures. Seeds follow a documented counter scheme:
generated traces use (master_seed, 1, replicate) and policies use
(master_seed, 2, policy_index, interval, replicate), so any cell can be
reproduced in isolation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import belady_offline, run_reactive
from .bounds import bound_report
from .errors import BudgetExceededError, ConfigurationError
from .model import BipartiteNetwork, build_random_network
from .policy import run_policy
from .reward import (
    fetch_rate,
    hindsight_opt_exact,
    hindsight_upper_bound,
    hit_rate,
    replay_hits,
)
from .rounding import approximation_factor
from .traces import (
    RequestTrace,
    gen_adversarial_uniform,
    gen_renewal,
    gen_zipf,
    load_trace,
    split_intervals,
)

_TAG_TRACE = 1
_TAG_POLICY = 2

DEFAULT_ORACLE_BUDGET = 10**6
DEFAULT_POLICY_BUDGET = 10**7


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment grid.

    network: {"path": file} or {"n", "m", "d", "seed"}.
    trace: {"path", "assignment", "catalog"} or {"kind": "zipf" | "renewal" |
        "adversarial", ...generator arguments...}.
    capacity: integer, or {"fraction": q} resolved as max(1, round(q * N)).
    policies: list of {"name": "leadcache", "mode", "gamma", "rate",
        "exact_support"} or {"name": "lru" | "lfu", "fetch_mode"} or
        {"name": "belady"}.
    """

    network: dict
    trace: dict
    capacity: int | dict
    policies: list = field(default_factory=lambda: [{"name": "leadcache"}])
    intervals: int = 1
    replicates: int = 1
    seed: int = 0
    output_dir: str = "out"
    figures: bool = True
    oracle_budget: int = DEFAULT_ORACLE_BUDGET
    policy_budget: int = DEFAULT_POLICY_BUDGET

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ConfigurationError(f"unknown config fields: {sorted(extra)}")
        missing = {"network", "trace", "capacity"} - set(doc)
        if missing:
            raise ConfigurationError(f"config missing fields: {sorted(missing)}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "trace": self.trace,
            "capacity": self.capacity,
            "policies": self.policies,
            "intervals": self.intervals,
            "replicates": self.replicates,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "figures": self.figures,
            "oracle_budget": self.oracle_budget,
            "policy_budget": self.policy_budget,
        }

    def override(self, key: str, value) -> None:
        """Apply one dotted-path command-line override, JSON-decoding the value."""
        try:
            decoded = json.loads(value)
        except (json.JSONDecodeError, TypeError):
            decoded = value
        parts = key.split(".")
        if parts[0] not in self.__dataclass_fields__:
            raise ConfigurationError(f"unknown config field {parts[0]!r}")
        if len(parts) == 1:
            setattr(self, parts[0], decoded)
            return
        node = getattr(self, parts[0])
        for p in parts[1:-1]:
            node = node[int(p)] if isinstance(node, list) else node[p]
        if isinstance(node, list):
            node[int(parts[-1])] = decoded
        else:
            node[parts[-1]] = decoded


# ---------- building blocks ----------


def resolve_network(spec: dict) -> BipartiteNetwork:
    if "path" in spec:
        return BipartiteNetwork.load(spec["path"])
    try:
        return build_random_network(
            int(spec["n"]), int(spec["m"]), int(spec["d"]), int(spec.get("seed", 0))
        )
    except KeyError as exc:
        raise ConfigurationError(f"network spec missing {exc}") from exc


def resolve_trace(spec: dict, n: int, seed) -> RequestTrace:
    """Build or load the trace for one replicate (generators use `seed`)."""
    if "path" in spec:
        return load_trace(
            spec["path"],
            n,
            int(spec["catalog"]),
            spec.get("assignment", "round_robin"),
        )
    kind = spec.get("kind")
    if kind == "zipf":
        return gen_zipf(
            int(spec["catalog"]), float(spec.get("alpha", 1.0)), n,
            int(spec["horizon"]), seed,
        )
    if kind == "renewal":
        return gen_renewal(
            int(spec["catalog"]), n, int(spec["horizon"]),
            spec.get("inter_arrival", "geometric"),
            {"rates": np.asarray(spec["rates"], dtype=np.float64)}
            if "rates" in spec else spec.get("params"),
            seed,
        )
    if kind == "adversarial":
        return gen_adversarial_uniform(int(spec["k"]), n, int(spec["horizon"]), seed)
    raise ConfigurationError(f"unknown trace spec {spec!r}")


def resolve_capacity(capacity, catalog: int) -> int:
    if isinstance(capacity, dict):
        frac = float(capacity["fraction"])
        return max(1, round(frac * catalog))
    cap = int(capacity)
    if cap < 1:
        raise ConfigurationError("capacity must be >= 1")
    return cap


def policy_label(spec: dict) -> str:
    name = spec.get("name", "leadcache")
    if name == "leadcache":
        return f"leadcache-{spec.get('mode', 'pipage')}"
    return name


def run_cell(
    net: BipartiteNetwork,
    trace: RequestTrace,
    capacity: int,
    spec: dict,
    seed,
    policy_budget: int = DEFAULT_POLICY_BUDGET,
) -> tuple[np.ndarray, np.ndarray]:
    """Run one policy over one trace; returns per-slot (hits, fetches)."""
    name = spec.get("name", "leadcache")
    if name == "leadcache":
        result = run_policy(
            net,
            trace,
            capacity,
            mode=spec.get("mode", "pipage"),
            gamma_mode=spec.get("gamma", "fixed"),
            rate_mode=spec.get("rate", "integral"),
            seed=seed,
            exact_support=bool(spec.get("exact_support", False)),
            budget=policy_budget,
        )
        return result.hits, result.fetches
    if name in ("lru", "lfu"):
        result = run_reactive(
            net, trace, capacity, kind=name, fetch_mode=spec.get("fetch_mode", "all")
        )
        return result.hits, result.fetches
    if name == "belady":
        result = belady_offline(net, trace, capacity)
        return result.hits, result.fetches
    raise ConfigurationError(f"unknown policy {name!r}")


def hindsight_benchmark(
    net: BipartiteNetwork, trace: RequestTrace, capacity: int, budget: int
) -> tuple[float, bool, np.ndarray | None]:
    """Best-static value for a trace: exact when enumeration fits the budget,
    otherwise the relaxation upper bound (flagged, regret becomes an upper
    estimate). Returns (value, exact?, per-slot replay hits or None)."""
    try:
        config, value = hindsight_opt_exact(net, trace, capacity, budget)
        return float(value), True, replay_hits(net, trace, config)
    except BudgetExceededError:
        return float(hindsight_upper_bound(net, trace, capacity)), False, None


def write_metrics_csv(path, label: str, hits: np.ndarray, fetches: np.ndarray) -> None:
    """Per-slot delimited output: t,policy,hits,fetches,cum_hits,cum_fetches."""
    cum_h, cum_f = 0, 0
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "policy", "hits", "fetches", "cum_hits", "cum_fetches"])
        for t in range(len(hits)):
            cum_h += int(hits[t])
            cum_f += int(fetches[t])
            writer.writerow([t + 1, label, int(hits[t]), int(fetches[t]), cum_h, cum_f])


# ---------- the grid ----------


def run_experiment(config: ExperimentConfig) -> dict:
    """Run the full grid and write metrics CSVs, summary.json, and figures.

    A failing cell is recorded (its `error` field) without stopping the
    remaining cells. Reruns with the same config are byte-identical on the
    CSV/JSON outputs.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    net = resolve_network(config.network)
    generated = "path" not in config.trace

    cells = []
    curves: dict[str, dict[str, np.ndarray]] = {}
    horizons = set()
    catalog = None
    for rep in range(config.replicates):
        trace_seed = (config.seed, _TAG_TRACE, rep)
        full = resolve_trace(config.trace, net.n, trace_seed if generated else None)
        catalog = full.catalog
        parts = split_intervals(full, config.intervals)
        for interval, sub in enumerate(parts):
            horizons.add(sub.horizon)
            bench_value, bench_exact, bench_series = hindsight_benchmark(
                net, sub, resolve_capacity(config.capacity, full.catalog),
                config.oracle_budget,
            )
            for p_idx, spec in enumerate(config.policies):
                label = policy_label(spec)
                cell = {
                    "policy": label,
                    "interval": interval,
                    "replicate": rep,
                    "horizon": sub.horizon,
                    "benchmark_value": bench_value,
                    "benchmark_exact": bench_exact,
                    "error": None,
                }
                cap = resolve_capacity(config.capacity, full.catalog)
                try:
                    hits, fetches = run_cell(
                        net, sub, cap, spec,
                        (config.seed, _TAG_POLICY, p_idx, interval, rep),
                        config.policy_budget,
                    )
                    fname = f"metrics_{label}_i{interval}_r{rep}.csv"
                    write_metrics_csv(out / fname, label, hits, fetches)
                    alpha = approximation_factor(max(1, net.delta))
                    cell.update(
                        {
                            "hits": int(hits.sum()),
                            "fetches": int(fetches.sum()),
                            "hit_rate": hit_rate(hits.sum(), net.n, sub.horizon),
                            "fetch_rate": fetch_rate(fetches.sum(), net.m, sub.horizon),
                            "regret": float(bench_value - hits.sum()),
                            "alpha_regret": float(alpha * bench_value - hits.sum()),
                            "metrics_file": fname,
                        }
                    )
                    if interval == 0 and rep == 0:
                        curves[label] = {
                            "cum_hits": np.cumsum(hits),
                            "cum_fetches": np.cumsum(fetches),
                            "benchmark": np.cumsum(bench_series)
                            if bench_series is not None else None,
                        }
                except Exception as exc:  # keep the rest of the grid running
                    cell["error"] = f"{type(exc).__name__}: {exc}"
                cells.append(cell)

    aggregates: dict[str, dict] = {}
    for label in sorted({c["policy"] for c in cells}):
        ok = [c for c in cells if c["policy"] == label and c["error"] is None]
        if ok:
            aggregates[label] = {
                "cells": len(ok),
                "mean_hit_rate": float(np.mean([c["hit_rate"] for c in ok])),
                "mean_fetch_rate": float(np.mean([c["fetch_rate"] for c in ok])),
                "mean_regret": float(np.mean([c["regret"] for c in ok])),
            }
        else:
            aggregates[label] = {"cells": 0}

    cap = resolve_capacity(config.capacity, catalog)
    summary = {
        "config": config.to_dict(),
        "network": {"n": net.n, "m": net.m, "d": net.d, "delta": net.delta},
        "capacity": cap,
        "catalog": catalog,
        "bounds": {
            str(h): bound_report(
                net.n, net.m, cap, net.d, catalog, h, max(1, net.delta)
            ).to_dict()
            for h in sorted(horizons)
        },
        "cells": cells,
        "aggregates": aggregates,
    }
    (out / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    if config.figures:
        from .figures import render_experiment_figures

        render_experiment_figures(out, cells, curves)
    return summary
