"""Hit scoring, hindsight benchmarks, regret and fetch accounting.

A slot's reward is the number of users whose request is held by at least one
connected cache. The linear variant counts duplicated copies, and the virtual
variant scores against a (user, file) coverage set instead of a physical
placement; the three agree on placements where no user sees the same file
twice.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetExceededError, ConfigurationError
from .lp import build_lp, solve_lp
from .model import BipartiteNetwork, CacheConfiguration, VirtualAction
from .rounding import maximize_weighted_coverage
from .traces import IDLE, RequestTrace

DEFAULT_ORACLE_BUDGET = 10**6


def reward(net: BipartiteNetwork, x: np.ndarray, config: CacheConfiguration) -> int:
    """Users whose requested file is held by some connected cache."""
    x = np.asarray(x)
    if x.shape != (net.n,):
        raise ConfigurationError(f"request slot must have shape ({net.n},)")
    hits = 0
    for i in range(net.n):
        f = int(x[i])
        if f != IDLE and config.holds(net, i, f):
            hits += 1
    return hits


def linear_reward(net: BipartiteNetwork, x: np.ndarray, config: CacheConfiguration) -> int:
    """Requested copies summed over connected caches (duplicates count)."""
    x = np.asarray(x)
    if x.shape != (net.n,):
        raise ConfigurationError(f"request slot must have shape ({net.n},)")
    total = 0
    for i in range(net.n):
        f = int(x[i])
        if f == IDLE:
            continue
        total += sum(1 for j in net.user_caches[i] if f in config.sets[j])
    return total


def virtual_reward(x: np.ndarray, action: VirtualAction) -> int:
    """Users whose (user, file) request pair the virtual action covers."""
    x = np.asarray(x)
    return sum(
        1 for i in range(x.shape[0]) if x[i] != IDLE and (i, int(x[i])) in action.pairs
    )


# ---------- hindsight benchmarks ----------


def hindsight_opt_exact(
    net: BipartiteNetwork,
    trace: RequestTrace,
    capacity: int,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> tuple[CacheConfiguration, float]:
    """Best static placement in hindsight, by exact enumeration.

    Enumerates over the full catalog, so the work guard is
    (N choose C) ** m <= budget; ties resolve to the lexicographically-first
    configuration. An empty trace yields value 0 and the first configuration.

    Raises:
        BudgetExceededError: enumeration too large; use
            `hindsight_upper_bound` instead.
    """
    counts = trace.counts().astype(np.float64)
    try:
        return maximize_weighted_coverage(
            counts, range(trace.catalog), net, capacity, budget
        )
    except BudgetExceededError as exc:
        raise BudgetExceededError(
            f"{exc}; use hindsight_upper_bound for an upper estimate"
        ) from exc


def hindsight_upper_bound(
    net: BipartiteNetwork, trace: RequestTrace, capacity: int, tol: float = 1e-6
) -> float:
    """Relaxation value with the trace's final counts as weights.

    Always at least the exact hindsight optimum; equal whenever the
    relaxation lands on an integral point.
    """
    counts = trace.counts().astype(np.float64)
    if not (counts > 0).any():
        return 0.0
    return solve_lp(build_lp(counts, net, capacity), tol=tol).objective


def replay_hits(
    net: BipartiteNetwork, trace: RequestTrace, config: CacheConfiguration
) -> np.ndarray:
    """Per-slot hits of a static placement replayed over the trace."""
    return np.array(
        [reward(net, trace.slot(t), config) for t in range(trace.horizon)],
        dtype=np.int64,
    )


# ---------- regret and fetch accounting ----------


def regret_series(policy_hits, opt_hits, alpha: float = 1.0) -> np.ndarray:
    """R(t) = alpha * OPT(t) - cumulative policy hits through t.

    Both inputs are per-slot series of equal length; scalars are treated as
    one-point totals. alpha < 1 gives the alpha-regret against a scaled
    benchmark.
    """
    hits = np.atleast_1d(np.asarray(policy_hits, dtype=np.float64))
    opt = np.atleast_1d(np.asarray(opt_hits, dtype=np.float64))
    if hits.shape != opt.shape:
        raise ConfigurationError("policy and benchmark series must have equal length")
    return alpha * np.cumsum(opt) - np.cumsum(hits)


def fetch_count(prev: CacheConfiguration, new: CacheConfiguration) -> int:
    """Files that must be fetched to move from `prev` to `new` (sum over caches)."""
    if len(prev.sets) != len(new.sets):
        raise ConfigurationError("configurations disagree on the number of caches")
    return sum(len(b - a) for a, b in zip(prev.sets, new.sets))


def fetch_event(prev: CacheConfiguration, new: CacheConfiguration) -> bool:
    """True when the placement changed at all between consecutive slots."""
    return prev.sets != new.sets


def hit_rate(total_hits: float, n: int, horizon: int) -> float:
    """Hits normalized per user per slot."""
    return float(total_hits) / float(n * horizon) if horizon else 0.0


def fetch_rate(total_fetches: float, m: int, horizon: int) -> float:
    """Fetches normalized per cache per slot."""
    return float(total_fetches) / float(m * horizon) if horizon else 0.0


def recall_distances(trace: RequestTrace) -> np.ndarray:
    """Gaps between successive requests of the same file.

    The request stream is flattened slot-major (users ascending within a
    slot, idle entries skipped); each gap is the difference of stream
    positions between consecutive occurrences of a file.
    """
    last: dict[int, int] = {}
    gaps = []
    pos = 0
    for t in range(trace.horizon):
        row = trace.requests[t]
        for i in range(trace.n):
            f = int(row[i])
            if f == IDLE:
                continue
            if f in last:
                gaps.append(pos - last[f])
            last[f] = pos
            pos += 1
    return np.asarray(gaps, dtype=np.int64)
