"""Reactive per-cache baselines (LRU, LFU) and the offline per-cache optimum.

Each cache runs its own eviction state over the requests of its connected
users, processed slot by slot with users ascending within a slot. A user
scores a (global) hit when some connected cache held the file before the
slot's updates; per-cache hits are counted at processing time, which is the
accounting under which the offline farthest-next-use policy is optimal for
every individual cache.

A miss fans out: every connected cache missing the file fetches it
(`fetch_mode="all"`, the default). The single-fetch alternative
(`fetch_mode="first"`) routes each request to the lowest-id connected holder,
or to the lowest-id connected cache when nobody holds it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import BipartiteNetwork
from .traces import IDLE, RequestTrace

_NEVER = float("inf")


@dataclass
class BaselineResult:
    """Per-slot and per-cache accounting of a baseline run."""

    hits: np.ndarray
    fetches: np.ndarray
    per_cache_hits: np.ndarray
    per_cache_fetches: np.ndarray
    per_cache_requests: np.ndarray

    @property
    def total_hits(self) -> int:
        return int(self.hits.sum())

    @property
    def total_fetches(self) -> int:
        return int(self.fetches.sum())


class ReactiveState:
    """Mutable per-cache contents plus recency/frequency metadata."""

    def __init__(self, net: BipartiteNetwork, capacity: int, fetch_mode: str = "all"):
        if capacity < 1:
            raise ConfigurationError("capacity must be >= 1")
        if fetch_mode not in ("all", "first"):
            raise ConfigurationError("fetch_mode must be 'all' or 'first'")
        self.net = net
        self.capacity = capacity
        self.fetch_mode = fetch_mode
        self.files: list[set[int]] = [set() for _ in range(net.m)]
        self.recency: list[dict[int, int]] = [dict() for _ in range(net.m)]
        self.counts: list[dict[int, int]] = [dict() for _ in range(net.m)]
        self.tick = 0
        self.per_cache_hits = np.zeros(net.m, dtype=np.int64)
        self.per_cache_fetches = np.zeros(net.m, dtype=np.int64)
        self.per_cache_requests = np.zeros(net.m, dtype=np.int64)


def _route(state: ReactiveState, x: np.ndarray) -> list[list[tuple[int, int]]]:
    """Per-cache request lists for one slot, users ascending."""
    net = state.net
    per_cache: list[list[tuple[int, int]]] = [[] for _ in range(net.m)]
    for i in range(net.n):
        f = int(x[i])
        if f == IDLE or not net.user_caches[i]:
            continue
        if state.fetch_mode == "all":
            for j in net.user_caches[i]:
                per_cache[j].append((i, f))
        else:
            holders = [j for j in net.user_caches[i] if f in state.files[j]]
            target = holders[0] if holders else net.user_caches[i][0]
            per_cache[target].append((i, f))
    return per_cache


def _reactive_slot(
    state: ReactiveState, x: np.ndarray, kind: str
) -> tuple[int, int]:
    """Process one slot under LRU or LFU eviction; returns (hits, fetches)."""
    net = state.net
    x = np.asarray(x)
    if x.shape != (net.n,):
        raise ConfigurationError(f"request slot must have shape ({net.n},)")
    snapshot = [frozenset(s) for s in state.files]
    hits = 0
    for i in range(net.n):
        f = int(x[i])
        if f != IDLE and any(f in snapshot[j] for j in net.user_caches[i]):
            hits += 1

    fetches = 0
    per_cache = _route(state, x)
    for j in range(net.m):
        cache = state.files[j]
        for i, f in per_cache[j]:
            state.tick += 1
            state.per_cache_requests[j] += 1
            state.counts[j][f] = state.counts[j].get(f, 0) + 1
            if f in cache:
                state.per_cache_hits[j] += 1
                state.recency[j][f] = state.tick
                continue
            if len(cache) >= state.capacity:
                if kind == "lru":
                    victim = min(cache, key=lambda g: (state.recency[j][g], g))
                else:
                    victim = min(cache, key=lambda g: (state.counts[j].get(g, 0), g))
                cache.discard(victim)
                state.recency[j].pop(victim, None)
            cache.add(f)
            state.recency[j][f] = state.tick
            state.per_cache_fetches[j] += 1
            fetches += 1
    return hits, fetches


def lru_step(state: ReactiveState, x: np.ndarray) -> tuple[int, int]:
    """One slot of least-recently-used eviction; returns (hits, fetches)."""
    return _reactive_slot(state, x, "lru")


def lfu_step(state: ReactiveState, x: np.ndarray) -> tuple[int, int]:
    """One slot of least-frequently-used eviction (counts persist across
    evictions); returns (hits, fetches)."""
    return _reactive_slot(state, x, "lfu")


def run_reactive(
    net: BipartiteNetwork,
    trace: RequestTrace,
    capacity: int,
    kind: str = "lru",
    fetch_mode: str = "all",
) -> BaselineResult:
    """Run LRU or LFU over a full trace."""
    if kind not in ("lru", "lfu"):
        raise ConfigurationError("kind must be 'lru' or 'lfu'")
    if trace.n != net.n:
        raise ConfigurationError("trace and network disagree on the user count")
    state = ReactiveState(net, capacity, fetch_mode)
    hits = np.zeros(trace.horizon, dtype=np.int64)
    fetches = np.zeros(trace.horizon, dtype=np.int64)
    for t in range(trace.horizon):
        hits[t], fetches[t] = _reactive_slot(state, trace.slot(t), kind)
        for j in range(net.m):
            if len(state.files[j]) > capacity:
                raise RuntimeError("cache exceeded capacity")
    return BaselineResult(
        hits=hits,
        fetches=fetches,
        per_cache_hits=state.per_cache_hits,
        per_cache_fetches=state.per_cache_fetches,
        per_cache_requests=state.per_cache_requests,
    )


def belady_offline(
    net: BipartiteNetwork, trace: RequestTrace, capacity: int
) -> BaselineResult:
    """Farthest-next-use eviction with full knowledge of each cache's stream.

    Every cache serves all of its connected users' requests (fan-out routing);
    on a miss with a full cache it evicts the resident file whose next use in
    this cache's stream is farthest away, treating never-used-again as
    farthest and breaking remaining ties toward the smallest file id. This is
    the per-cache offline optimum for processing-time hit counting.
    """
    if capacity < 1:
        raise ConfigurationError("capacity must be >= 1")
    if trace.n != net.n:
        raise ConfigurationError("trace and network disagree on the user count")

    streams: list[list[int]] = [[] for _ in range(net.m)]  # file per stream pos
    slots: list[list[tuple[int, int]]] = [[] for _ in range(net.m)]  # (slot, len)
    for t in range(trace.horizon):
        row = trace.requests[t]
        for j in range(net.m):
            start = len(streams[j])
            for i in net.cache_users[j]:
                if row[i] != IDLE:
                    streams[j].append(int(row[i]))
            slots[j].append((start, len(streams[j])))

    # next_use[k]: stream position of the next request of the same file
    next_use: list[np.ndarray] = []
    positions: list[dict[int, list[int]]] = []
    for j in range(net.m):
        nxt: dict[int, float] = {}
        arr = np.full(len(streams[j]), _NEVER)
        for k in range(len(streams[j]) - 1, -1, -1):
            f = streams[j][k]
            arr[k] = nxt.get(f, _NEVER)
            nxt[f] = k
        next_use.append(arr)
        pos: dict[int, list[int]] = {}
        for k, f in enumerate(streams[j]):
            pos.setdefault(f, []).append(k)
        positions.append(pos)

    files: list[set[int]] = [set() for _ in range(net.m)]
    ptr: list[dict[int, int]] = [dict() for _ in range(net.m)]  # per-file scan pos
    per_cache_hits = np.zeros(net.m, dtype=np.int64)
    per_cache_fetches = np.zeros(net.m, dtype=np.int64)
    per_cache_requests = np.zeros(net.m, dtype=np.int64)
    hits = np.zeros(trace.horizon, dtype=np.int64)
    fetches = np.zeros(trace.horizon, dtype=np.int64)

    def upcoming(j: int, g: int, k: int) -> float:
        """Next stream position of g in cache j strictly after position k."""
        plist = positions[j].get(g, [])
        p = ptr[j].get(g, 0)
        while p < len(plist) and plist[p] <= k:
            p += 1
        ptr[j][g] = p
        return plist[p] if p < len(plist) else _NEVER

    for t in range(trace.horizon):
        row = trace.requests[t]
        snapshot = [frozenset(s) for s in files]
        for i in range(net.n):
            f = int(row[i])
            if f != IDLE and any(f in snapshot[j] for j in net.user_caches[i]):
                hits[t] += 1
        for j in range(net.m):
            start, end = slots[j][t]
            for k in range(start, end):
                f = streams[j][k]
                per_cache_requests[j] += 1
                if f in files[j]:
                    per_cache_hits[j] += 1
                    continue
                if len(files[j]) >= capacity:
                    dist = {g: upcoming(j, g, k) for g in files[j]}
                    far = max(dist.values())
                    victim = min(g for g, v in dist.items() if v == far)
                    files[j].discard(victim)
                files[j].add(f)
                per_cache_fetches[j] += 1
                fetches[t] += 1
    return BaselineResult(
        hits=hits,
        fetches=fetches,
        per_cache_hits=per_cache_hits,
        per_cache_fetches=per_cache_fetches,
        per_cache_requests=per_cache_requests,
    )
