"""Bipartite user-cache network model and shared placement types.

Users sit on the left (ids 0..n-1), caches on the right (ids 0..m-1). An edge
(cache j, user i) means user i can be served from cache j. A placement assigns
each cache a set of at most C files; a user scores a hit when some connected
cache holds the requested file.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidDegreeError


# ---------- network ----------


@dataclass(frozen=True)
class BipartiteNetwork:
    """Immutable bipartite graph between n users and m caches.

    Attributes:
        n: number of users.
        m: number of caches.
        cache_users: per cache, the connected user ids in ascending order.
        user_caches: per user, the connected cache ids in ascending order.
    """

    n: int
    m: int
    cache_users: tuple[tuple[int, ...], ...]
    user_caches: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ConfigurationError("need at least one user and one cache")
        if len(self.cache_users) != self.m or len(self.user_caches) != self.n:
            raise ConfigurationError("adjacency lists do not match n, m")
        seen = set()
        for j, users in enumerate(self.cache_users):
            if list(users) != sorted(set(users)):
                raise ConfigurationError(f"cache {j}: user list not sorted/unique")
            for i in users:
                if not 0 <= i < self.n:
                    raise ConfigurationError(f"cache {j}: user id {i} out of range")
                seen.add((j, i))
        for i, caches in enumerate(self.user_caches):
            if list(caches) != sorted(set(caches)):
                raise ConfigurationError(f"user {i}: cache list not sorted/unique")
            for j in caches:
                if (j, i) not in seen:
                    raise ConfigurationError(f"user {i}: edge to cache {j} not mirrored")
                seen.discard((j, i))
        if seen:
            raise ConfigurationError(f"unmirrored edges: {sorted(seen)[:5]}")

    @classmethod
    def from_edges(cls, n: int, m: int, edges: Iterable[tuple[int, int]]) -> "BipartiteNetwork":
        """Build from an iterable of (cache_id, user_id) pairs."""
        by_cache: list[set[int]] = [set() for _ in range(m)]
        by_user: list[set[int]] = [set() for _ in range(n)]
        for j, i in edges:
            if not (0 <= j < m and 0 <= i < n):
                raise ConfigurationError(f"edge ({j}, {i}) out of range")
            by_cache[j].add(i)
            by_user[i].add(j)
        return cls(
            n=n,
            m=m,
            cache_users=tuple(tuple(sorted(s)) for s in by_cache),
            user_caches=tuple(tuple(sorted(s)) for s in by_user),
        )

    @property
    def edges(self) -> list[tuple[int, int]]:
        """All (cache_id, user_id) pairs, sorted."""
        return [(j, i) for j in range(self.m) for i in self.cache_users[j]]

    @property
    def d(self) -> int:
        """Maximum cache degree (most users wired to a single cache)."""
        return max(len(u) for u in self.cache_users)

    @property
    def delta(self) -> int:
        """Maximum user degree (most caches a single user can reach)."""
        return max((len(c) for c in self.user_caches), default=0)

    # ---------- persistence ----------

    def save(self, path: str | Path) -> None:
        doc = {"n": self.n, "m": self.m, "edges": self.edges}
        Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "BipartiteNetwork":
        doc = json.loads(Path(path).read_text())
        try:
            return cls.from_edges(int(doc["n"]), int(doc["m"]), [tuple(e) for e in doc["edges"]])
        except KeyError as exc:
            raise ConfigurationError(f"network file missing field {exc}") from exc


def build_random_network(n: int, m: int, d: int, seed: int = 0) -> BipartiteNetwork:
    """Attach each cache to exactly d distinct users, uniformly at random.

    Sampling is without replacement within a cache, so every cache degree is
    exactly d and the mean user degree is m*d/n.

    Args:
        n: number of users.
        m: number of caches.
        d: users per cache; must satisfy 1 <= d <= n.
        seed: RNG seed; identical seeds reproduce the network.
    """
    if d < 1 or d > n:
        raise InvalidDegreeError(f"cache degree d={d} must lie in [1, n={n}]")
    rng = np.random.default_rng(seed)
    edges = []
    for j in range(m):
        for i in rng.choice(n, size=d, replace=False):
            edges.append((j, int(i)))
    return BipartiteNetwork.from_edges(n, m, edges)


# ---------- cache conflict coloring ----------


@dataclass(frozen=True)
class CacheColoring:
    """Color per cache (0-based) such that caches sharing a user differ."""

    colors: tuple[int, ...]
    num_colors: int

    def __post_init__(self):
        if self.num_colors != (max(self.colors) + 1 if self.colors else 0):
            raise ConfigurationError("num_colors inconsistent with colors")


def cache_conflicts(net: BipartiteNetwork) -> list[set[int]]:
    """Adjacency of the cache conflict graph: j ~ k iff they share a user."""
    adj: list[set[int]] = [set() for _ in range(net.m)]
    for caches in net.user_caches:
        for a in caches:
            for b in caches:
                if a != b:
                    adj[a].add(b)
    return adj

def greedy_cache_coloring(net: BipartiteNetwork) -> CacheColoring:
    """Greedily color the cache conflict graph.

    Caches are scanned in ascending id; each takes the smallest color absent
    among its already-colored conflicting neighbors. The number of colors used
    never exceeds delta*d (each cache conflicts with at most d*(delta-1)
    others).
    """
    adj = cache_conflicts(net)
    colors = [-1] * net.m
    for j in range(net.m):
        taken = {colors[k] for k in adj[j] if colors[k] >= 0}
        c = 0
        while c in taken:
            c += 1
        colors[j] = c
    return CacheColoring(colors=tuple(colors), num_colors=max(colors) + 1)


# ---------- placements ----------


@dataclass(frozen=True)
class CacheConfiguration:
    """Integral placement: one file set per cache.

    Sets may hold fewer than C files (unfilled capacity is allowed, e.g. when
    the optimization support is smaller than the capacity).
    """

    sets: tuple[frozenset[int], ...]

    @classmethod
    def from_lists(cls, lists: Sequence[Iterable[int]]) -> "CacheConfiguration":
        return cls(sets=tuple(frozenset(int(f) for f in s) for s in lists))

    @classmethod
    def empty(cls, m: int) -> "CacheConfiguration":
        return cls(sets=tuple(frozenset() for _ in range(m)))

    def validate(self, m: int, capacity: int, catalog: int | None = None) -> None:
        if len(self.sets) != m:
            raise ConfigurationError(f"expected {m} cache sets, got {len(self.sets)}")
        for j, s in enumerate(self.sets):
            if len(s) > capacity:
                raise ConfigurationError(f"cache {j} holds {len(s)} > C={capacity} files")
            for f in s:
                if f < 0 or (catalog is not None and f >= catalog):
                    raise ConfigurationError(f"cache {j}: file id {f} out of range")

    def covered_files(self, caches: Iterable[int]) -> frozenset[int]:
        """Union of the sets held by the given caches."""
        out: frozenset[int] = frozenset()
        for j in caches:
            out |= self.sets[j]
        return out

    def holds(self, net: BipartiteNetwork, user: int, file_id: int) -> bool:
        """True when some cache connected to `user` holds `file_id`."""
        return any(file_id in self.sets[j] for j in net.user_caches[user])


@dataclass(frozen=True)
class VirtualAction:
    """Set of (user, file) pairs the virtual placement marks as covered."""

    pairs: frozenset[tuple[int, int]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[int, int]]) -> "VirtualAction":
        return cls(pairs=frozenset((int(i), int(f)) for i, f in pairs))

    @classmethod
    def from_configuration(
        cls, net: BipartiteNetwork, config: CacheConfiguration
    ) -> "VirtualAction":
        """Coverage indicator induced by an integral placement."""
        pairs = []
        for i in range(net.n):
            for f in config.covered_files(net.user_caches[i]):
                pairs.append((i, f))
        return cls.from_pairs(pairs)
