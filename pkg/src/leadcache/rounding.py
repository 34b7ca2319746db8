"""Integral placements from fractional ones, plus the exact placement solver.

Three rounding routes: pipage (deterministic, multiplicative factor
1 - (1 - 1/delta)^delta on the coverage objective), Madow systematic sampling
(randomized, exact per-cache marginals), and independent sampling with
replacement (randomized, point-wise 1 - 1/e coverage factor). The exact
solver maximizes the coverage objective over integral placements directly;
it is exponential in principle and guarded by an enumeration budget.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache

import numpy as np

from .errors import (
    BudgetExceededError,
    ConfigurationError,
    FeasibilityError,
    PreconditionError,
)
from .lp import FractionalAllocation, support_weights
from .model import BipartiteNetwork, CacheConfiguration, VirtualAction

SNAP_TOL = 1e-9
MASS_TOL = 1e-6


def approximation_factor(delta: int) -> float:
    """Coverage guarantee 1 - (1 - 1/delta)^delta of pipage rounding."""
    if delta < 1:
        raise ConfigurationError("delta must be >= 1")
    return 1.0 - (1.0 - 1.0 / delta) ** delta


# ---------- surrogate objectives ----------


class SurrogateEvaluator:
    """Evaluates the coverage objective and its multilinear surrogate.

    Both are sums over positive-weight (user, file) pairs. The coverage
    objective caps the placement mass a user sees at one:
        L(y) = sum w[i, k] * min(1, sum_{j ~ i} y[j, k]).
    The surrogate replaces the cap with the product form
        phi(y) = sum w[i, k] * (1 - prod_{j ~ i} (1 - y[j, k])),
    which agrees with L at integral points and is sandwiched between
    (1 - (1 - 1/delta)^delta) * L and L everywhere on the box.

    Weight columns align with `files`; slack columns of a placement carry no
    weight and are ignored by both objectives.
    """

    def __init__(self, weights: np.ndarray, files, net: BipartiteNetwork):
        self.weights = np.maximum(np.asarray(weights, dtype=np.float64), 0.0)
        if self.weights.shape[0] != net.n or self.weights.shape[1] != len(files):
            raise ConfigurationError("weights must have shape (n, len(files))")
        self.files = tuple(int(f) for f in files)
        self.net = net

    def _real(self, y: np.ndarray) -> np.ndarray:
        s = len(self.files)
        y = np.asarray(y, dtype=np.float64)
        if y.ndim != 2 or y.shape[0] != self.net.m or y.shape[1] < s:
            raise ConfigurationError("placement must be (m, >= support) shaped")
        return y[:, :s]

    def lvalue(self, y: np.ndarray) -> float:
        """Capped coverage objective L(y)."""
        real = self._real(y)
        total = 0.0
        for i in range(self.net.n):
            cov = np.zeros(len(self.files))
            for j in self.net.user_caches[i]:
                cov += real[j]
            total += float(self.weights[i] @ np.minimum(1.0, cov))
        return total

    def phi(self, y: np.ndarray) -> float:
        """Multilinear surrogate phi(y)."""
        real = self._real(y)
        total = 0.0
        for i in range(self.net.n):
            miss = np.ones(len(self.files))
            for j in self.net.user_caches[i]:
                miss *= 1.0 - real[j]
            total += float(self.weights[i] @ (1.0 - miss))
        return total

    def lvalue_config(self, config: CacheConfiguration) -> float:
        """L at an integral placement given as file sets."""
        total = 0.0
        for i in range(self.net.n):
            cov = config.covered_files(self.net.user_caches[i])
            for k, f in enumerate(self.files):
                if f in cov:
                    total += self.weights[i, k]
        return total

    @classmethod
    def for_allocation(
        cls, weights, frac: FractionalAllocation, net: BipartiteNetwork
    ) -> "SurrogateEvaluator":
        """Align dense (n, N) or pair-mapped weights with an allocation's support."""
        dense, files = support_weights(weights, net.n)
        col = {f: k for k, f in enumerate(files)}
        out = np.zeros((net.n, frac.num_support))
        for k, f in enumerate(frac.files):
            if f in col:
                out[:, k] = dense[:, col[f]]
        return cls(out, frac.files, net)


# ---------- marginal repair ----------


def repair_marginals(p: np.ndarray, capacity: int, tol: float = MASS_TOL) -> np.ndarray:
    """Clip to [0, 1] and water-fill the total back to exactly `capacity`.

    Accepts solver noise up to `tol`; anything larger is a genuine
    precondition violation.
    """
    p = np.clip(np.asarray(p, dtype=np.float64), 0.0, 1.0)
    if abs(p.sum() - capacity) > tol * max(1.0, capacity):
        raise PreconditionError(f"marginals sum to {p.sum():.8f}, expected {capacity}")
    for _ in range(4):
        gap = capacity - p.sum()
        if abs(gap) < 1e-15:
            break
        room = (1.0 - p) if gap > 0 else p
        total = room.sum()
        if total <= 0:
            break
        p = np.clip(p + gap * room / total, 0.0, 1.0)
    return p


# ---------- pipage ----------


def pipage_round(
    frac: FractionalAllocation,
    evaluator: SurrogateEvaluator,
    net: BipartiteNetwork,
    phi_history: list | None = None,
) -> CacheConfiguration:
    """Deterministically round a fractional placement along the surrogate.

    Repeatedly takes the lowest-id cache with two or more fractional
    coordinates, picks its two lowest fractional columns, and moves mass
    between them in whichever capacity-preserving direction does not decrease
    phi (ties go to the second direction, the one raising the first column).
    Every move makes at least one coordinate integral, so the loop ends within
    m * (s + C) moves; the result satisfies L = phi and inherits the
    1 - (1 - 1/delta)^delta guarantee relative to the fractional optimum.

    Args:
        frac: fractional allocation with integral per-cache mass.
        evaluator: surrogate aligned with `frac.files`.
        net: the network the allocation was solved on.
        phi_history: optional list; receives phi after the initial snap and
            after every move (a non-decreasing sequence).

    Raises:
        PreconditionError: some cache's mass is not integral within tolerance.
    """
    y = frac.y.copy()
    m, width = y.shape
    s = frac.num_support
    for j in range(m):
        y[j] = repair_marginals(y[j], frac.capacity)
    y[y < SNAP_TOL] = 0.0
    y[y > 1.0 - SNAP_TOL] = 1.0

    # prod[i, k] tracks prod_{j ~ i} (1 - y[j, k]) over the real columns
    prod = np.ones((net.n, s))
    for i in range(net.n):
        for j in net.user_caches[i]:
            prod[i] *= 1.0 - y[j, :s]
    phi = float((evaluator.weights * (1.0 - prod)).sum())
    if phi_history is not None:
        phi_history.append(phi)

    def move_delta(j: int, pairs: tuple[tuple[int, float], ...]) -> float:
        """phi change when cache j's columns move to the given values."""
        delta = 0.0
        for k, v in pairs:
            if k >= s:
                continue  # slack columns carry no weight
            for i in net.cache_users[j]:
                w = evaluator.weights[i, k]
                if w == 0.0:
                    continue
                new = 1.0
                for jj in net.user_caches[i]:
                    new *= 1.0 - (v if jj == j else y[jj, k])
                delta += w * (prod[i, k] - new)
        return delta

    for _ in range(m * width + 1):
        frac_mask = (y > 0.0) & (y < 1.0)
        counts = frac_mask.sum(axis=1)
        candidates = np.nonzero(counts >= 2)[0]
        if candidates.size == 0:
            lone = np.nonzero(counts == 1)[0]
            if lone.size == 0:
                break
            # accumulated float drift can leave near-integral stragglers
            vals = y[frac_mask]
            if np.abs(vals - np.round(vals)).max() > MASS_TOL:
                raise PreconditionError(
                    "a cache was left with one fractional coordinate; "
                    "per-cache mass was not integral"
                )
            y[frac_mask] = np.round(vals)
            continue
        j = int(candidates[0])
        k1, k2 = (int(k) for k in np.nonzero(frac_mask[j])[0][:2])
        y1, y2 = y[j, k1], y[j, k2]
        eps1 = min(y1, 1.0 - y2)
        eps2 = min(1.0 - y1, y2)
        move_a = ((k1, y1 - eps1), (k2, y2 + eps1))
        move_b = ((k1, y1 + eps2), (k2, y2 - eps2))
        delta_a = move_delta(j, move_a)
        delta_b = move_delta(j, move_b)
        chosen, delta = (move_b, delta_b) if delta_b >= delta_a else (move_a, delta_a)
        for k, v in chosen:
            y[j, k] = v
            if y[j, k] < SNAP_TOL:
                y[j, k] = 0.0
            elif y[j, k] > 1.0 - SNAP_TOL:
                y[j, k] = 1.0
            if k < s:
                for i in net.cache_users[j]:
                    new = 1.0
                    for jj in net.user_caches[i]:
                        new *= 1.0 - y[jj, k]
                    prod[i, k] = new
        phi += delta
        if phi_history is not None:
            phi_history.append(phi)
    else:
        raise RuntimeError("pipage failed to terminate within the move bound")

    sets = []
    for j in range(m):
        sets.append([frac.files[k] for k in range(s) if y[j, k] == 1.0])
    config = CacheConfiguration.from_lists(sets)
    config.validate(m, frac.capacity)
    return config


# ---------- systematic sampling ----------


def madow_sample(p: np.ndarray, capacity: int, u: float) -> np.ndarray:
    """Systematic sample of `capacity` distinct indices with marginals p.

    Walks the cumulative sums Pi and selects, for each offset i in
    0..capacity-1, the index j whose interval [Pi_{j-1}, Pi_j) contains u + i.
    Inclusion probabilities equal p exactly; p must be componentwise in [0, 1]
    and sum to `capacity` within 1e-9.

    Args:
        p: marginal vector.
        capacity: number of indices to select.
        u: uniform draw in [0, 1).

    Returns:
        Sorted array of the selected indices.
    """
    p = np.asarray(p, dtype=np.float64)
    if capacity == 0:
        return np.zeros(0, dtype=np.int64)
    if not 0.0 <= u < 1.0:
        raise FeasibilityError(f"u={u} must lie in [0, 1)")
    if p.ndim != 1 or p.size < capacity:
        raise FeasibilityError("need at least `capacity` marginals")
    if p.min() < -1e-9 or p.max() > 1 + 1e-9:
        raise FeasibilityError("marginals must lie in [0, 1]")
    if abs(p.sum() - capacity) > 1e-9:
        raise FeasibilityError(f"marginals sum to {p.sum()!r}, expected {capacity}")
    cum = np.cumsum(p)
    idx = np.searchsorted(cum, u + np.arange(capacity), side="right")
    idx = np.minimum(idx, p.size - 1)
    if len(set(idx.tolist())) != capacity:
        raise FeasibilityError("systematic sample produced duplicates")
    return np.sort(idx).astype(np.int64)


def madow_round(
    frac: FractionalAllocation, net: BipartiteNetwork, seed=0
) -> tuple[CacheConfiguration, VirtualAction]:
    """Sample an integral placement with per-cache marginals equal to y.

    Each cache draws one uniform from the seeded stream (in cache-id order)
    and systematically samples `capacity` columns; slack columns participate
    and are dropped from the returned sets, so a cache can hold fewer than C
    real files. The virtual action marks (user, file) covered when some
    connected cache picked the file.
    """
    rng = np.random.default_rng(seed)
    s = frac.num_support
    sets = []
    for j in range(net.m):
        p = repair_marginals(frac.y[j], frac.capacity)
        picked = madow_sample(p, frac.capacity, float(rng.random()))
        sets.append([frac.files[k] for k in picked if k < s])
    config = CacheConfiguration.from_lists(sets)
    config.validate(net.m, frac.capacity)
    return config, VirtualAction.from_configuration(net, config)


def replacement_round(
    frac: FractionalAllocation, net: BipartiteNetwork, seed=0
) -> CacheConfiguration:
    """Sample each cache's files independently with replacement.

    Each of `capacity` draws picks column k with probability y[j, k] / C;
    duplicates collapse, so a cache holds at most C distinct files, and each
    column ends up included with probability at least (1 - 1/e) * y[j, k].
    Slack columns participate and are dropped.
    """
    rng = np.random.default_rng(seed)
    s = frac.num_support
    sets = []
    for j in range(net.m):
        p = repair_marginals(frac.y[j], frac.capacity) / float(frac.capacity)
        draws = rng.choice(p.size, size=frac.capacity, replace=True, p=p)
        sets.append({frac.files[k] for k in set(draws.tolist()) if k < s})
    config = CacheConfiguration.from_lists(sets)
    config.validate(net.m, frac.capacity)
    return config


# ---------- exact placement ----------


@lru_cache(maxsize=64)
def _config_matrix(s: int, k: int) -> tuple[tuple[tuple[int, ...], ...], np.ndarray]:
    """All k-subsets of s columns in lexicographic order, plus indicators."""
    combos = tuple(itertools.combinations(range(s), k))
    a = np.zeros((len(combos), s))
    for r, combo in enumerate(combos):
        a[r, list(combo)] = 1.0
    a.setflags(write=False)
    return combos, a


def _factor_table(a: np.ndarray, arity: int, w: np.ndarray) -> np.ndarray:
    """Weighted-OR score table over `arity` caches with config indicators `a`.

    Entry (c_1, .., c_r) is sum_f w_f * (1 - prod_r (1 - a[c_r, f])).
    """
    if arity == 1:
        return a @ w
    miss = 1.0 - a
    if arity == 2:
        return float(w.sum()) - (miss * w) @ miss.T
    letters = "pqruvxyz"
    if arity > len(letters):
        raise BudgetExceededError(f"factor arity {arity} unsupported")
    spec = ",".join(f"{c}f" for c in letters[:arity]) + "->" + letters[:arity]
    operands = [miss * w] + [miss] * (arity - 1)
    return float(w.sum()) - np.einsum(spec, *operands, optimize=True)


def maximize_weighted_coverage(
    weights: np.ndarray,
    files,
    net: BipartiteNetwork,
    capacity: int,
    budget: int = 10**7,
) -> tuple[CacheConfiguration, float]:
    """Exactly maximize sum w[i,f] * [f covered for user i] over placements.

    Enumerates each cache's candidate file sets in lexicographic order and
    fixes caches one id at a time via conditioned max-marginals over
    per-neighborhood score tables, so both the optimum and the
    lexicographically-first maximizing configuration come out exactly. The
    guard (candidates ** m <= budget) bounds the work a caller can demand.

    Args:
        weights: (n, s) nonnegative weight matrix aligned with `files`.
        files: global file ids of the s columns.
        net: bipartite network.
        capacity: per-cache capacity.
        budget: maximum joint enumeration size before refusing.

    Returns:
        (configuration over global file ids, optimal objective value).

    Raises:
        BudgetExceededError: candidate count ** m exceeds `budget`.
    """
    files = tuple(int(f) for f in files)
    w = np.maximum(np.asarray(weights, dtype=np.float64), 0.0)
    s = len(files)
    if w.shape != (net.n, s):
        raise ConfigurationError(f"weights must have shape ({net.n}, {s})")
    if s == 0:
        return CacheConfiguration.empty(net.m), 0.0

    k = min(capacity, s)
    num = math.comb(s, k)
    if num**net.m > budget:
        raise BudgetExceededError(
            f"{num}^{net.m} joint placements exceed budget {budget}"
        )
    combos, a = _config_matrix(s, k)

    # one factor per distinct user neighborhood, weights summed across users;
    # scopes stay sorted so tables are always in ascending cache-axis order
    grouped: dict[tuple[int, ...], np.ndarray] = {}
    for i in range(net.n):
        nb = net.user_caches[i]
        if nb:
            grouped[nb] = grouped.get(nb, np.zeros(s)) + w[i]
    pool: list[tuple[tuple[int, ...], np.ndarray]] = [
        (nb, _factor_table(a, len(nb), w_g)) for nb, w_g in grouped.items()
    ]

    def align(scope_small: tuple[int, ...], table: np.ndarray, scope_big: tuple[int, ...]):
        shape = [num if v in scope_small else 1 for v in scope_big]
        return table.reshape(shape)

    def max_marginal(target: int, factors) -> np.ndarray:
        """Max over all non-target caches of the summed score tables."""
        factors = [f for f in factors if f[0]]
        alive = sorted({v for sc, _ in factors for v in sc} - {target})
        while alive:
            # cheapest join first keeps tables small on tree-like topologies
            def width(u: int) -> int:
                return len({v for sc, _ in factors if u in sc for v in sc})

            u = min(alive, key=lambda q: (width(q), q))
            alive.remove(u)
            touching = [f for f in factors if u in f[0]]
            factors = [f for f in factors if u not in f[0]]
            scope = tuple(sorted(set().union(*(set(sc) for sc, _ in touching))))
            joint = align(*touching[0], scope)
            for sc, t in touching[1:]:
                joint = joint + align(sc, t, scope)
            best = joint.max(axis=scope.index(u))
            rest = tuple(v for v in scope if v != u)
            if rest:
                factors.append((rest, best))
        marg = np.zeros(num)
        for _, t in factors:
            marg = marg + t
        return marg

    # fix caches in increasing id order: the first maximizer of each cache's
    # max-marginal, conditioned on the ids already fixed, is exactly the next
    # coordinate of the lexicographically smallest maximizing configuration
    assign: dict[int, int] = {}
    for v in range(net.m):
        assign[v] = int(np.argmax(max_marginal(v, pool)))
        conditioned = []
        for sc, t in pool:
            if v in sc:
                t = np.take(t, assign[v], axis=sc.index(v))
                sc = tuple(x for x in sc if x != v)
            if sc:
                conditioned.append((sc, t))
        pool = conditioned

    config = CacheConfiguration.from_lists(
        [[files[c] for c in combos[assign[j]]] for j in range(net.m)]
    )
    value = 0.0
    for i in range(net.n):
        cov = config.covered_files(net.user_caches[i])
        for kcol, f in enumerate(files):
            if f in cov:
                value += w[i, kcol]
    return config, float(value)


def exact_ilp(
    weights, net: BipartiteNetwork, capacity: int, budget: int = 10**7
) -> CacheConfiguration:
    """Exact integral placement maximizing the coverage objective.

    Restricted to the positive-weight support (empty support yields empty
    caches, the lexicographically-first choice); ties between optima resolve
    to the lexicographically-first flattened configuration.
    """
    w, files = support_weights(weights, net.n)
    config, _ = maximize_weighted_coverage(w, files, net, capacity, budget)
    return config
