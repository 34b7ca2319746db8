"""Regret bounds, the adversarial placement construction, and bin-loading.

The upper bound instantiates the generic perturbed-leader guarantee with this
problem's reward span; the lower bound is the universal minimax barrier
max(sqrt(m n C T / 2 pi), d sqrt(m C T / 2 pi)) with the vanishing O(1/sqrt(T))
correction omitted. The locally-exclusive placement built from a cache
coloring realizes the comparator used in the lower-bound argument, whose core
quantity is the expected top-half load of a balls-into-bins experiment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .model import BipartiteNetwork, CacheColoring, CacheConfiguration
from .policy import learning_rate
from .rounding import approximation_factor


def regret_upper_bound(
    n: int, m: int, capacity: int, d: int, catalog: int, horizon: int
) -> float:
    """Expected-regret upper bound of the integral-rate policy at `horizon`.

    Evaluates eta_{T+1} * m C sqrt(2 d (ln(N/C) + 1)) + (n^(3/2) / 2) *
    sum_{t=1..T} 1/eta_t with the integral learning-rate schedule. Grows like
    sqrt(T) and scales as n^(3/4).
    """
    if horizon < 0:
        raise ConfigurationError("horizon must be >= 0")
    span = m * capacity * math.sqrt(2.0 * d * (math.log(catalog / capacity) + 1.0))
    head = learning_rate(horizon + 1, n, m, capacity, d, catalog, "integral") * span
    if horizon == 0:
        return head
    t = np.arange(1, horizon + 1, dtype=np.float64)
    base = learning_rate(1, n, m, capacity, d, catalog, "integral")
    inv_sum = float(np.sum(1.0 / (base * np.sqrt(t))))
    return head + 0.5 * n**1.5 * inv_sum


def regret_lower_bound(n: int, m: int, capacity: int, d: int, horizon: int) -> float:
    """Universal regret lower bound (leading terms only).

    Returns max(sqrt(m n C T / 2 pi), d * sqrt(m C T / 2 pi)); the
    Theta(1/sqrt(T)) correction of the full statement is omitted.
    """
    if min(n, m, capacity, d) < 1 or horizon < 0:
        raise ConfigurationError("need n, m, C, d >= 1 and horizon >= 0")
    user_term = math.sqrt(m * n * capacity * horizon / (2.0 * math.pi))
    degree_term = d * math.sqrt(m * capacity * horizon / (2.0 * math.pi))
    return max(user_term, degree_term)


def build_y_perp(
    net: BipartiteNetwork,
    coloring: CacheColoring,
    cumulative_counts: np.ndarray,
    capacity: int,
) -> CacheConfiguration:
    """Locally-exclusive placement from a coloring and file popularity.

    Colors are ranked by how many caches carry them (most frequent first);
    files are sorted by descending cumulative count and cut into 2*chi
    segments of C files each (the catalog size must equal 2*chi*C exactly).
    The cache with the r-th ranked color stores the r-th segment, so caches
    in any user's neighborhood hold pairwise disjoint segments and no user
    sees a file twice.
    """
    counts = np.asarray(cumulative_counts, dtype=np.float64)
    chi = coloring.num_colors
    if len(coloring.colors) != net.m:
        raise ConfigurationError("coloring does not match the network")
    if counts.ndim != 1 or counts.size != 2 * chi * capacity:
        raise ConfigurationError(
            f"catalog must be exactly 2 * chi * C = {2 * chi * capacity} files"
        )
    freq = np.zeros(chi, dtype=np.int64)
    for c in coloring.colors:
        freq[c] += 1
    rank_of_color = {
        int(c): r for r, c in enumerate(sorted(range(chi), key=lambda c: (-freq[c], c)))
    }
    order = sorted(range(counts.size), key=lambda f: (-counts[f], f))
    sets = []
    for j in range(net.m):
        r = rank_of_color[coloring.colors[j]]
        sets.append(order[r * capacity : (r + 1) * capacity])
    config = CacheConfiguration.from_lists(sets)
    config.validate(net.m, capacity, counts.size)
    return config


# ---------- balls into bins ----------


def top_load_closed_form(capacity: int, horizon: int) -> float:
    """Leading terms of E[top-C load] for T balls in 2C bins:
    T/2 + sqrt(C T / (2 pi))."""
    if capacity < 1 or horizon < 0:
        raise ConfigurationError("need capacity >= 1 and horizon >= 0")
    return horizon / 2.0 + math.sqrt(capacity * horizon / (2.0 * math.pi))


def top_load_monte_carlo(
    capacity: int, horizon: int, trials: int, seed: int = 0
) -> float:
    """Monte-Carlo mean of the top-C load of T balls thrown into 2C bins."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    bins = 2 * capacity
    loads = rng.multinomial(horizon, np.full(bins, 1.0 / bins), size=trials)
    loads.sort(axis=1)
    return float(loads[:, capacity:].sum(axis=1).mean())


# ---------- report ----------


@dataclass(frozen=True)
class BoundReport:
    """Evaluated bounds for one instance."""

    n: int
    m: int
    capacity: int
    d: int
    catalog: int
    horizon: int
    delta: int
    upper: float
    lower: float
    alpha: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "capacity": self.capacity,
            "d": self.d,
            "catalog": self.catalog,
            "horizon": self.horizon,
            "delta": self.delta,
            "upper_bound": self.upper,
            "lower_bound": self.lower,
            "approximation_factor": self.alpha,
        }


def bound_report(
    n: int, m: int, capacity: int, d: int, catalog: int, horizon: int, delta: int
) -> BoundReport:
    """Bundle the upper/lower regret bounds and the rounding factor."""
    return BoundReport(
        n=n,
        m=m,
        capacity=capacity,
        d=d,
        catalog=catalog,
        horizon=horizon,
        delta=delta,
        upper=regret_upper_bound(n, m, capacity, d, catalog, horizon),
        lower=regret_lower_bound(n, m, capacity, d, horizon),
        alpha=approximation_factor(delta),
    )
