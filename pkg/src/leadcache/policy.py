"""Follow-the-perturbed-leader placement policy.

The policy keeps cumulative per-(user, file) request counts, perturbs them
once per slot with scaled Gaussian noise, and places files by maximizing the
clipped coverage objective over the perturbed counts, exactly or through the
relaxation-plus-rounding pipeline. The placement for slot t is decided before
slot t's requests are revealed, from the counts of slots 1..t-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .lp import build_lp, solve_lp
from .model import BipartiteNetwork, CacheConfiguration, VirtualAction
from .reward import fetch_count, reward, virtual_reward
from .rounding import (
    SurrogateEvaluator,
    exact_ilp,
    madow_round,
    pipage_round,
    replacement_round,
)
from .traces import IDLE, RequestTrace

MODES = ("exact", "pipage", "madow", "replacement")
GAMMA_MODES = ("fixed", "fresh")
RATE_MODES = ("integral", "relaxed")

# sub-stream tags for the seeded generators (documented scheme: every stream
# is default_rng((*seed, tag, ...)) so replays are reproducible)
_TAG_GAMMA_FIXED = 0
_TAG_GAMMA_FRESH = 1
_TAG_ROUNDING = 2


def seed_key(seed) -> tuple[int, ...]:
    """Flatten a seed (int or sequence of ints) for stream derivation."""
    items = seed if isinstance(seed, (tuple, list)) else (seed,)
    key = tuple(int(s) for s in items)
    if not key or any(s < 0 for s in key):
        raise ConfigurationError("seed must be a nonnegative int or ints")
    return key


def learning_rate(
    t: int, n: int, m: int, capacity: int, d: int, catalog: int, mode: str = "integral"
) -> float:
    """Perturbation scale for the slot-t decision.

    `integral` mode (default) targets the integral comparator class:
        eta_t = n^(3/4) * sqrt(t / (C * m)) / (2 d (ln(N/C) + 1))^(1/4).
    `relaxed` mode targets the fractionally-relaxed comparator, whose span
    bound m C d sqrt(4 ln(N n)) yields
        eta_t = n^(3/4) * sqrt(t) / ((m C d)^(1/2) * (4 ln(N n))^(1/4)).
    Logarithms are natural. Both scale like sqrt(t) and are strictly positive.
    """
    if t < 1:
        raise ConfigurationError("slot index t must be >= 1")
    if min(n, m, capacity, d) < 1 or catalog < capacity:
        raise ConfigurationError("need n, m, C, d >= 1 and catalog >= C")
    if mode == "integral":
        return (
            n**0.75
            * math.sqrt(t / (capacity * m))
            / (2.0 * d * (math.log(catalog / capacity) + 1.0)) ** 0.25
        )
    if mode == "relaxed":
        if catalog * n < 2:
            raise ConfigurationError("relaxed rate needs catalog * n >= 2")
        return (
            n**0.75
            * math.sqrt(t)
            / (math.sqrt(m * capacity * d) * (4.0 * math.log(catalog * n)) ** 0.25)
        )
    raise ConfigurationError(f"unknown rate mode {mode!r}")


@dataclass
class PolicyState:
    """Mutable policy state: counts, noise, and the slot clock.

    Attributes:
        net: the bipartite network played on.
        catalog: catalog size N.
        capacity: per-cache capacity C.
        mode: placement route, one of exact | pipage | madow | replacement.
        gamma_mode: `fixed` draws one noise table up front; `fresh` redraws
            per slot.
        rate_mode: learning-rate schedule, integral | relaxed.
        seed: base seed for all internal streams; a nonnegative int or a
            tuple of them (counter-scheme keys pass through unchanged).
        exact_support: include never-requested (user, file) pairs in the
            optimization (pure-noise entries); default restricts to pairs
            already requested.
        budget: enumeration guard for exact mode.
    """

    net: BipartiteNetwork
    catalog: int
    capacity: int
    mode: str = "pipage"
    gamma_mode: str = "fixed"
    rate_mode: str = "integral"
    seed: int | tuple = 0
    exact_support: bool = False
    budget: int = 10**7
    lp_tol: float = 1e-6
    t: int = field(default=0, init=False)
    counts: np.ndarray = field(init=False, repr=False)
    _gamma_fixed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if self.gamma_mode not in GAMMA_MODES:
            raise ConfigurationError(f"gamma mode must be one of {GAMMA_MODES}")
        if self.rate_mode not in RATE_MODES:
            raise ConfigurationError(f"rate mode must be one of {RATE_MODES}")
        self._seed_key = seed_key(self.seed)
        if self.catalog < self.capacity or self.capacity < 1:
            raise ConfigurationError("need catalog >= capacity >= 1")
        self.counts = np.zeros((self.net.n, self.catalog), dtype=np.float64)
        self._gamma_fixed = np.random.default_rng(
            (*self._seed_key, _TAG_GAMMA_FIXED)
        ).standard_normal((self.net.n, self.catalog))

    # ---------- noise and counts ----------

    def gamma(self, t: int) -> np.ndarray:
        """Noise table used for the slot-t decision."""
        if self.gamma_mode == "fixed":
            return self._gamma_fixed
        return np.random.default_rng(
            (*self._seed_key, _TAG_GAMMA_FRESH, t)
        ).standard_normal((self.net.n, self.catalog))

    def next_learning_rate(self) -> float:
        return learning_rate(
            self.t + 1,
            self.net.n,
            self.net.m,
            self.capacity,
            self.net.d,
            self.catalog,
            self.rate_mode,
        )

    def observe(self, x: np.ndarray) -> None:
        """Fold one slot of requests into the counts and advance the clock."""
        x = np.asarray(x)
        if x.shape != (self.net.n,):
            raise ConfigurationError(f"request slot must have shape ({self.net.n},)")
        active = np.nonzero(x != IDLE)[0]
        np.add.at(self.counts, (active, x[active].astype(np.int64)), 1.0)
        self.t += 1

    # ---------- decisions ----------

    def decide(self) -> tuple[CacheConfiguration, VirtualAction]:
        """Placement and virtual coverage for the upcoming slot.

        Uses only the counts observed so far plus the perturbation; the
        upcoming slot's requests play no part.
        """
        theta = perturbed_counts(self)
        weights = np.maximum(theta, 0.0)
        if weights.max(initial=0.0) <= 0.0:
            # nothing requested and no materialized noise: every placement
            # ties at zero, so take the lexicographically-first (empty) one
            config = CacheConfiguration.empty(self.net.m)
            return config, VirtualAction.from_pairs([])
        if self.mode == "exact":
            config = exact_ilp(weights, self.net, self.capacity, self.budget)
            return config, VirtualAction.from_configuration(self.net, config)
        frac = solve_lp(build_lp(weights, self.net, self.capacity), tol=self.lp_tol)
        round_seed = (*self._seed_key, _TAG_ROUNDING, self.t + 1)
        if self.mode == "pipage":
            evaluator = SurrogateEvaluator.for_allocation(weights, frac, self.net)
            config = pipage_round(frac, evaluator, self.net)
            return config, VirtualAction.from_configuration(self.net, config)
        if self.mode == "madow":
            return madow_round(frac, self.net, seed=round_seed)
        config = replacement_round(frac, self.net, seed=round_seed)
        return config, VirtualAction.from_configuration(self.net, config)


def perturbed_counts(state: PolicyState) -> np.ndarray:
    """Counts plus scaled noise for the upcoming slot's decision.

    Negative entries are retained (clipping happens downstream). With the
    default support restriction, entries of never-requested (user, file)
    pairs are not materialized and read 0; `exact_support` materializes the
    full table.
    """
    eta = state.next_learning_rate()
    theta = state.counts + eta * state.gamma(state.t + 1)
    if not state.exact_support:
        theta = np.where(state.counts > 0, theta, 0.0)
    return theta


def step(state: PolicyState, x: np.ndarray) -> CacheConfiguration:
    """Fold the just-revealed slot into the state, then place for the next.

    Mirrors the per-slot loop order: requests observed, counts updated, and
    the next slot's placement computed from the updated counts.
    """
    state.observe(x)
    config, _ = state.decide()
    return config


@dataclass
class PolicyResult:
    """Per-slot outcome of a full policy run."""

    hits: np.ndarray
    virtual_hits: np.ndarray
    fetches: np.ndarray
    configs: list[CacheConfiguration]

    @property
    def total_hits(self) -> int:
        return int(self.hits.sum())

    @property
    def total_fetches(self) -> int:
        return int(self.fetches.sum())

    def fetch_events(self) -> np.ndarray:
        """Boolean per-slot series: placement changed since the last slot."""
        return self.fetches > 0


def run_policy(
    net: BipartiteNetwork,
    trace: RequestTrace,
    capacity: int,
    mode: str = "pipage",
    gamma_mode: str = "fixed",
    rate_mode: str = "integral",
    seed: int = 0,
    exact_support: bool = False,
    budget: int = 10**7,
) -> PolicyResult:
    """Run the policy over a trace, scoring before each slot's update.

    For every slot: decide the placement from past counts, reveal the slot's
    requests, score hits (physical) and virtual hits (against the virtual
    coverage, never larger than the physical hits), count fetched files
    against the previous placement (slot 1 fetches from empty caches), then
    fold the requests into the counts.
    """
    if trace.n != net.n:
        raise ConfigurationError("trace and network disagree on the user count")
    state = PolicyState(
        net=net,
        catalog=trace.catalog,
        capacity=capacity,
        mode=mode,
        gamma_mode=gamma_mode,
        rate_mode=rate_mode,
        seed=seed,
        exact_support=exact_support,
        budget=budget,
    )
    horizon = trace.horizon
    hits = np.zeros(horizon, dtype=np.int64)
    virtual_hits = np.zeros(horizon, dtype=np.int64)
    fetches = np.zeros(horizon, dtype=np.int64)
    configs: list[CacheConfiguration] = []
    prev = CacheConfiguration.empty(net.m)
    for t in range(horizon):
        config, zhat = state.decide()
        x = trace.slot(t)
        hits[t] = reward(net, x, config)
        virtual_hits[t] = virtual_reward(x, zhat)
        fetches[t] = fetch_count(prev, config)
        configs.append(config)
        state.observe(x)
        prev = config
    return PolicyResult(
        hits=hits, virtual_hits=virtual_hits, fetches=fetches, configs=configs
    )
