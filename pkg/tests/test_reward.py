"""Hit scoring, hindsight benchmarks, regret and fetch accounting."""

import itertools
import math

import numpy as np
import pytest

from leadcache import (
    BipartiteNetwork,
    BudgetExceededError,
    CacheConfiguration,
    ConfigurationError,
    RequestTrace,
    VirtualAction,
    build_random_network,
    fetch_count,
    fetch_event,
    fetch_rate,
    gen_zipf,
    hindsight_opt_exact,
    hindsight_upper_bound,
    hit_rate,
    linear_reward,
    recall_distances,
    regret_series,
    replay_hits,
    reward,
    virtual_reward,
)


def net_two_caches_shared_user():
    # user 0 reaches both caches; user 1 reaches only cache 1
    return BipartiteNetwork.from_edges(2, 2, [(0, 0), (1, 0), (1, 1)])


def brute_force_hindsight(net, trace, capacity):
    counts = trace.counts()
    best = -1.0
    for combo in itertools.product(
        itertools.combinations(range(trace.catalog), min(capacity, trace.catalog)),
        repeat=net.m,
    ):
        config = CacheConfiguration.from_lists(combo)
        val = sum(
            counts[i, f]
            for i in range(net.n)
            for f in config.covered_files(net.user_caches[i])
        )
        best = max(best, float(val))
    return best


class TestRewards:
    def test_reward_counts_users_once(self):
        net = net_two_caches_shared_user()
        config = CacheConfiguration.from_lists([[3], [3]])
        # user 0 sees file 3 twice but scores one hit; user 1 misses file 4
        assert reward(net, np.array([3, 4]), config) == 1
        assert linear_reward(net, np.array([3, 4]), config) == 2

    def test_idle_users_never_hit(self):
        net = net_two_caches_shared_user()
        config = CacheConfiguration.from_lists([[0], [1]])
        assert reward(net, np.array([-1, -1]), config) == 0
        assert linear_reward(net, np.array([-1, 1]), config) == 1

    def test_virtual_reward_scores_covered_pairs(self):
        action = VirtualAction.from_pairs([(0, 3), (1, 2)])
        assert virtual_reward(np.array([3, 2]), action) == 2
        assert virtual_reward(np.array([3, 3]), action) == 1
        assert virtual_reward(np.array([-1, 2]), action) == 1

    def test_virtual_matches_physical_on_induced_action(self):
        # per-slot coverage inequality: the virtual action induced by a
        # placement scores exactly the physical hits
        rng = np.random.default_rng(2)
        for _ in range(30):
            n, m = int(rng.integers(1, 5)), int(rng.integers(1, 4))
            net = build_random_network(n, m, int(rng.integers(1, n + 1)),
                                       seed=int(rng.integers(2**31)))
            config = CacheConfiguration.from_lists(
                [rng.choice(6, size=2, replace=False) for _ in range(m)]
            )
            action = VirtualAction.from_configuration(net, config)
            x = rng.integers(-1, 6, size=n)
            assert virtual_reward(x, action) == reward(net, x, config)


class TestHindsight:
    def test_exact_matches_enumeration(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            n, m = int(rng.integers(1, 4)), int(rng.integers(1, 3))
            net = build_random_network(n, m, int(rng.integers(1, n + 1)),
                                       seed=int(rng.integers(2**31)))
            trace = gen_zipf(4, 0.9, n, 15, seed=int(rng.integers(2**31)))
            config, value = hindsight_opt_exact(net, trace, 2)
            assert np.isclose(value, brute_force_hindsight(net, trace, 2))
            assert np.isclose(value, replay_hits(net, trace, config).sum())

    def test_budget_refusal_names_the_alternative(self):
        net = build_random_network(4, 3, 2, seed=1)
        trace = gen_zipf(40, 1.0, 4, 10, seed=0)
        with pytest.raises(BudgetExceededError, match="hindsight_upper_bound"):
            hindsight_opt_exact(net, trace, 3, budget=100)

    def test_upper_bound_dominates_exact(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            n, m = int(rng.integers(1, 4)), int(rng.integers(1, 3))
            net = build_random_network(n, m, int(rng.integers(1, n + 1)),
                                       seed=int(rng.integers(2**31)))
            trace = gen_zipf(5, 1.1, n, 12, seed=int(rng.integers(2**31)))
            _, exact = hindsight_opt_exact(net, trace, 1)
            assert hindsight_upper_bound(net, trace, 1) >= exact - 1e-6

    def test_empty_trace(self):
        net = net_two_caches_shared_user()
        trace = RequestTrace(requests=np.full((3, 2), -1), catalog=4)
        config, value = hindsight_opt_exact(net, trace, 1)
        assert value == 0.0
        assert hindsight_upper_bound(net, trace, 1) == 0.0


class TestRegret:
    def test_alpha_regret_arithmetic(self):
        # totals as one-point series: alpha * 100 - 70
        alpha = 1 - 1 / math.e
        r = regret_series(70.0, 100.0, alpha=alpha)
        assert r.shape == (1,)
        assert np.isclose(r[0], alpha * 100 - 70)

    def test_series_cumulates(self):
        r = regret_series([1, 0, 2], [2, 2, 2])
        assert r.tolist() == [1.0, 3.0, 3.0]

    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            regret_series([1, 2], [1, 2, 3])


class TestFetchAccounting:
    def test_fetch_count_new_files_only(self):
        prev = CacheConfiguration.from_lists([[0, 1], [2]])
        new = CacheConfiguration.from_lists([[1, 3], [2]])
        assert fetch_count(prev, new) == 1
        assert fetch_event(prev, new)
        assert not fetch_event(new, new)
        # evictions alone do not fetch
        assert fetch_count(prev, CacheConfiguration.from_lists([[0], [2]])) == 0

    def test_first_slot_fetches_from_empty(self):
        empty = CacheConfiguration.empty(2)
        new = CacheConfiguration.from_lists([[0, 1], [2]])
        assert fetch_count(empty, new) == 3

    def test_rates(self):
        assert hit_rate(60, n=4, horizon=50) == 0.3
        assert fetch_rate(56, m=2, horizon=50) == 0.56
        assert hit_rate(0, n=4, horizon=0) == 0.0


class TestRecallDistances:
    def test_slot_major_gaps(self):
        # stream: f0 f1 f0 f2 f1 f0 -> gaps f0:2, f0:3, f1:3
        table = np.array([[0, 1], [0, 2], [1, 0]])
        trace = RequestTrace(requests=table, catalog=3)
        assert sorted(recall_distances(trace).tolist()) == [2, 3, 3]

    def test_idles_do_not_advance_positions(self):
        table = np.array([[0, -1], [-1, 0]])
        trace = RequestTrace(requests=table, catalog=1)
        assert recall_distances(trace).tolist() == [1]
