"""Regret bounds, the locally-exclusive placement, and bin loading."""

import math

import numpy as np
import pytest

from leadcache import (
    BipartiteNetwork,
    CacheColoring,
    ConfigurationError,
    RequestTrace,
    bound_report,
    build_random_network,
    build_y_perp,
    greedy_cache_coloring,
    learning_rate,
    linear_reward,
    regret_lower_bound,
    regret_upper_bound,
    reward,
    top_load_closed_form,
    top_load_monte_carlo,
)


def upper_bound_reference(n, m, c, d, catalog, horizon):
    """Independent term-by-term evaluation of the upper-bound expression."""
    span = m * c * math.sqrt(2 * d * (math.log(catalog / c) + 1))
    total = learning_rate(horizon + 1, n, m, c, d, catalog) * span
    for t in range(1, horizon + 1):
        total += 0.5 * n**1.5 / learning_rate(t, n, m, c, d, catalog)
    return total


class TestUpperBound:
    def test_matches_term_by_term_reference(self):
        for args in [(4, 2, 1, 2, 8, 50), (16, 1, 2, 2, 8, 200), (2, 3, 2, 2, 12, 77)]:
            assert np.isclose(
                regret_upper_bound(*args), upper_bound_reference(*args), rtol=1e-12
            )

    def test_golden_value_minimal_instance(self):
        # n=m=C=d=1, N=1, T=100; pinned against the reference evaluation
        value = regret_upper_bound(1, 1, 1, 1, 1, 100)
        assert np.isclose(value, upper_bound_reference(1, 1, 1, 1, 1, 100))
        # head: eta_101 * sqrt(2) = sqrt(101) * 2^(1/4) ~ 11.9514;
        # tail: 0.5 * 2^(1/4) * sum_{t<=100} t^(-1/2) ~ 11.0534
        assert np.isclose(value, 23.00482816028691, atol=1e-10)

    def test_doubling_horizon_scales_sqrt2(self):
        base = regret_upper_bound(4, 2, 1, 2, 16, 400)
        assert abs(regret_upper_bound(4, 2, 1, 2, 16, 800) / base - math.sqrt(2)) < 0.02

    def test_user_scaling_power(self):
        # the bound is a sum of an eta-linear head and an n^(3/2)/eta tail,
        # both proportional to n^(3/4) once eta's own n^(3/4) factor cancels
        base = regret_upper_bound(2, 2, 1, 2, 16, 300)
        assert np.isclose(regret_upper_bound(32, 2, 1, 2, 16, 300), 8 * base, rtol=1e-9)

    def test_zero_horizon_keeps_head_term(self):
        assert regret_upper_bound(2, 1, 1, 1, 4, 0) > 0


class TestLowerBound:
    def test_trivial_points(self):
        t = int(round(2 * math.pi))  # formula evaluated at T=2*pi exactly below
        assert np.isclose(
            regret_lower_bound(1, 1, 1, 1, t), math.sqrt(t / (2 * math.pi))
        )
        # d=2 makes the degree term dominate: 2 * sqrt(T / 2pi)
        assert np.isclose(
            regret_lower_bound(1, 1, 1, 2, t), 2 * math.sqrt(t / (2 * math.pi))
        )

    def test_reference_instance(self):
        # n=30, m=10, C=20, d=8, T=1e4: user term sqrt(6e7 / 2pi) ~ 3090.19,
        # but the degree term 8 * sqrt(2e6 / 2pi) ~ 4513.52 dominates
        user_term = math.sqrt(6e7 / (2 * math.pi))
        degree_term = 8 * math.sqrt(10 * 20 * 1e4 / (2 * math.pi))
        assert np.isclose(user_term, 3090.1936, atol=1e-3)
        got = regret_lower_bound(30, 10, 20, 8, 10**4)
        assert np.isclose(got, max(user_term, degree_term), rtol=1e-12)
        assert np.isclose(got, 4513.5164, atol=1e-3)

    def test_guards(self):
        with pytest.raises(ConfigurationError):
            regret_lower_bound(0, 1, 1, 1, 10)
        with pytest.raises(ConfigurationError):
            regret_lower_bound(1, 1, 1, 1, -1)


class TestYPerp:
    def test_single_color_every_cache_top_file(self):
        # chi=1: disjoint caches all store the most requested file
        net = BipartiteNetwork.from_edges(2, 2, [(0, 0), (1, 1)])
        coloring = greedy_cache_coloring(net)
        assert coloring.num_colors == 1
        config = build_y_perp(net, coloring, np.array([5.0, 3.0]), capacity=1)
        assert config.sets == (frozenset({0}), frozenset({1 - 1}))

    def test_two_colors_rank_by_frequency(self):
        # caches 0,1 share a user (colors 0,1); cache 2 rides alone (color 0)
        net = BipartiteNetwork.from_edges(3, 3, [(0, 0), (0, 1), (1, 1), (2, 2)])
        coloring = greedy_cache_coloring(net)
        assert coloring.num_colors == 2
        counts = np.array([2.0, 9.0, 4.0, 1.0])  # popularity order: 1, 2, 0, 3
        config = build_y_perp(net, coloring, counts, capacity=1)
        # color 0 covers two caches -> rank 0 -> top file (id 1)
        assert config.sets[0] == frozenset({1})
        assert config.sets[2] == frozenset({1})
        # color 1 -> rank 1 -> second file (id 2)
        assert config.sets[1] == frozenset({2})

    def test_local_exclusivity_makes_rewards_agree(self):
        rng = np.random.default_rng(6)
        for _ in range(10):
            n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
            net = build_random_network(n, m, int(rng.integers(1, n + 1)),
                                       seed=int(rng.integers(2**31)))
            coloring = greedy_cache_coloring(net)
            capacity = int(rng.integers(1, 3))
            catalog = 2 * coloring.num_colors * capacity
            counts = rng.uniform(0, 10, size=catalog)
            config = build_y_perp(net, coloring, counts, capacity)
            trace = np.array(
                [rng.integers(0, catalog, size=n) for _ in range(8)]
            )
            for row in trace:
                assert reward(net, row, config) == linear_reward(net, row, config)

    def test_catalog_size_must_match(self):
        net = BipartiteNetwork.from_edges(1, 2, [(0, 0), (1, 0)])
        coloring = greedy_cache_coloring(net)  # chi = 2
        with pytest.raises(ConfigurationError):
            build_y_perp(net, coloring, np.ones(3), capacity=1)


class TestTopLoad:
    def test_closed_form_values(self):
        assert np.isclose(
            top_load_closed_form(1, 1000), 500 + math.sqrt(1000 / (2 * math.pi))
        )
        assert np.isclose(top_load_closed_form(1, 1000), 512.6157, atol=1e-4)

    def test_monte_carlo_matches_closed_form(self):
        # modest trial count here; the full acceptance check uses 1e4 trials
        mc = top_load_monte_carlo(1, 1000, trials=4000, seed=3)
        assert abs(mc - top_load_closed_form(1, 1000)) < 2.0

    def test_monte_carlo_at_least_half(self):
        mc = top_load_monte_carlo(2, 400, trials=2000, seed=1)
        assert mc >= 200.0
        assert mc >= top_load_closed_form(2, 400) - 2.0


class TestBoundReport:
    def test_report_bundles_everything(self):
        report = bound_report(4, 2, 1, 2, 8, 100, delta=2)
        doc = report.to_dict()
        assert doc["upper_bound"] == regret_upper_bound(4, 2, 1, 2, 8, 100)
        assert doc["lower_bound"] == regret_lower_bound(4, 2, 1, 2, 100)
        assert doc["approximation_factor"] == 0.75
        assert doc["n"] == 4 and doc["horizon"] == 100
