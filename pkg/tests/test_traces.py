"""Trace container, CSV round-trips, and synthetic generators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from leadcache import (
    CatalogOverflowError,
    ConfigurationError,
    RequestTrace,
    TraceParseError,
    gen_adversarial_uniform,
    gen_renewal,
    gen_zipf,
    load_trace,
    save_trace,
    split_intervals,
    zipf_weights,
)
from leadcache.traces import IDLE


class TestRequestTrace:
    def test_shape_and_immutability(self):
        trace = RequestTrace(requests=np.array([[0, 1], [2, -1]]), catalog=3)
        assert trace.horizon == 2 and trace.n == 2
        with pytest.raises(ValueError):
            trace.requests[0, 0] = 1

    def test_file_id_range_checked(self):
        with pytest.raises(CatalogOverflowError):
            RequestTrace(requests=np.array([[3]]), catalog=3)
        with pytest.raises(CatalogOverflowError):
            RequestTrace(requests=np.array([[-2]]), catalog=3)

    def test_counts_skip_idles(self):
        trace = RequestTrace(requests=np.array([[0, 1], [0, -1], [2, 1]]), catalog=3)
        counts = trace.counts()
        assert counts.tolist() == [[2, 0, 1], [0, 2, 0]]
        assert trace.counts(upto=1).tolist() == [[1, 0, 0], [0, 1, 0]]


class TestRawCsv:
    def test_round_robin_assignment(self, tmp_path):
        # 6 rows over n=3 users: row k -> slot k//3, user k%3, ids densified
        path = tmp_path / "raw.csv"
        path.write_text(
            "seq,file_id,size\n"
            "0,500,10\n1,300,10\n2,500,10\n3,42,10\n4,300,10\n5,500,10\n"
        )
        trace = load_trace(path, n=3, catalog=5, assignment="round_robin")
        assert trace.requests.tolist() == [[0, 1, 0], [2, 1, 0]]

    def test_partial_last_slot_idles(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("seq,file_id\n0,7\n1,7\n2,9\n3,7\n")
        trace = load_trace(path, n=3, catalog=2, assignment="round_robin")
        assert trace.requests.tolist() == [[0, 0, 1], [0, IDLE, IDLE]]

    def test_catalog_overflow(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("seq,file_id\n0,10\n1,20\n2,30\n")
        with pytest.raises(CatalogOverflowError):
            load_trace(path, n=1, catalog=2, assignment="round_robin")

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "raw.csv"
        path.write_text("seq,file_id\n0,5\n1,notafile\n")
        with pytest.raises(TraceParseError) as err:
            load_trace(path, n=1, catalog=5, assignment="round_robin")
        assert err.value.lineno == 3


class TestAssignedCsv:
    def test_by_column_round_trip(self, tmp_path):
        table = np.array([[0, 1, -1], [2, -1, 1], [-1, -1, -1], [0, 0, 0]])
        trace = RequestTrace(requests=table, catalog=3)
        path = tmp_path / "assigned.csv"
        save_trace(trace, path)
        again = load_trace(path, n=3, catalog=3, assignment="by_column")
        assert again.requests.tolist() == table.tolist()

    def test_trailing_idle_slots_do_not_round_trip(self, tmp_path):
        trace = RequestTrace(requests=np.array([[0], [-1], [-1]]), catalog=1)
        path = tmp_path / "assigned.csv"
        save_trace(trace, path)
        again = load_trace(path, n=1, catalog=1, assignment="by_column")
        assert again.horizon == 1

    def test_duplicate_user_slot_rejected(self, tmp_path):
        path = tmp_path / "assigned.csv"
        path.write_text("t,user_id,file_id\n0,0,1\n0,0,2\n")
        with pytest.raises(TraceParseError):
            load_trace(path, n=1, catalog=3, assignment="by_column")

    def test_file_id_out_of_range(self, tmp_path):
        path = tmp_path / "assigned.csv"
        path.write_text("t,user_id,file_id\n0,0,9\n")
        with pytest.raises(CatalogOverflowError):
            load_trace(path, n=1, catalog=3, assignment="by_column")

    def test_unknown_assignment(self, tmp_path):
        path = tmp_path / "assigned.csv"
        path.write_text("t,user_id,file_id\n0,0,0\n")
        with pytest.raises(ConfigurationError):
            load_trace(path, n=1, catalog=1, assignment="columnwise")


class TestZipf:
    def test_weights_normalized_and_decreasing(self):
        w = zipf_weights(5, 1.2)
        assert w.shape == (5,)
        assert np.isclose(w.sum(), 1.0)
        assert (np.diff(w) < 0).all()
        # alpha=0 degenerates to uniform
        assert np.allclose(zipf_weights(4, 0.0), 0.25)

    def test_empirical_frequencies_match_weights(self):
        catalog, horizon, n = 6, 4000, 3
        trace = gen_zipf(catalog, 1.0, n, horizon, seed=5)
        w = zipf_weights(catalog, 1.0)
        freq = np.bincount(trace.requests.ravel(), minlength=catalog) / (horizon * n)
        assert np.abs(freq - w).max() < 0.02

    def test_deterministic_in_seed(self):
        a = gen_zipf(10, 1.2, 2, 50, seed=3)
        b = gen_zipf(10, 1.2, 2, 50, seed=3)
        assert (a.requests == b.requests).all()


class TestRenewal:
    def test_geometric_rates_recovered(self):
        n, catalog, horizon = 2, 3, 6000
        rates = np.array([[0.3, 0.1, 0.0], [0.0, 0.0, 0.8]])
        trace = gen_renewal(catalog, n, horizon, "geometric", {"rates": rates}, seed=1)
        for i in range(n):
            col = trace.requests[:, i]
            for f in range(catalog):
                assert abs((col == f).mean() - rates[i, f]) < 0.03

    def test_geometric_rejects_oversubscribed_rates(self):
        with pytest.raises(ConfigurationError):
            gen_renewal(2, 1, 10, "geometric", {"rates": np.array([[0.7, 0.7]])})

    def test_uniform_range_spacing(self):
        active = np.zeros((1, 2), dtype=bool)
        active[0, 0] = True
        trace = gen_renewal(
            2, 1, 500, "uniform_range", {"low": 3, "high": 5, "active": active}, seed=2
        )
        hits = np.nonzero(trace.requests[:, 0] == 0)[0]
        gaps = np.diff(hits)
        assert gaps.min() >= 3 and gaps.max() <= 5

    def test_collision_defers_not_drops(self):
        # both files active with deterministic spacing 2: every slot is used
        active = np.ones((1, 2), dtype=bool)
        trace = gen_renewal(
            2, 1, 40, "uniform_range", {"low": 2, "high": 2, "active": active}, seed=0
        )
        col = trace.requests[2:, 0]
        assert (col != IDLE).all()
        assert (np.sort(np.bincount(col, minlength=2)) > 0).all()


class TestAdversarial:
    def test_common_file_and_catalog(self):
        trace = gen_adversarial_uniform(k=4, n=3, horizon=200, seed=0)
        assert trace.catalog == 8
        assert (trace.requests == trace.requests[:, :1]).all()

    def test_roughly_uniform(self):
        trace = gen_adversarial_uniform(k=2, n=1, horizon=8000, seed=1)
        freq = np.bincount(trace.requests[:, 0], minlength=4) / 8000
        assert np.abs(freq - 0.25).max() < 0.03


class TestSplitIntervals:
    def test_equal_chunks_last_absorbs_remainder(self):
        trace = gen_zipf(4, 1.0, 2, 11, seed=0)
        parts = split_intervals(trace, 3)
        assert [p.horizon for p in parts] == [3, 3, 5]
        glued = np.vstack([p.requests for p in parts])
        assert (glued == trace.requests).all()

    def test_invalid_counts(self):
        trace = gen_zipf(4, 1.0, 2, 5, seed=0)
        with pytest.raises(ConfigurationError):
            split_intervals(trace, 0)
        with pytest.raises(ConfigurationError):
            split_intervals(trace, 6)

    @given(st.integers(1, 12), st.integers(1, 12))
    @settings(max_examples=40, deadline=None)
    def test_split_preserves_slots(self, horizon, count):
        if count > horizon:
            count = horizon
        trace = gen_zipf(3, 0.8, 2, horizon, seed=7)
        parts = split_intervals(trace, count)
        assert sum(p.horizon for p in parts) == horizon
        glued = np.vstack([p.requests for p in parts])
        assert (glued == trace.requests).all()
