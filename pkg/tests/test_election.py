import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowsenate.election import (ElectionConfig, build_histogram, elect,
                                 elect_senators, fit_power_law,
                                 normalized_residual, per_bin_top_values,
                                 run_election, senator_counts,
                                 sparse_approximate, tail_norm_bound)
from flowsenate.flows import FeatureKind, FlowTable, Protocol
from tests.test_flows import rec


def hist_from_counts(counts, feature=FeatureKind.DST_PORT):
    """Histogram with the given count multiset on distinct port values."""
    records = []
    for value, count in enumerate(counts):
        records.extend(rec(dst_port=1000 + value) for _ in range(count))
    return build_histogram(records, feature)


class TestHistogram:
    def test_counts_and_sorting(self):
        records = [rec(dst_port=80), rec(dst_port=80), rec(dst_port=443)]
        h = build_histogram(records, FeatureKind.DST_PORT)
        assert h.entries == ((80, 2), (443, 1))
        assert h.total_flows == 3

    def test_empty(self):
        h = build_histogram([], FeatureKind.SRC_AS)
        assert h.entries == () and h.total_flows == 0

    def test_tie_breaks_by_ascending_value(self):
        records = [rec(dst_port=9), rec(dst_port=9), rec(dst_port=4), rec(dst_port=4)]
        h = build_histogram(records, FeatureKind.DST_PORT)
        assert h.entries == ((4, 2), (9, 2))


class TestSparseApproximation:
    def test_residual_of_5321_at_k2(self):
        h = hist_from_counts([5, 3, 2, 1])
        approx = sparse_approximate(h, K=2)
        assert approx.residual == pytest.approx(math.sqrt(5))
        assert [c for _, c in approx.kept] == [5, 3]

    def test_k_at_least_n_gives_zero_residual(self):
        h = hist_from_counts([4, 2, 1])
        assert sparse_approximate(h, K=3).residual == 0.0
        assert sparse_approximate(h, K=10).residual == 0.0

    def test_inverse_rank_counts_stay_under_bound(self):
        # counts 100/i for i=1..1000; scaling exponent 1 means p=1, s=1/2
        tail = math.sqrt(sum((100.0 / i) ** 2 for i in range(21, 1001)))
        bound = tail_norm_bound(R=100.0, p=1.0, K=20)
        assert bound == pytest.approx(math.sqrt(2) * 100 / math.sqrt(20))
        assert bound == pytest.approx(31.6227766, abs=1e-6)
        assert tail <= bound

    def test_residual_monotone_in_k(self):
        h = hist_from_counts([9, 7, 4, 4, 2, 1, 1])
        residuals = [sparse_approximate(h, K=k).residual for k in range(1, 8)]
        assert all(a >= b for a, b in zip(residuals, residuals[1:]))

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            sparse_approximate(hist_from_counts([3, 1]), K=0)


class TestTailBound:
    def test_validation(self):
        with pytest.raises(ValueError):
            tail_norm_bound(10.0, 0.0, 5)
        with pytest.raises(ValueError):
            tail_norm_bound(10.0, 2.5, 5)
        with pytest.raises(ValueError):
            tail_norm_bound(10.0, 1.0, 0)

    @settings(max_examples=200, deadline=None)
    @given(
        R=st.floats(10.0, 1e4),
        p=st.floats(0.3, 1.0, exclude_min=True),
        n=st.integers(100, 2000),
        K=st.sampled_from([1, 5, 20, 100]),
    )
    def test_exact_power_law_histograms_respect_bound(self, R, p, n, K):
        ranks = np.arange(1, n + 1, dtype=np.float64)
        values = R * ranks ** (-1.0 / p)
        tail = float(np.sqrt((values[K:] ** 2).sum()))
        assert tail <= tail_norm_bound(R, p, K)


class TestPowerLawFit:
    def test_recovers_exact_exponent(self):
        counts = 500.0 * np.arange(1, 301, dtype=np.float64) ** (-1 / 0.7)
        fit = fit_power_law(counts)
        assert not fit.degenerate
        assert fit.p == pytest.approx(0.7, abs=0.02)
        assert fit.R == pytest.approx(500.0, rel=0.05)

    def test_degenerate_on_flat_counts(self):
        assert fit_power_law(np.array([5.0, 5.0, 5.0])).degenerate


class TestElection:
    def test_union_across_bins(self):
        a = sparse_approximate(hist_from_counts([5, 3]), K=2)
        b = sparse_approximate(hist_from_counts([2, 2, 2]), K=2)
        union = elect_senators([a, b])
        assert union == set(a.kept_values) | set(b.kept_values)

    def test_single_bin_is_its_top_k(self):
        a = sparse_approximate(hist_from_counts([5, 3, 1]), K=2)
        assert elect_senators([a]) == set(a.kept_values)

    def test_columnar_top_values_tie_keeps_smaller_value(self):
        values = np.array([7, 7, 7, 3, 3, 9, 9], dtype=np.int64)
        bins = np.zeros(7, dtype=np.int64)
        top = per_bin_top_values(values, bins, k=2)
        assert top[0].tolist() == [7, 3]   # 3 and 9 tie on count; 3 wins

    def test_columnar_matches_record_level(self):
        rng = np.random.default_rng(8)
        starts = rng.integers(0, 4 * 900, size=300)
        ports = rng.choice([80, 443, 22, 53, 8080, 31337], size=300,
                           p=[0.4, 0.25, 0.15, 0.1, 0.07, 0.03])
        records = [rec(start=int(s), dst_port=int(v))
                   for s, v in zip(starts, ports)]
        table = FlowTable.from_records(records)
        bins = (table.start_time // 900).astype(np.int64)

        per_bin = {}
        for t in range(4):
            members = [r for r, b in zip(records, bins) if b == t]
            h = build_histogram(members, FeatureKind.DST_PORT)
            per_bin[t] = sparse_approximate(h, K=3)
        expected = elect_senators(per_bin.values())

        got = elect(table.dst_port.astype(np.int64), bins, k=3)
        assert set(got.tolist()) == expected

    def test_senator_counts_matches_naive_recount(self):
        rng = np.random.default_rng(21)
        n = 500
        values = rng.integers(1, 12, size=n).astype(np.int64)
        bins = rng.integers(0, 6, size=n).astype(np.int64)
        senators = np.unique(rng.integers(1, 12, size=5).astype(np.int64))
        counts = senator_counts(values, bins, 6, senators)
        for t in range(6):
            for j, s in enumerate(senators.tolist()):
                naive = int(((values == s) & (bins == t)).sum())
                assert counts[t, j] == naive

    def test_absent_value_has_zero_entry(self):
        values = np.array([5, 5], dtype=np.int64)
        bins = np.array([0, 0], dtype=np.int64)
        counts = senator_counts(values, bins, 2, np.array([5, 7]))
        assert counts[0].tolist() == [2.0, 0.0]
        assert counts[1].tolist() == [0.0, 0.0]

    def test_run_election_shapes(self):
        records = [rec(start=s, src_as=a, dst_as=a + 1, src_port=a + 2,
                       dst_port=a + 3)
                   for s in (0, 900, 1800) for a in (10, 20, 30)]
        table = FlowTable.from_records(records)
        bins = (table.start_time // 900).astype(np.int64)
        result = run_election(table, bins, 3, ElectionConfig(top_k=2))
        for kind, election in result.items():
            assert election.counts.shape == (3, election.senators.size)
            assert (election.counts >= 0).all()
            # column sums recount the trace-wide frequency of each senator
            values = table.feature(kind).astype(np.int64)
            for j, member in enumerate(election.senators.tolist()):
                assert election.counts[:, j].sum() == (values == member).sum()


class TestNormalizedResidual:
    def test_matches_direct_ratio(self):
        h = hist_from_counts([10, 5, 3, 2])
        expected = math.sqrt(3 * 3 + 2 * 2) / 10
        assert normalized_residual(h, K=2) == pytest.approx(expected)
