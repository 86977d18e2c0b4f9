import math

import numpy as np
import pytest

from flowsenate.flows import (ALL_FEATURES, FeatureKind, FlowTable, Heuristic,
                              bin_indices)
from flowsenate.decision import ThresholdConfig
from flowsenate.pipeline import (PipelineConfig, detect, detect_both,
                                 diagnose_flagged, sweep_sparsity)
from tests.test_flows import rec

ATTACKS = [(10, "scan", 140), (20, "dos", 80), (30, "ddos", 260)]


def attack_diagnoses(run):
    return [(d.bin_index, d.verdict.value, d.intensity)
            for d in run.diagnoses if d.verdict.value != "false_positive"]


class TestConfig:
    def test_params_echo_scale_by_default(self):
        p = PipelineConfig().params("h1")
        assert p["sparsity_scale"] == 2.0
        assert "lambda" not in p
        assert p["heuristic"] == "h1"
        assert p["threshold_ddos"] == 100.0

    def test_params_echo_lambda_when_overridden(self):
        p = PipelineConfig(lambda_override=0.05).params()
        assert p["lambda"] == 0.05
        assert "sparsity_scale" not in p
        assert "heuristic" not in p

    def test_derived_configs(self):
        cfg = PipelineConfig(top_k=12, sparsity_scale=3.0, alpha=2, beta=128)
        assert cfg.pcp_config().C == 3.0
        pf = cfg.prefilter_config(Heuristic.H2)
        assert pf.heuristic is Heuristic.H2
        assert pf.alpha == 2 and pf.beta == 128

    def test_bad_bin_width_rejected_at_detect(self, small_trace):
        _, table, _ = small_trace
        with pytest.raises(ValueError):
            detect(table, Heuristic.H1, PipelineConfig(bin_width=0))


class TestDetect:
    def test_run_metadata(self, small_trace):
        _, table, _ = small_trace
        run = detect(table, Heuristic.H1)
        assert run.heuristic is Heuristic.H1
        assert run.n_bins == 48
        assert run.bin_width == 900
        assert run.trace_start == int(table.start_time.min())
        assert 0 < run.filtered_flows < len(table)
        assert set(run.elections) == set(ALL_FEATURES)
        assert set(run.votes) == set(ALL_FEATURES)
        assert run.flagged == sorted(run.flagged)
        assert [d.bin_index for d in run.diagnoses] == run.flagged

    @pytest.mark.parametrize("heuristic", [Heuristic.H1, Heuristic.H2])
    def test_finds_planted_attacks(self, small_trace, heuristic):
        _, table, truths = small_trace
        run = detect(table, heuristic)
        assert {t.bin_index for t in truths} <= set(run.flagged)
        assert attack_diagnoses(run) == ATTACKS

    def test_extra_flagged_bins_are_cleared(self, small_trace):
        _, table, truths = small_trace
        run = detect(table, Heuristic.H1)
        attack_bins = {t.bin_index for t in truths}
        for d in run.diagnoses:
            if d.bin_index not in attack_bins:
                assert d.verdict.value == "false_positive"
                assert d.witness is None

    def test_deterministic(self, small_trace):
        _, table, _ = small_trace
        a = detect(table, Heuristic.H1)
        b = detect(table, Heuristic.H1)
        assert a.flagged == b.flagged
        assert a.diagnoses == b.diagnoses
        for k in ALL_FEATURES:
            assert np.array_equal(a.votes[k].votes, b.votes[k].votes)
            assert np.array_equal(a.votes[k].decomposition.A_matrix,
                                  b.votes[k].decomposition.A_matrix)

    def test_detect_both_shares_bin_numbering(self, small_trace):
        _, table, _ = small_trace
        h1, h2 = detect_both(table)
        assert h1.heuristic is Heuristic.H1 and h2.heuristic is Heuristic.H2
        assert (h1.n_bins, h1.trace_start) == (h2.n_bins, h2.trace_start)
        assert attack_diagnoses(h1) == attack_diagnoses(h2) == ATTACKS

    def test_intensity_on_raw_matches_for_isolated_attackers(self, small_trace):
        # injected aggregates share nothing with background traffic, so
        # widening the diagnosis population must not change the counts
        _, table, _ = small_trace
        run = detect(table, Heuristic.H1, PipelineConfig(intensity_on_raw=True))
        assert attack_diagnoses(run) == ATTACKS

    def test_normalized_columns_still_find_attacks(self, small_trace):
        _, table, _ = small_trace
        run = detect(table, Heuristic.H1, PipelineConfig(normalize_columns=True))
        assert attack_diagnoses(run) == ATTACKS


class TestSweep:
    def test_grid_echo_and_consistency(self, small_trace):
        _, table, _ = small_trace
        pts = sweep_sparsity(table, Heuristic.H1, [2.0, 2.5])
        assert [p.sparsity_scale for p in pts] == [2.0, 2.5]
        assert pts[0].flagged == detect(table, Heuristic.H1).flagged

    def test_lambda_scales_linearly(self, small_trace):
        _, table, _ = small_trace
        pts = sweep_sparsity(table, Heuristic.H1, [2.0, 3.0])
        for k in ALL_FEATURES:
            a, b = pts[0].lam_by_feature[k], pts[1].lam_by_feature[k]
            assert a > 0
            assert math.isclose(b, a * 1.5, rel_tol=1e-12)

    def test_flagged_sets_shrink_with_scale(self, small_trace):
        _, table, _ = small_trace
        pts = sweep_sparsity(table, Heuristic.H1, [2.0, 2.5, 3.0])
        for lo, hi in zip(pts, pts[1:]):
            assert set(hi.flagged) <= set(lo.flagged)
        assert {10, 20, 30} <= set(pts[-1].flagged)


class TestDiagnoseFlagged:
    def test_bins_sliced_exactly(self):
        # one source hammering one destination, bins interleaved; the peak
        # pair volume of each diagnosis equals that bin's population iff
        # slicing is exact
        recs = []
        for i, t in enumerate([0, 1, 0, 2, 1, 0]):
            recs.append(rec(start=t * 900 + i, src_ip="10.0.0.9",
                            src_as=100, dst_as=200, dst_port=80))
        table = FlowTable.from_records(recs)
        bins, _, _ = bin_indices(table, 900)
        senators = {
            FeatureKind.SRC_AS: np.array([100]),
            FeatureKind.DST_AS: np.array([200]),
            FeatureKind.SRC_PORT: np.array([1234]),
            FeatureKind.DST_PORT: np.array([80]),
        }
        th = ThresholdConfig(ddos=1e9, dos=0.5, scan=1e9)
        out = diagnose_flagged(table, bins, [0, 1, 2], senators, th)
        assert [(d.bin_index, d.intensity) for d in out] == \
            [(0, 3), (1, 2), (2, 1)]
        assert all(d.verdict.value == "dos" for d in out)
