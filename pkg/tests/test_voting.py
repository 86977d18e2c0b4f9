import numpy as np
import pytest

from flowsenate.election import FeatureElection
from flowsenate.flows import ALL_FEATURES, FeatureKind
from flowsenate.pcp import PcpConfig, pcp_decompose, vote_floor
from flowsenate.voting import (BinVerdict, FeatureVotes, Vote, cast_votes,
                               decide_bins, extract_votes, flag_features,
                               flagged_bins, require_all_features,
                               require_at_least, run_voting, vote_mask)


def spiky_counts(n_bins=24, n_senators=6, base=40.0, spike_bin=7,
                 spike_col=2, spike=400.0, seed=0):
    """Smooth rank-1-ish committee counts with one planted surprise."""
    rng = np.random.default_rng(seed)
    row = rng.uniform(0.5, 1.5, size=n_senators)
    col = rng.uniform(0.8, 1.2, size=n_bins)
    X = base * np.outer(col, row)
    X[spike_bin, spike_col] += spike
    return X


class TestVoteMask:
    def test_planted_spike_votes(self):
        X = spiky_counts()
        decomp = pcp_decompose(X)
        votes = vote_mask(X, decomp)
        assert votes[7, 2]
        assert votes.sum() <= 3   # spike dominates; little else votes

    def test_negative_entries_never_vote(self):
        X = spiky_counts(spike=-400.0)   # dip instead of burst
        decomp = pcp_decompose(X)
        votes = vote_mask(X, decomp)
        assert not votes[7, 2]

    def test_floor_silences_numeric_dust(self):
        X = np.outer(np.ones(10), np.arange(1, 5, dtype=float)) * 100
        decomp = pcp_decompose(X)
        assert not vote_mask(X, decomp).any()
        assert vote_floor(X) > 0


class TestRules:
    def test_require_all_features(self):
        assert require_all_features(frozenset(ALL_FEATURES))
        assert not require_all_features(frozenset(list(ALL_FEATURES)[:3]))

    def test_require_at_least(self):
        rule = require_at_least(2)
        assert rule(frozenset(list(ALL_FEATURES)[:2]))
        assert not rule(frozenset(list(ALL_FEATURES)[:1]))
        with pytest.raises(ValueError):
            require_at_least(0)
        with pytest.raises(ValueError):
            require_at_least(5)


class TestRecordLevel:
    def _votes_for(self, kind, bins_values):
        return [Vote(bin_index=b, feature=kind, value=v, magnitude=1.0)
                for b, v in bins_values]

    def test_extract_votes_ordering(self):
        X = spiky_counts()
        decomp = pcp_decompose(X)
        senators = np.arange(100, 106)
        votes = extract_votes(decomp, FeatureKind.DST_PORT, senators, X)
        keys = [(v.bin_index, v.value) for v in votes]
        assert keys == sorted(keys)
        assert all(v.magnitude > 0 for v in votes)

    def test_flag_features_and_decide(self):
        flags = {}
        votes = []
        for kind in ALL_FEATURES:
            votes += self._votes_for(kind, [(3, 9)])
        votes += self._votes_for(FeatureKind.SRC_AS, [(5, 1)])
        flags = flag_features(votes, n_bins=8)
        assert flags[3] == set(ALL_FEATURES)
        assert flags[5] == {FeatureKind.SRC_AS}

        verdicts = decide_bins(flags, votes)
        by_bin = {v.bin_index: v for v in verdicts}
        assert by_bin[3].anomalous
        assert not by_bin[5].anomalous
        assert [v.bin_index for v in verdicts] == sorted(by_bin)

    def test_relaxed_rule_flags_partial_agreement(self):
        votes = []
        for kind in list(ALL_FEATURES)[:3]:
            votes += self._votes_for(kind, [(2, 4)])
        flags = flag_features(votes, n_bins=4)
        strict = decide_bins(flags, votes)
        relaxed = decide_bins(flags, votes, rule=require_at_least(3))
        assert not [v for v in strict if v.anomalous]
        assert [v.bin_index for v in relaxed if v.anomalous] == [2]


class TestColumnar:
    def _election(self, kind, X):
        return FeatureElection(kind=kind, senators=np.arange(X.shape[1]) + 50,
                               counts=X)

    def test_cast_votes_matches_vote_mask(self):
        X = spiky_counts(seed=5)
        fv = cast_votes(self._election(FeatureKind.SRC_AS, X))
        expected = vote_mask(X, fv.decomposition)
        assert np.array_equal(fv.votes, expected)
        assert np.array_equal(fv.bins_with_votes, expected.any(axis=1))

    def test_flagged_bins_needs_every_feature(self):
        elections = {}
        for i, kind in enumerate(ALL_FEATURES):
            # same spike bin everywhere except the last feature
            spike_bin = 7 if kind is not FeatureKind.DST_PORT else 9
            elections[kind] = self._election(
                kind, spiky_counts(seed=i, spike_bin=spike_bin))
        votes = run_voting(elections)
        assert flagged_bins(votes, 24).size == 0
        relaxed = flagged_bins(votes, 24, min_features=3)
        assert 7 in relaxed.tolist()

    def test_all_features_agree(self):
        elections = {
            kind: self._election(kind, spiky_counts(seed=i))
            for i, kind in enumerate(ALL_FEATURES)
        }
        votes = run_voting(elections)
        assert flagged_bins(votes, 24).tolist() == [7]

    def test_empty_committee_votes_nothing(self):
        empty = FeatureElection(kind=FeatureKind.SRC_AS,
                                senators=np.zeros(0, dtype=np.int64),
                                counts=np.zeros((5, 0)))
        fv = cast_votes(empty)
        assert not fv.bins_with_votes.any()
