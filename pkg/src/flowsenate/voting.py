"""Voting stage: turn count matrices into per-bin anomaly flags.

Each feature's senator count matrix is split into a low-rank part (routine
traffic) and a sparse part (abrupt deviations). A strictly positive sparse
entry above a small numerical floor is a vote: senator value v saw a surge
in bin t. A feature is flagged in a bin when any of its senators votes
there; by default a bin is anomalous only when all four features are
flagged, which suppresses single-feature noise. The rule is pluggable
(e.g. three-of-four) but the all-features form is the default.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .election import FeatureElection
from .flows import ALL_FEATURES, FeatureKind
from .pcp import PcpConfig, PcpDecomposition, pcp_decompose, vote_floor


@dataclass(frozen=True)
class Vote:
    """One strictly positive sparse-matrix entry: (bin, feature value)."""

    bin_index: int
    feature: FeatureKind
    value: int
    magnitude: float


@dataclass(frozen=True)
class BinVerdict:
    bin_index: int
    flagged_features: frozenset[FeatureKind]
    anomalous: bool
    votes: tuple[Vote, ...] = ()


def require_all_features(flagged: frozenset[FeatureKind]) -> bool:
    return flagged == frozenset(ALL_FEATURES)


def require_at_least(k: int) -> Callable[[frozenset[FeatureKind]], bool]:
    if not 1 <= k <= len(ALL_FEATURES):
        raise ValueError(f"rule needs 1..{len(ALL_FEATURES)} features, got {k}")
    return lambda flagged: len(flagged) >= k


def extract_votes(decomp: PcpDecomposition, feature: FeatureKind,
                  senators: np.ndarray, counts: np.ndarray) -> list[Vote]:
    """Votes from one decomposition, ordered by (bin, value)."""
    mask = vote_mask(counts, decomp)
    rows, cols = np.nonzero(mask)
    return [
        Vote(bin_index=int(t), feature=feature, value=int(senators[c]),
             magnitude=float(decomp.A_matrix[t, c]))
        for t, c in zip(rows, cols)
    ]


def flag_features(votes: Iterable[Vote], n_bins: int) -> dict[int, set[FeatureKind]]:
    """Map every bin to the set of features that voted there."""
    out: dict[int, set[FeatureKind]] = {t: set() for t in range(n_bins)}
    for v in votes:
        out[v.bin_index].add(v.feature)
    return out


def decide_bins(flags: dict[int, set[FeatureKind]],
                votes: Iterable[Vote] = (),
                rule: Callable[[frozenset[FeatureKind]], bool] = require_all_features,
                ) -> list[BinVerdict]:
    """One verdict per bin, sorted by index."""
    by_bin: dict[int, list[Vote]] = {}
    for v in votes:
        by_bin.setdefault(v.bin_index, []).append(v)
    out = []
    for t in sorted(flags):
        flagged = frozenset(flags[t])
        out.append(BinVerdict(
            bin_index=t, flagged_features=flagged, anomalous=rule(flagged),
            votes=tuple(sorted(by_bin.get(t, ()), key=lambda v: (v.feature.value, v.value))),
        ))
    return out


# ---------------------------------------------------------------------------
# columnar fast path


@dataclass
class FeatureVotes:
    kind: FeatureKind
    decomposition: PcpDecomposition
    votes: np.ndarray            # bool, (n_bins, n_senators)
    bins_with_votes: np.ndarray  # bool, (n_bins,)


def vote_mask(counts: np.ndarray, decomp: PcpDecomposition) -> np.ndarray:
    """Votes are strictly positive sparse entries above the numeric floor."""
    return decomp.A_matrix > vote_floor(counts)


def cast_votes(election: FeatureElection, pcp_cfg: PcpConfig = PcpConfig()) -> FeatureVotes:
    counts = election.counts
    if counts.size == 0:
        n_bins = counts.shape[0]
        decomp = pcp_decompose(np.zeros((max(n_bins, 1), 1)), pcp_cfg)
        return FeatureVotes(
            kind=election.kind, decomposition=decomp,
            votes=np.zeros_like(counts, dtype=bool),
            bins_with_votes=np.zeros(n_bins, dtype=bool),
        )
    decomp = pcp_decompose(counts, pcp_cfg)
    votes = vote_mask(counts, decomp)
    return FeatureVotes(
        kind=election.kind, decomposition=decomp, votes=votes,
        bins_with_votes=votes.any(axis=1),
    )


def run_voting(elections: dict[FeatureKind, FeatureElection],
               pcp_cfg: PcpConfig = PcpConfig()) -> dict[FeatureKind, FeatureVotes]:
    return {kind: cast_votes(elections[kind], pcp_cfg) for kind in ALL_FEATURES}


def flagged_bins(votes: dict[FeatureKind, FeatureVotes], n_bins: int,
                 min_features: int = len(ALL_FEATURES)) -> np.ndarray:
    """Bin indices flagged by at least min_features features, ascending."""
    hits = np.zeros(n_bins, dtype=np.int64)
    for kind in ALL_FEATURES:
        hits += votes[kind].bins_with_votes.astype(np.int64)
    return np.flatnonzero(hits >= min_features)
