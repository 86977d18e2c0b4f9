"""Comparison detector: histogram-change scoring plus frequent-set mining.

Each feature's per-bin value histogram is projected into a small number of
buckets by a seeded stable hash, and consecutive bins are compared with the
Kullback-Leibler distance (current bin against the previous bin as
reference). A per-feature alarm gate is calibrated on a warm-up prefix as
mean + k standard deviations of the observed scores; a bin raises a full
alarm only when all four features alarm together, matching the main
pipeline's rule so the two detectors are comparable. Alarmed bins are then
explained by mining frequent (field, value) itemsets from their flows, and
the mined flows are pushed through the same three-step classifier the main
pipeline uses.

The hash is keyed by an explicit seed (never the interpreter's per-process
string hashing), so runs are reproducible across processes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Sequence

import numpy as np

from .decision import Diagnosis, ThresholdConfig, Verdict, classify, enumerate_aggregates
from .flows import ALL_FEATURES, FeatureKind, FlowRecord, FlowTable, int_to_ip

DEFAULT_BUCKETS = 64
DEFAULT_EPSILON = 1e-6


@dataclass(frozen=True)
class BaselineConfig:
    buckets: int = DEFAULT_BUCKETS
    seed: int = 0
    epsilon: float = DEFAULT_EPSILON
    warmup_fraction: float = 0.10
    sigma_factor: float = 3.0
    min_support_fraction: float = 0.005  # of the alarmed bin's flows
    filter_small_flows: bool = False     # score raw traffic by default

    def __post_init__(self):
        if self.buckets < 2:
            raise ValueError(f"buckets must be >= 2, got {self.buckets}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if not 0 < self.warmup_fraction < 1:
            raise ValueError(f"warmup_fraction must be in (0, 1), got {self.warmup_fraction}")
        if self.sigma_factor <= 0:
            raise ValueError(f"sigma_factor must be > 0, got {self.sigma_factor}")
        if not 0 < self.min_support_fraction <= 1:
            raise ValueError(
                f"min_support_fraction must be in (0, 1], got {self.min_support_fraction}")


def stable_bucket(value: int, seed: int, buckets: int, namespace: str = "") -> int:
    """Deterministic bucket for a feature value, identical across processes."""
    h = hashlib.blake2b(f"{seed}:{namespace}:{value}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "big") % buckets


def bucket_histograms(values: np.ndarray, bins: np.ndarray, n_bins: int,
                      feature: FeatureKind, cfg: BaselineConfig) -> np.ndarray:
    """Per-bin bucketed counts, shape (n_bins, buckets); mass is preserved."""
    out = np.zeros((n_bins, cfg.buckets), dtype=np.float64)
    if values.size == 0:
        return out
    uniq, inv = np.unique(values, return_inverse=True)
    slots = np.array([stable_bucket(int(v), cfg.seed, cfg.buckets, feature.value)
                      for v in uniq.tolist()], dtype=np.int64)
    np.add.at(out, (bins, slots[inv]), 1.0)
    return out


def smooth_distribution(counts: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Additive smoothing then renormalization; defined even for all-zero input."""
    x = np.asarray(counts, dtype=np.float64) + epsilon
    return x / x.sum()


def kl_distance(p: np.ndarray, q: np.ndarray) -> float:
    """Sum of p_i * ln(p_i / q_i) with the 0 * ln 0 = 0 convention.

    Inputs are distributions; a positive p entry facing a zero q entry
    yields inf, which callers avoid by smoothing first.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ValueError(f"p and q must be 1-D with equal length, got {p.shape} vs {q.shape}")
    if (p < 0).any() or (q < 0).any():
        raise ValueError("distributions must be non-negative")
    total = 0.0
    for pi, qi in zip(p.tolist(), q.tolist()):
        if pi == 0.0:
            continue
        if qi == 0.0:
            return math.inf
        total += pi * math.log(pi / qi)
    return total


@dataclass(frozen=True)
class KlAlarm:
    bin_index: int
    feature: FeatureKind
    distance: float
    threshold: float


def change_scores(histograms: np.ndarray, epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Distance of each bin to its predecessor; the first bin scores 0."""
    n_bins = histograms.shape[0]
    scores = np.zeros(n_bins, dtype=np.float64)
    if n_bins < 2:
        return scores
    # smoothing keeps every entry positive, so the vectorized form is exact
    dist = histograms + epsilon
    dist /= dist.sum(axis=1, keepdims=True)
    scores[1:] = np.sum(dist[1:] * np.log(dist[1:] / dist[:-1]), axis=1)
    return scores


def detect_kl(histograms: np.ndarray, feature: FeatureKind, threshold: float,
              epsilon: float = DEFAULT_EPSILON) -> list[KlAlarm]:
    """Alarms for every bin (never the first) whose change score exceeds the gate."""
    if histograms.shape[0] < 2:
        raise ValueError("need at least two bins to compare")
    scores = change_scores(histograms, epsilon)
    return [KlAlarm(bin_index=t, feature=feature, distance=float(s), threshold=threshold)
            for t, s in enumerate(scores) if t >= 1 and s > threshold]


def warmup_threshold(scores: np.ndarray, warmup_fraction: float, sigma_factor: float) -> float:
    """Gate = mean + k * std of the scores seen in the warm-up prefix."""
    n_bins = scores.shape[0]
    w = max(2, int(warmup_fraction * n_bins))
    window = scores[1:w]
    if window.size == 0:
        return float(scores[0])
    return float(window.mean() + sigma_factor * window.std())


def mine_frequent(transactions: Iterable[Iterable[Hashable]], min_support: int,
                  ) -> list[tuple[frozenset, int]]:
    """Level-wise frequent-itemset mining.

    Returns every itemset contained in at least min_support transactions,
    largest itemsets first; support counts attached. min_support is an
    absolute transaction count >= 1.

    Support is counted on per-item transaction-id sets: a candidate built
    by joining two frequent sets is covered exactly by the intersection of
    their coverages, which avoids rescanning the transaction list.
    """
    if min_support < 1:
        raise ValueError(f"min_support must be >= 1, got {min_support}")
    tx = [frozenset(t) for t in transactions]
    tids: dict[Hashable, set[int]] = {}
    for i, t in enumerate(tx):
        for item in t:
            tids.setdefault(item, set()).add(i)
    level = {frozenset([item]): cover for item, cover in tids.items()
             if len(cover) >= min_support}
    frequent: dict[frozenset, int] = {s: len(cover) for s, cover in level.items()}
    k = 2
    while level:
        prev = sorted(level, key=lambda s: tuple(sorted(map(repr, s))))
        nxt: dict[frozenset, set[int]] = {}
        for i in range(len(prev)):
            for j in range(i + 1, len(prev)):
                u = prev[i] | prev[j]
                if len(u) != k or u in nxt:
                    continue
                # anti-monotone prune: all (k-1)-subsets must be frequent
                if not all(frozenset(c) in level for c in combinations(u, k - 1)):
                    continue
                cover = level[prev[i]] & level[prev[j]]
                if len(cover) >= min_support:
                    nxt[u] = cover
        level = nxt
        frequent.update({s: len(cover) for s, cover in level.items()})
        k += 1
    return sorted(frequent.items(),
                  key=lambda kv: (-len(kv[0]), -kv[1], tuple(sorted(map(repr, kv[0])))))


def flow_transactions(records: Iterable[FlowRecord]) -> list[frozenset]:
    """One transaction per flow: its four (field, value) items."""
    return [
        frozenset({("src_ip", r.src_ip), ("dst_ip", r.dst_ip),
                   ("src_port", r.src_port), ("dst_port", r.dst_port)})
        for r in records
    ]


@dataclass
class BaselineResult:
    scores: dict[FeatureKind, np.ndarray]
    thresholds: dict[FeatureKind, float]
    alarms: list[KlAlarm]
    alarmed_bins: list[int]
    diagnoses: list[Diagnosis]
    patterns: dict[int, list[tuple[frozenset, int]]] = field(default_factory=dict)


def _matching_records(records: Sequence[FlowRecord], items: frozenset) -> list[FlowRecord]:
    wanted = dict(items)
    out = []
    for r in records:
        if all(getattr(r, fld) == val for fld, val in wanted.items()):
            out.append(r)
    return out


def _diagnose_alarmed_bin(records: Sequence[FlowRecord], bin_index: int,
                          cfg: BaselineConfig, thresholds: ThresholdConfig,
                          ) -> tuple[Diagnosis, list[tuple[frozenset, int]]]:
    if not records:
        return Diagnosis(bin_index, Verdict.FALSE_POSITIVE, 0, None), []
    min_support = max(2, math.ceil(cfg.min_support_fraction * len(records)))
    patterns = mine_frequent(flow_transactions(records), min_support)
    if not patterns:
        return Diagnosis(bin_index, Verdict.FALSE_POSITIVE, 0, None), []
    culprits = _matching_records(records, patterns[0][0])
    senators = {
        FeatureKind.SRC_AS: {r.src_as for r in culprits},
        FeatureKind.DST_AS: {r.dst_as for r in culprits},
        FeatureKind.SRC_PORT: {r.src_port for r in culprits},
        FeatureKind.DST_PORT: {r.dst_port for r in culprits},
    }
    aggregates = enumerate_aggregates(culprits, senators)
    return classify(aggregates, records, thresholds, bin_index=bin_index), patterns


def run_baseline(table: FlowTable, bins: np.ndarray, n_bins: int,
                 cfg: BaselineConfig = BaselineConfig(),
                 thresholds: ThresholdConfig = ThresholdConfig()) -> BaselineResult:
    """Score every bin, gate on warm-up statistics, explain full alarms."""
    if n_bins < 2:
        raise ValueError("need at least two bins")
    scores: dict[FeatureKind, np.ndarray] = {}
    gates: dict[FeatureKind, float] = {}
    alarms: list[KlAlarm] = []
    alarmed_sets = []
    for kind in ALL_FEATURES:
        hist = bucket_histograms(table.feature(kind).astype(np.int64), bins, n_bins,
                                 kind, cfg)
        s = change_scores(hist, cfg.epsilon)
        gate = warmup_threshold(s, cfg.warmup_fraction, cfg.sigma_factor)
        scores[kind] = s
        gates[kind] = gate
        feature_alarms = [KlAlarm(t, kind, float(s[t]), gate)
                          for t in range(1, n_bins) if s[t] > gate]
        alarms.extend(feature_alarms)
        alarmed_sets.append({a.bin_index for a in feature_alarms})

    alarmed = sorted(set.intersection(*alarmed_sets)) if alarmed_sets else []

    diagnoses = []
    patterns: dict[int, list[tuple[frozenset, int]]] = {}
    order = np.argsort(bins, kind="stable")
    sorted_bins = bins[order]
    for t in alarmed:
        lo = int(np.searchsorted(sorted_bins, t, side="left"))
        hi = int(np.searchsorted(sorted_bins, t, side="right"))
        records = table.take(order[lo:hi]).to_records()
        diag, pats = _diagnose_alarmed_bin(records, t, cfg, thresholds)
        diagnoses.append(diag)
        patterns[t] = pats
    return BaselineResult(scores=scores, thresholds=gates, alarms=alarms,
                          alarmed_bins=list(alarmed), diagnoses=diagnoses,
                          patterns=patterns)
