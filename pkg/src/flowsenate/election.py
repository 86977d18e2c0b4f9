"""Election stage: per-bin feature histograms, top-K approximation, senators.

For one feature (for example destination port), each bin's flow-count
histogram is sorted and truncated to its K heaviest values. The union of
all bins' kept values is the feature's senator set; a per-bin count matrix
over that set is what the decomposition stage consumes. Keeping only
elected values bounds the matrix width no matter how many distinct values
the trace contains.

The tail dropped by truncation is tracked: when sorted counts decay like
``R * i**(-1/p)`` with ``p <= 1``, the L2 tail norm after keeping K entries
is at most ``(p*s)**-0.5 * R * K**-s`` with ``s = 1/p - 1/2``. A
least-squares fit of (R, p) on log rank vs log count is attached for
diagnostics.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .flows import ALL_FEATURES, FeatureKind, FlowTable

log = logging.getLogger(__name__)

# diagnostic band for the truncation residual on max-normalized counts
NORMALIZED_RESIDUAL_BAND = (0.01, 0.3)


@dataclass(frozen=True)
class ElectionConfig:
    top_k: int = 20

    def __post_init__(self):
        if self.top_k < 1:
            raise ValueError(f"top_k must be >= 1, got {self.top_k}")


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares decay fit of sorted counts; diagnostic only."""

    R: float        # leading count
    p: float        # decay exponent is 1/p
    degenerate: bool = False

    @property
    def s(self) -> float:
        return 1.0 / self.p - 0.5


def tail_norm_bound(R: float, p: float, K: int) -> float:
    """Upper bound on the L2 norm of counts dropped after rank K.

    Valid for counts dominated by ``R * i**(-1/p)`` with ``0 < p < 2``
    (the exponent must exceed 1/2 for the tail to be square-summable).
    """
    if not (R > 0 and 0 < p < 2 and K >= 1):
        raise ValueError(f"need R > 0, p in (0,2), K >= 1; got R={R}, p={p}, K={K}")
    s = 1.0 / p - 0.5
    return (p * s) ** -0.5 * R * K ** -s


@dataclass(frozen=True)
class ValueHistogram:
    """Flow counts per distinct feature value, heaviest first.

    Entries are (value, count) sorted by count descending, ties by value
    ascending, so identical inputs always produce identical orderings.
    """

    feature: FeatureKind
    bin_index: int
    entries: tuple[tuple[int, int], ...]
    total_flows: int

    def __post_init__(self):
        counts = [c for _, c in self.entries]
        if any(c1 < c2 for c1, c2 in zip(counts, counts[1:])):
            raise ValueError("entries must be sorted by count non-increasing")
        if sum(counts) != self.total_flows:
            raise ValueError("total_flows must equal the sum of counts")
        if len({v for v, _ in self.entries}) != len(self.entries):
            raise ValueError("duplicate feature value in histogram")


def build_histogram(records, feature: FeatureKind, bin_index: int = 0) -> ValueHistogram:
    counts: dict[int, int] = {}
    for r in records:
        v = getattr(r, feature.column)
        counts[v] = counts.get(v, 0) + 1
    entries = tuple(sorted(counts.items(), key=lambda kv: (-kv[1], kv[0])))
    return ValueHistogram(feature=feature, bin_index=bin_index, entries=entries,
                          total_flows=sum(counts.values()))


def fit_power_law(sorted_counts) -> PowerLawFit:
    """Fit counts ~ R * rank**(-1/p) by least squares in log-log space.

    R is pinned to the leading count. With fewer than two distinct positive
    counts the fit is reported degenerate (p = 1 by convention).
    """
    x = np.asarray([c for c in sorted_counts if c > 0], dtype=np.float64)
    if x.size < 2 or np.all(x == x[0]):
        R = float(x[0]) if x.size else 0.0
        return PowerLawFit(R=R, p=1.0, degenerate=True)
    ranks = np.arange(1, x.size + 1, dtype=np.float64)
    slope = np.polyfit(np.log(ranks), np.log(x), 1)[0]
    inv_p = max(-slope, 1e-9)
    return PowerLawFit(R=float(x[0]), p=float(min(1.0 / inv_p, 1e9)), degenerate=False)


@dataclass(frozen=True)
class TopKApproximation:
    """A histogram truncated to its K heaviest values."""

    K: int
    kept: tuple[tuple[int, int], ...]
    residual: float                 # L2 norm of the dropped counts
    fit: PowerLawFit | None = None

    @property
    def kept_values(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.kept)


def sparse_approximate(hist: ValueHistogram, K: int, with_fit: bool = True) -> TopKApproximation:
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    counts = np.array([c for _, c in hist.entries], dtype=np.float64)
    tail = counts[K:]
    fit = fit_power_law(counts) if (with_fit and counts.size) else None
    return TopKApproximation(
        K=K, kept=hist.entries[:K],
        residual=float(np.sqrt((tail * tail).sum())),
        fit=fit,
    )


def normalized_residual(hist: ValueHistogram, K: int) -> float:
    """Truncation residual after scaling counts by the leading count."""
    if not hist.entries:
        return 0.0
    peak = hist.entries[0][1]
    counts = np.array([c for _, c in hist.entries[K:]], dtype=np.float64)
    return float(np.sqrt((counts * counts).sum())) / peak


def elect_senators(approximations) -> set[int]:
    """Union of kept values across bins for one feature."""
    members: set[int] = set()
    for ap in approximations:
        members.update(ap.kept_values)
    return members


# ---------------------------------------------------------------------------
# columnar fast path


def _bin_value_counts(values: np.ndarray, bins: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Distinct (bin, value) pairs with flow counts, via a packed key.

    Values must be non-negative and < 2**33 (AS numbers and ports are).
    """
    if values.shape != bins.shape:
        raise ValueError("values and bins must align")
    key = bins.astype(np.int64) * (1 << 33) + values.astype(np.int64)
    uniq, counts = np.unique(key, return_counts=True)
    return uniq >> 33, uniq & ((1 << 33) - 1), counts


def per_bin_top_values(values: np.ndarray, bins: np.ndarray, k: int) -> dict[int, np.ndarray]:
    """Top-k values of each bin by flow count.

    Ties break toward the smaller value so results never depend on input
    order. Bins with fewer than k distinct values return what they have;
    empty bins are absent from the result.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if values.size == 0:
        return {}
    b, v, c = _bin_value_counts(values, bins)
    # sort by (bin asc, count desc, value asc); lexsort's last key is primary
    order = np.lexsort((v, -c, b))
    b, v = b[order], v[order]
    out: dict[int, np.ndarray] = {}
    starts = np.flatnonzero(np.r_[True, b[1:] != b[:-1]])
    ends = np.r_[starts[1:], b.size]
    for s, e in zip(starts, ends):
        out[int(b[s])] = v[s:min(e, s + k)]
    return out


def elect(values: np.ndarray, bins: np.ndarray, k: int) -> np.ndarray:
    """Union of every bin's top-k values, sorted ascending."""
    winners = per_bin_top_values(values, bins, k)
    if not winners:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(list(winners.values())))


def senator_counts(values: np.ndarray, bins: np.ndarray, n_bins: int,
                   senators: np.ndarray) -> np.ndarray:
    """Per-bin flow counts for each elected value: shape (n_bins, len(senators))."""
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    senators = np.asarray(senators, dtype=np.int64)
    out = np.zeros((n_bins, senators.size), dtype=np.float64)
    if values.size == 0 or senators.size == 0:
        return out
    pos = np.searchsorted(senators, values)
    pos_clipped = np.minimum(pos, senators.size - 1)
    hit = senators[pos_clipped] == values
    np.add.at(out, (bins[hit], pos_clipped[hit]), 1.0)
    return out


@dataclass
class FeatureElection:
    kind: FeatureKind
    senators: np.ndarray       # sorted elected values
    counts: np.ndarray         # (n_bins, n_senators) flow counts


def run_election(table: FlowTable, bins: np.ndarray, n_bins: int,
                 cfg: ElectionConfig = ElectionConfig()) -> dict[FeatureKind, FeatureElection]:
    """Elect senators and build count matrices for all four features.

    Logs a warning when a feature's normalized truncation residual sits
    outside the expected band; detection proceeds regardless.
    """
    out: dict[FeatureKind, FeatureElection] = {}
    for kind in ALL_FEATURES:
        values = table.feature(kind).astype(np.int64)
        senators = elect(values, bins, cfg.top_k)
        counts = senator_counts(values, bins, n_bins, senators)
        _warn_residual_band(kind, values, cfg.top_k)
        out[kind] = FeatureElection(kind=kind, senators=senators, counts=counts)
    return out


def _warn_residual_band(kind: FeatureKind, values: np.ndarray, k: int) -> None:
    """Check the whole-trace histogram's normalized truncation residual."""
    if values.size == 0:
        return
    counts = np.sort(np.unique(values, return_counts=True)[1])[::-1].astype(np.float64)
    tail = counts[k:]
    resid = math.sqrt(float((tail * tail).sum())) / counts[0]
    lo, hi = NORMALIZED_RESIDUAL_BAND
    if not lo <= resid <= hi:
        log.warning("feature %s: normalized top-%d residual %.4f outside [%g, %g]",
                    kind.value, k, resid, lo, hi)
