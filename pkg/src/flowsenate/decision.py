"""Decision stage: name the attack behind a flagged bin, or clear it.

A flagged bin is examined through its suspicious flow aggregates: every
(srcAS, dstAS, srcPort, dstPort) combination of elected senator values that
at least one filtered flow matches. For each aggregate, in lexicographic
order, three concentration checks run in priority order:

1. fan-in: most flows converging on one destination address within the
   aggregate's destination AS -> distributed flood (ddos) when above the
   ddos threshold;
2. pair volume: most flows on one (source, destination) address pair drawn
   from the aggregate's AS pair -> point-to-point flood (dos);
3. fan-out: most flows from one source address in the aggregate's source AS
   to the aggregate's destination port -> scan.

Counts ignore the aggregate's port/AS coordinates other than the scoping
stated above, so the intensity reflects the whole bin's traffic toward the
key. The first check that exceeds its threshold wins; if no aggregate
triggers any check the bin is reported as a false positive. Earlier checks
subsume later ones (a distributed flood also inflates pair counts), hence
the fixed order.

Thresholds can be learned from labeled intensities with a small
deterministic decision tree.
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .flows import FeatureKind, FlowRecord, int_to_ip


class Verdict(enum.Enum):
    DDOS = "ddos"
    DOS = "dos"
    SCAN = "scan"
    FALSE_POSITIVE = "false_positive"


# bootstrap values used before any thresholds have been learned
DEFAULT_DDOS_THRESHOLD = 100.0
DEFAULT_DOS_THRESHOLD = 50.0
DEFAULT_SCAN_THRESHOLD = 30.0


@dataclass(frozen=True)
class ThresholdConfig:
    ddos: float = DEFAULT_DDOS_THRESHOLD
    dos: float = DEFAULT_DOS_THRESHOLD
    scan: float = DEFAULT_SCAN_THRESHOLD
    learned: bool = False

    def __post_init__(self):
        for name in ("ddos", "dos", "scan"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} threshold must be finite and > 0, got {v}")


@dataclass(frozen=True)
class AggregateKey:
    src_as: int
    dst_as: int
    src_port: int
    dst_port: int

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.src_as, self.dst_as, self.src_port, self.dst_port)


@dataclass(frozen=True)
class SuspiciousAggregate:
    key: AggregateKey
    flows: tuple[FlowRecord, ...]


@dataclass(frozen=True)
class Witness:
    """The key whose flow count triggered a verdict."""

    aggregate: AggregateKey
    dst_ip: str | None = None
    src_ip: str | None = None
    dst_port: int | None = None


@dataclass(frozen=True)
class Diagnosis:
    bin_index: int
    verdict: Verdict
    intensity: int
    witness: Witness | None

    def __post_init__(self):
        if self.verdict is not Verdict.FALSE_POSITIVE and self.witness is None:
            raise ValueError("a positive verdict requires a witness")


def enumerate_aggregates(records: Iterable[FlowRecord],
                         senators: Mapping[FeatureKind, frozenset | set],
                         ) -> list[SuspiciousAggregate]:
    """Senator-value combinations with at least one matching flow.

    Conceptually the Cartesian product of the four senator sets; only
    non-empty combinations are realized, in lexicographic key order.
    """
    s_sas = senators[FeatureKind.SRC_AS]
    s_das = senators[FeatureKind.DST_AS]
    s_sp = senators[FeatureKind.SRC_PORT]
    s_dp = senators[FeatureKind.DST_PORT]
    groups: dict[AggregateKey, list[FlowRecord]] = {}
    for r in records:
        if (r.src_as in s_sas and r.dst_as in s_das
                and r.src_port in s_sp and r.dst_port in s_dp):
            key = AggregateKey(r.src_as, r.dst_as, r.src_port, r.dst_port)
            groups.setdefault(key, []).append(r)
    return [SuspiciousAggregate(key=k, flows=tuple(groups[k]))
            for k in sorted(groups, key=AggregateKey.as_tuple)]


class _BinContext:
    """Per-bin lookup tables shared by every aggregate's checks."""

    def __init__(self, records: Sequence[FlowRecord]):
        self.dst_count = Counter(r.dst_ip for r in records)
        self.pair_count = Counter((r.src_ip, r.dst_ip) for r in records)
        self.out_count = Counter((r.src_ip, r.dst_port) for r in records)
        self.das_members: dict[int, set[str]] = {}
        self.aspair_members: dict[tuple[int, int], set[tuple[str, str]]] = {}
        self.sas_members: dict[int, set[str]] = {}
        for r in records:
            self.das_members.setdefault(r.dst_as, set()).add(r.dst_ip)
            self.aspair_members.setdefault((r.src_as, r.dst_as), set()).add((r.src_ip, r.dst_ip))
            self.sas_members.setdefault(r.src_as, set()).add(r.src_ip)

    def fan_in(self, dst_as: int) -> tuple[int, str | None]:
        best, who = 0, None
        for ip in self.das_members.get(dst_as, ()):
            c = self.dst_count[ip]
            if c > best or (c == best and who is not None and ip < who):
                best, who = c, ip
        return best, who

    def pair_volume(self, src_as: int, dst_as: int) -> tuple[int, tuple[str, str] | None]:
        best, who = 0, None
        for pair in self.aspair_members.get((src_as, dst_as), ()):
            c = self.pair_count[pair]
            if c > best or (c == best and who is not None and pair < who):
                best, who = c, pair
        return best, who

    def fan_out(self, src_as: int, dst_port: int) -> tuple[int, str | None]:
        best, who = 0, None
        for ip in self.sas_members.get(src_as, ()):
            c = self.out_count.get((ip, dst_port), 0)
            if c > best or (c == best and who is not None and c and ip < who):
                best, who = c, ip
        return best, who


def classify(aggregates: Sequence[SuspiciousAggregate],
             records: Sequence[FlowRecord],
             thresholds: ThresholdConfig,
             bin_index: int = 0) -> Diagnosis:
    """Run the three checks over each aggregate in order; first hit wins."""
    ctx = _BinContext(records)
    for agg in aggregates:
        k = agg.key
        intensity, dst = ctx.fan_in(k.dst_as)
        if intensity > thresholds.ddos:
            return Diagnosis(bin_index, Verdict.DDOS, intensity,
                             Witness(aggregate=k, dst_ip=dst))
        intensity, pair = ctx.pair_volume(k.src_as, k.dst_as)
        if intensity > thresholds.dos:
            return Diagnosis(bin_index, Verdict.DOS, intensity,
                             Witness(aggregate=k, src_ip=pair[0], dst_ip=pair[1]))
        intensity, src = ctx.fan_out(k.src_as, k.dst_port)
        if intensity > thresholds.scan:
            return Diagnosis(bin_index, Verdict.SCAN, intensity,
                             Witness(aggregate=k, src_ip=src, dst_port=k.dst_port))
    return Diagnosis(bin_index, Verdict.FALSE_POSITIVE, 0, None)


def run_decision_stage(anomalous_bins: Iterable[int],
                       bin_records: Mapping[int, Sequence[FlowRecord]],
                       senators: Mapping[FeatureKind, frozenset | set],
                       thresholds: ThresholdConfig = ThresholdConfig(),
                       ) -> list[Diagnosis]:
    """One diagnosis per anomalous bin, in bin order."""
    out = []
    for t in sorted(anomalous_bins):
        records = bin_records.get(t, ())
        aggs = enumerate_aggregates(records, senators)
        out.append(classify(aggs, records, thresholds, bin_index=t))
    return out


# ---------------------------------------------------------------------------
# columnar fast path (same semantics as classify, numpy per-bin arrays)


def _member_of(values: np.ndarray, sorted_members: np.ndarray) -> np.ndarray:
    pos = np.searchsorted(sorted_members, values)
    pos = np.minimum(pos, max(sorted_members.size - 1, 0))
    if sorted_members.size == 0:
        return np.zeros(values.shape, dtype=bool)
    return sorted_members[pos] == values


def _group_max(group_keys: np.ndarray, candidate: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Max candidate per distinct group key; keys returned sorted."""
    order = np.argsort(group_keys, kind="stable")
    g, c = group_keys[order], candidate[order]
    starts = np.flatnonzero(np.r_[True, g[1:] != g[:-1]])
    maxes = np.maximum.reduceat(c, starts)
    return g[starts], maxes


class _TableBinContext:
    """Vectorized counterpart of _BinContext for one bin's column slices."""

    def __init__(self, sip: np.ndarray, dip: np.ndarray, sas: np.ndarray,
                 das: np.ndarray, sport: np.ndarray, dport: np.ndarray):
        self.sip = sip.astype(np.uint64)
        self.dip = dip.astype(np.uint64)
        self.sas = sas.astype(np.uint64)
        self.das = das.astype(np.uint64)
        self.sport = sport.astype(np.uint64)
        self.dport = dport.astype(np.uint64)

        self.u_dip, self.c_dip = np.unique(self.dip, return_counts=True)
        pair = (self.sip << np.uint64(32)) | self.dip
        self.u_pair, pair_inv, self.c_pair = np.unique(pair, return_inverse=True,
                                                       return_counts=True)
        key3 = (self.sip << np.uint64(16)) | self.dport
        self.u3, self.c3 = np.unique(key3, return_counts=True)

        # fan-in table: per destination AS, the largest per-address count
        das_dip = (self.das << np.uint64(32)) | self.dip
        u_dd = np.unique(das_dip)
        cand = self.c_dip[np.searchsorted(self.u_dip, u_dd & np.uint64(0xFFFFFFFF))]
        self.fanin_keys, self.fanin_max = _group_max(u_dd >> np.uint64(32), cand)

        # pair table: per (srcAS, dstAS), the largest per-address-pair count
        aspair = (self.sas << np.uint64(32)) | self.das
        u_ap, ap_inv = np.unique(aspair, return_inverse=True)
        combo = ap_inv.astype(np.int64) * np.int64(self.u_pair.size) + pair_inv.astype(np.int64)
        u_combo = np.unique(combo)
        cand = self.c_pair[u_combo % self.u_pair.size]
        gk, gm = _group_max(u_combo // self.u_pair.size, cand)
        self.pair_keys, self.pair_max = u_ap[gk], gm

        # fan-out table: per (srcAS, dstPort), the largest per-source count
        m = np.unique((self.sas << np.uint64(32)) | self.sip)
        m_sas, m_sip = m >> np.uint64(32), m & np.uint64(0xFFFFFFFF)
        u3_sip = self.u3 >> np.uint64(16)
        seg_lo = np.searchsorted(u3_sip, m_sip, side="left")
        seg_hi = np.searchsorted(u3_sip, m_sip, side="right")
        lengths = seg_hi - seg_lo
        total = int(lengths.sum())
        if total:
            rep_lo = np.repeat(seg_lo, lengths)
            offs = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
            idx = rep_lo + offs
            key = (np.repeat(m_sas, lengths) << np.uint64(16)) | (self.u3[idx] & np.uint64(0xFFFF))
            self.fanout_keys, self.fanout_max = _group_max(key, self.c3[idx])
        else:
            self.fanout_keys = np.zeros(0, dtype=np.uint64)
            self.fanout_max = np.zeros(0, dtype=np.int64)

    def _lookup(self, keys: np.ndarray, maxes: np.ndarray, query: np.ndarray) -> np.ndarray:
        out = np.zeros(query.shape, dtype=np.int64)
        if keys.size:
            pos = np.minimum(np.searchsorted(keys, query), keys.size - 1)
            hit = keys[pos] == query
            out[hit] = maxes[pos[hit]]
        return out

    def fan_in_many(self, das: np.ndarray) -> np.ndarray:
        return self._lookup(self.fanin_keys, self.fanin_max, das.astype(np.uint64))

    def pair_many(self, sas: np.ndarray, das: np.ndarray) -> np.ndarray:
        q = (sas.astype(np.uint64) << np.uint64(32)) | das.astype(np.uint64)
        return self._lookup(self.pair_keys, self.pair_max, q)

    def fan_out_many(self, sas: np.ndarray, dport: np.ndarray) -> np.ndarray:
        q = (sas.astype(np.uint64) << np.uint64(16)) | dport.astype(np.uint64)
        return self._lookup(self.fanout_keys, self.fanout_max, q)

    # witness recovery, run once on the winning scope

    def fan_in_witness(self, das: int) -> tuple[int, str]:
        member = np.unique(self.dip[self.das == das])
        c = self.c_dip[np.searchsorted(self.u_dip, member)]
        best = int(c.max())
        return best, int_to_ip(int(member[c == best].min()))

    def pair_witness(self, sas: int, das: int) -> tuple[int, str, str]:
        mask = (self.sas == sas) & (self.das == das)
        member = np.unique((self.sip[mask] << np.uint64(32)) | self.dip[mask])
        c = self.c_pair[np.searchsorted(self.u_pair, member)]
        best = int(c.max())
        winner = int(member[c == best].min())
        return best, int_to_ip(winner >> 32), int_to_ip(winner & 0xFFFFFFFF)

    def fan_out_witness(self, sas: int, dport: int) -> tuple[int, str]:
        member = np.unique(self.sip[self.sas == sas])
        key = (member << np.uint64(16)) | np.uint64(dport)
        pos = np.minimum(np.searchsorted(self.u3, key), self.u3.size - 1)
        c = np.where(self.u3[pos] == key, self.c3[pos], 0)
        best = int(c.max())
        return best, int_to_ip(int(member[c == best].min()))


def classify_bin_arrays(sip: np.ndarray, dip: np.ndarray, sas: np.ndarray,
                        das: np.ndarray, sport: np.ndarray, dport: np.ndarray,
                        senators: Mapping[FeatureKind, np.ndarray],
                        thresholds: ThresholdConfig,
                        bin_index: int = 0) -> Diagnosis:
    """classify() on one bin's column slices; vectorized over aggregates."""
    sen_sas = np.asarray(senators[FeatureKind.SRC_AS], dtype=np.int64)
    sen_das = np.asarray(senators[FeatureKind.DST_AS], dtype=np.int64)
    sen_sp = np.asarray(senators[FeatureKind.SRC_PORT], dtype=np.int64)
    sen_dp = np.asarray(senators[FeatureKind.DST_PORT], dtype=np.int64)

    mask = (_member_of(sas, sen_sas) & _member_of(das, sen_das)
            & _member_of(sport, sen_sp) & _member_of(dport, sen_dp))
    if mask.any():
        i1 = np.searchsorted(sen_sas, sas[mask]).astype(np.int64)
        i2 = np.searchsorted(sen_das, das[mask]).astype(np.int64)
        i3 = np.searchsorted(sen_sp, sport[mask]).astype(np.int64)
        i4 = np.searchsorted(sen_dp, dport[mask]).astype(np.int64)
        code = ((i1 * sen_das.size + i2) * sen_sp.size + i3) * sen_dp.size + i4
        u_code = np.unique(code)
        a4 = sen_dp[u_code % sen_dp.size]
        rest = u_code // sen_dp.size
        a3 = sen_sp[rest % sen_sp.size]
        rest //= sen_sp.size
        a2 = sen_das[rest % sen_das.size]
        a1 = sen_sas[rest // sen_das.size]
    else:
        a1 = a2 = a3 = a4 = np.zeros(0, dtype=np.int64)

    if a1.size == 0:
        return Diagnosis(bin_index, Verdict.FALSE_POSITIVE, 0, None)

    ctx = _TableBinContext(sip, dip, sas, das, sport, dport)
    v1 = ctx.fan_in_many(a2) > thresholds.ddos
    v2 = ctx.pair_many(a1, a2) > thresholds.dos
    v3 = ctx.fan_out_many(a1, a4) > thresholds.scan
    hits = np.flatnonzero(v1 | v2 | v3)
    if hits.size == 0:
        return Diagnosis(bin_index, Verdict.FALSE_POSITIVE, 0, None)
    w = int(hits[0])
    key = AggregateKey(int(a1[w]), int(a2[w]), int(a3[w]), int(a4[w]))
    if v1[w]:
        intensity, ip = ctx.fan_in_witness(key.dst_as)
        return Diagnosis(bin_index, Verdict.DDOS, intensity, Witness(key, dst_ip=ip))
    if v2[w]:
        intensity, s, d = ctx.pair_witness(key.src_as, key.dst_as)
        return Diagnosis(bin_index, Verdict.DOS, intensity,
                         Witness(key, src_ip=s, dst_ip=d))
    intensity, s = ctx.fan_out_witness(key.src_as, key.dst_port)
    return Diagnosis(bin_index, Verdict.SCAN, intensity,
                     Witness(key, src_ip=s, dst_port=key.dst_port))


# ---------------------------------------------------------------------------
# threshold learning


def _entropy(label_counts: Counter) -> float:
    n = sum(label_counts.values())
    h = 0.0
    for c in label_counts.values():
        if c:
            p = c / n
            h -= p * math.log2(p)
    return h


def _majority(labels: list[str]) -> str:
    counts = Counter(labels)
    best = max(counts.values())
    return min(lab for lab, c in counts.items() if c == best)


_GAIN_TOL = 1e-12


def _best_split(x: np.ndarray, labels: list[str]) -> float | None:
    """Midpoint between consecutive distinct values with maximal info gain.

    Gain ties resolve to the smallest midpoint so the tree is a pure
    function of the sample set.
    """
    distinct = np.unique(x)
    if distinct.size < 2:
        return None
    parent = _entropy(Counter(labels))
    n = x.size
    best_gain, best_t = -1.0, None
    for lo, hi in zip(distinct[:-1], distinct[1:]):
        t = float((lo + hi) / 2.0)
        left = x <= t
        nl = int(left.sum())
        hl = _entropy(Counter(lab for lab, m in zip(labels, left) if m))
        hr = _entropy(Counter(lab for lab, m in zip(labels, left) if not m))
        gain = parent - (nl / n) * hl - ((n - nl) / n) * hr
        if gain > best_gain + _GAIN_TOL:
            best_gain, best_t = gain, t
    if best_gain <= _GAIN_TOL:
        return None
    return best_t


def _grow_rules(x: np.ndarray, labels: list[str], depth: int, max_depth: int,
                lower: float | None, rules: list[tuple[str, float | None]]) -> None:
    """DFS tree growth; emits (leaf class, binding lower bound) per leaf."""
    if depth >= max_depth or len(labels) <= 1 or len(set(labels)) == 1:
        rules.append((_majority(labels), lower))
        return
    t = _best_split(x, labels)
    if t is None:
        rules.append((_majority(labels), lower))
        return
    left = x <= t
    _grow_rules(x[left], [lab for lab, m in zip(labels, left) if m],
                depth + 1, max_depth, lower, rules)
    right = ~left
    new_lower = t if lower is None else max(lower, t)
    _grow_rules(x[right], [lab for lab, m in zip(labels, right) if m],
                depth + 1, max_depth, new_lower, rules)


def learn_class_thresholds(intensities, labels, max_depth: int = 8) -> dict[str, float]:
    """Per-class lower-bound thresholds from labeled 1-D intensities.

    A single information-gain tree is grown over the samples; each leaf's
    binding constraint is the largest "greater than" split on its path
    (upper-bound antecedents are discarded). A class's threshold is the
    smallest binding constraint among its leaves, falling back to the
    class's smallest observed intensity when no leaf of that class has one.
    """
    x = np.asarray(intensities, dtype=np.float64)
    labs = [str(v) for v in labels]
    if x.ndim != 1 or x.size == 0:
        raise ValueError("intensities must be a non-empty 1-D sequence")
    if x.size != len(labs):
        raise ValueError("intensities and labels must align")
    if not np.all(np.isfinite(x)):
        raise ValueError("intensities must be finite")
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")

    rules: list[tuple[str, float | None]] = []
    _grow_rules(x, labs, 0, max_depth, None, rules)

    out: dict[str, float] = {}
    for cls in sorted(set(labs)):
        bounds = [b for lab, b in rules if lab == cls and b is not None]
        if bounds:
            out[cls] = min(bounds)
        else:
            out[cls] = float(x[[lab == cls for lab in labs]].min())
    return out


def learn_thresholds(intensities, labels, max_depth: int = 8) -> ThresholdConfig:
    """learn_class_thresholds specialized to the three attack verdicts."""
    names = {str(v) for v in labels}
    wanted = {Verdict.DDOS.value, Verdict.DOS.value, Verdict.SCAN.value}
    missing = wanted - names
    if missing:
        raise ValueError(f"labels missing classes: {sorted(missing)}")
    extra = names - wanted
    if extra:
        raise ValueError(f"unknown labels: {sorted(extra)}")
    per_class = learn_class_thresholds(intensities, labels, max_depth=max_depth)
    return ThresholdConfig(
        ddos=per_class[Verdict.DDOS.value],
        dos=per_class[Verdict.DOS.value],
        scan=per_class[Verdict.SCAN.value],
        learned=True,
    )
