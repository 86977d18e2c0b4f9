"""Synthetic flow traces: power-law background plus labeled injections.

Background flows draw each feature value independently from a power-law
popularity profile, so sorted per-value counts decay like R * rank**(-1/p).
Injections overlay three attack shapes on chosen bins:

* dos: one source address floods one destination address (one AS pair,
  one source port, one destination port);
* ddos: many sources across a few attacker AS flood one destination
  address on one destination port;
* scan: one source address sweeps many destination addresses on a single
  destination port from a single source port.

Flow sizing modes mirror how such traffic shows up in sampled records:
``tiny`` is one packet of at most 64 bytes (caught by both small-flow
filters), ``small`` is 2-3 packets with larger byte counts (caught by the
packet filter only), ``large`` is bulk traffic caught by neither. Every
injection is recorded in a ground-truth table keyed by bin and kind.

Generation is a pure function of the scenario: the same spec yields
byte-identical traces.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np

from .election import fit_power_law, tail_norm_bound, PowerLawFit
from .flows import FeatureKind, FlowTable, int_to_ip, ip_to_int

TRUTH_HEADER = "bin,kind,intensity,src_as,dst_ip,src_port,dst_port"

# value pools; background draws ranks from power-law weights over these
N_BACKGROUND_AS = 256
HOSTS_PER_AS = 256
AS_IP_STRIDE = 4096          # address room per AS, leaving space for scan targets
N_BACKGROUND_PORTS = 1024
SRC_AS_BASE = 1000
DST_AS_BASE = 20000
SRC_IP_BASE = 10 << 24
DST_IP_BASE = 172 << 24
ATTACK_SRC_AS_BASE = 65000   # attacker AS numbers, disjoint from background
ATTACK_SRC_IP_BASE = 11 << 24

_WELL_KNOWN_PORTS = (80, 443, 53, 22, 25, 123, 110, 143, 993, 995, 3306, 5432)


class AttackKind(enum.Enum):
    DOS = "dos"
    DDOS = "ddos"
    SCAN = "scan"


class Sizing(enum.Enum):
    TINY = "tiny"    # 1 packet, <= 64 bytes
    SMALL = "small"  # <= 3 packets, > 64 bytes
    LARGE = "large"  # bulk


@dataclass(frozen=True)
class InjectionSpec:
    kind: AttackKind
    bin_index: int
    intensity: int
    sizing: Sizing = Sizing.TINY

    def __post_init__(self):
        if self.intensity < 1:
            raise ValueError(f"intensity must be >= 1, got {self.intensity}")
        if self.bin_index < 0:
            raise ValueError(f"bin_index must be >= 0, got {self.bin_index}")


@dataclass(frozen=True)
class ScenarioSpec:
    duration_bins: int = 672
    flows_per_bin: int = 14000
    powerlaw_p: float = 0.8
    bin_width: int = 900
    injections: tuple[InjectionSpec, ...] = ()
    seed: int = 0

    def __post_init__(self):
        if self.duration_bins < 2:
            raise ValueError(f"duration_bins must be >= 2, got {self.duration_bins}")
        if self.flows_per_bin < 1:
            raise ValueError(f"flows_per_bin must be >= 1, got {self.flows_per_bin}")
        if not 0 < self.powerlaw_p <= 1:
            raise ValueError(f"powerlaw_p must be in (0, 1], got {self.powerlaw_p}")
        if self.bin_width <= 0:
            raise ValueError(f"bin_width must be > 0, got {self.bin_width}")
        for inj in self.injections:
            if inj.bin_index >= self.duration_bins:
                raise ValueError(
                    f"injection bin {inj.bin_index} outside 0..{self.duration_bins - 1}")


@dataclass(frozen=True)
class TruthRecord:
    """Ground-truth identifiers for one injection; None where not applicable."""

    bin_index: int
    kind: AttackKind
    intensity: int
    src_as: int | None = None
    dst_ip: str | None = None
    src_port: int | None = None
    dst_port: int | None = None


def _power_weights(n: int, p: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** (-1.0 / p)
    return w / w.sum()


def _background_ports() -> np.ndarray:
    extra = 8000 + np.arange(N_BACKGROUND_PORTS - len(_WELL_KNOWN_PORTS))
    return np.concatenate([np.array(_WELL_KNOWN_PORTS, dtype=np.int64), extra])


def _src_ip(as_index: np.ndarray, host: np.ndarray) -> np.ndarray:
    return (SRC_IP_BASE + as_index * AS_IP_STRIDE + host).astype(np.uint32)


def _dst_ip(as_index: np.ndarray, host: np.ndarray) -> np.ndarray:
    return (DST_IP_BASE + as_index * AS_IP_STRIDE + host).astype(np.uint32)


# background mixture over flow-size buckets:
# (fraction, passes packet filter, passes byte filter)
_SIZE_BUCKETS = (
    (0.42, True, True),     # 1-3 packets, <= 64 bytes
    (0.33, True, False),    # 1-3 packets, larger payloads
    (0.05, False, True),    # 4-8 packets, tiny payloads (keepalive bursts)
    (0.20, False, False),   # bulk
)


def _draw_sizes(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.cumsum([f for f, _, _ in _SIZE_BUCKETS])
    bucket = np.searchsorted(edges, rng.random(n), side="right")
    packets = np.empty(n, dtype=np.int64)
    nbytes = np.empty(n, dtype=np.int64)
    m = bucket == 0
    packets[m] = rng.integers(1, 4, m.sum())
    nbytes[m] = rng.integers(40, 65, m.sum())
    m = bucket == 1
    packets[m] = rng.integers(1, 4, m.sum())
    nbytes[m] = rng.integers(80, 1500, m.sum())
    m = bucket == 2
    packets[m] = rng.integers(4, 9, m.sum())
    nbytes[m] = rng.integers(40, 65, m.sum())
    m = bucket == 3
    packets[m] = rng.integers(10, 400, m.sum())
    nbytes[m] = packets[m] * rng.integers(200, 1400, m.sum())
    return packets, nbytes


def _attack_sizes(rng: np.random.Generator, n: int, sizing: Sizing) -> tuple[np.ndarray, np.ndarray]:
    if sizing is Sizing.TINY:
        return np.ones(n, dtype=np.int64), np.full(n, 60, dtype=np.int64)
    if sizing is Sizing.SMALL:
        return rng.integers(2, 4, n), rng.integers(90, 600, n)
    packets = rng.integers(64, 1200, n)
    return packets, packets * rng.integers(400, 1400, n)


@dataclass
class _Columns:
    start: list = field(default_factory=list)
    dur: list = field(default_factory=list)
    sip: list = field(default_factory=list)
    dip: list = field(default_factory=list)
    sas: list = field(default_factory=list)
    das: list = field(default_factory=list)
    sport: list = field(default_factory=list)
    dport: list = field(default_factory=list)
    proto: list = field(default_factory=list)
    packets: list = field(default_factory=list)
    nbytes: list = field(default_factory=list)

    def add(self, **arrays) -> None:
        for name, arr in arrays.items():
            getattr(self, name).append(arr)


def _generate_background(rng: np.random.Generator, spec: ScenarioSpec, cols: _Columns) -> None:
    n_bins, width = spec.duration_bins, spec.bin_width
    counts = np.maximum(rng.poisson(spec.flows_per_bin, n_bins), 1)
    total = int(counts.sum())
    bin_of = np.repeat(np.arange(n_bins, dtype=np.int64), counts)

    offset = rng.integers(0, width, total)
    firsts = np.r_[0, np.cumsum(counts)[:-1]]
    offset[firsts] = 0  # pin each bin's first flow to the bin edge

    w_as = _power_weights(N_BACKGROUND_AS, spec.powerlaw_p)
    w_port = _power_weights(N_BACKGROUND_PORTS, spec.powerlaw_p)
    ports = _background_ports()

    sas_idx = rng.choice(N_BACKGROUND_AS, total, p=w_as)
    das_idx = rng.choice(N_BACKGROUND_AS, total, p=w_as)
    sport_idx = rng.choice(N_BACKGROUND_PORTS, total, p=w_port)
    dport_idx = rng.choice(N_BACKGROUND_PORTS, total, p=w_port)
    packets, nbytes = _draw_sizes(rng, total)

    cols.add(
        start=bin_of * width + offset,
        dur=rng.integers(0, 61, total),
        sip=_src_ip(sas_idx, rng.integers(0, HOSTS_PER_AS, total)),
        dip=_dst_ip(das_idx, rng.integers(0, HOSTS_PER_AS, total)),
        sas=SRC_AS_BASE + sas_idx,
        das=DST_AS_BASE + das_idx,
        sport=ports[sport_idx],
        dport=ports[dport_idx],
        proto=rng.choice(np.array([0, 1, 2], dtype=np.uint8), total, p=[0.7, 0.25, 0.05]),
        packets=packets,
        nbytes=nbytes,
    )


def _inject(rng: np.random.Generator, spec: ScenarioSpec, idx: int,
            inj: InjectionSpec, cols: _Columns) -> TruthRecord:
    m, width = inj.intensity, spec.bin_width
    base_t = inj.bin_index * width
    packets, nbytes = _attack_sizes(rng, m, inj.sizing)
    start = base_t + rng.integers(0, width, m)
    dur = rng.integers(0, 31, m)
    proto = np.zeros(m, dtype=np.uint8)  # TCP

    if inj.kind is AttackKind.DOS:
        sas = ATTACK_SRC_AS_BASE + idx
        sip = np.full(m, ATTACK_SRC_IP_BASE + idx * AS_IP_STRIDE, dtype=np.uint32)
        victim_as = int(rng.integers(0, N_BACKGROUND_AS))
        victim_host = int(rng.integers(0, HOSTS_PER_AS))
        dip = _dst_ip(np.full(m, victim_as), np.full(m, victim_host))
        sport = 41000 + idx
        dport = 18000 + idx
        cols.add(start=start, dur=dur, sip=sip, dip=dip,
                 sas=np.full(m, sas), das=np.full(m, DST_AS_BASE + victim_as),
                 sport=np.full(m, sport), dport=np.full(m, dport),
                 proto=proto, packets=packets, nbytes=nbytes)
        return TruthRecord(inj.bin_index, inj.kind, m, src_as=sas,
                           dst_ip=int_to_ip(int(dip[0])), src_port=sport, dst_port=dport)

    if inj.kind is AttackKind.DDOS:
        # a few attacker AS with uneven shares; many source hosts
        as_share = np.array([0.5, 0.3, 0.2])
        as_of = rng.choice(3, m, p=as_share)
        sas = ATTACK_SRC_AS_BASE + 1000 + idx * 4 + as_of
        sip = (ATTACK_SRC_IP_BASE + (1000 + idx * 4 + as_of) * AS_IP_STRIDE
               + rng.integers(0, 64, m)).astype(np.uint32)
        victim_as = int(rng.integers(0, N_BACKGROUND_AS))
        victim_host = int(rng.integers(0, HOSTS_PER_AS))
        dip = _dst_ip(np.full(m, victim_as), np.full(m, victim_host))
        sport = np.where(rng.random(m) < 0.6, 43000 + idx * 2, 43001 + idx * 2)
        dport = 28000 + idx
        cols.add(start=start, dur=dur, sip=sip, dip=dip,
                 sas=sas, das=np.full(m, DST_AS_BASE + victim_as),
                 sport=sport, dport=np.full(m, dport),
                 proto=proto, packets=packets, nbytes=nbytes)
        return TruthRecord(inj.bin_index, inj.kind, m,
                           dst_ip=int_to_ip(int(dip[0])), dst_port=dport)

    # scan: one scanner sweeps fresh hosts in the quieter half of the space
    sas = ATTACK_SRC_AS_BASE + 2000 + idx
    sip = np.full(m, ATTACK_SRC_IP_BASE + (2000 + idx) * AS_IP_STRIDE, dtype=np.uint32)
    n_nets = 1 if m < 120 else int(rng.integers(1, 3))
    target_as = rng.integers(N_BACKGROUND_AS // 2, N_BACKGROUND_AS, n_nets)
    net_of = rng.choice(n_nets, m)
    # swept addresses sit above the populated host range
    dip = _dst_ip(target_as[net_of], HOSTS_PER_AS + 50 + np.arange(m))
    sport = 44000 + idx
    dport = int(rng.choice(np.array([445, 3389, 23, 1433, 5900, 6379])))
    cols.add(start=start, dur=dur, sip=sip, dip=dip,
             sas=np.full(m, sas), das=DST_AS_BASE + target_as[net_of],
             sport=np.full(m, sport), dport=np.full(m, dport),
             proto=proto, packets=packets, nbytes=nbytes)
    return TruthRecord(inj.bin_index, inj.kind, m, src_as=sas,
                       src_port=sport, dst_port=dport)


def _truth_collisions(table: FlowTable, tr: TruthRecord, background: np.ndarray) -> np.ndarray:
    mask = background.copy()
    if tr.src_as is not None:
        mask &= table.src_as == tr.src_as
    if tr.dst_ip is not None:
        mask &= table.dst_ip == np.uint32(ip_to_int(tr.dst_ip))
    if tr.src_port is not None:
        mask &= table.src_port == tr.src_port
    if tr.dst_port is not None:
        mask &= table.dst_port == tr.dst_port
    return mask


def _enforce_truth_disjoint(table: FlowTable, truths: list[TruthRecord],
                            background: np.ndarray) -> None:
    """Background rows must never collide with an injection's identifiers.

    Collisions are structurally impossible (attacker AS numbers and ports
    sit outside the background pools) but the guarantee is enforced, not
    assumed: an offending background row is re-pointed at a neutral port.
    """
    for tr in truths:
        if tr.dst_port is None:
            continue  # no identifier tuple to protect
        mask = _truth_collisions(table, tr, background)
        while mask.any():
            # port 80 never appears in an injection's identifier tuple
            table.dst_port[mask] = 80
            mask = _truth_collisions(table, tr, background)


def generate(spec: ScenarioSpec) -> tuple[FlowTable, list[TruthRecord]]:
    """Build the trace table and ground truth for a scenario."""
    streams = np.random.SeedSequence(spec.seed).spawn(1 + len(spec.injections))
    cols = _Columns()
    _generate_background(np.random.default_rng(streams[0]), spec, cols)
    n_background = len(cols.start[0])

    truths = []
    for i, inj in enumerate(spec.injections):
        truths.append(_inject(np.random.default_rng(streams[1 + i]), spec, i, inj, cols))

    table = FlowTable(
        start_time=np.concatenate(cols.start).astype(np.int64),
        duration=np.concatenate(cols.dur).astype(np.int64),
        src_ip=np.concatenate(cols.sip).astype(np.uint32),
        dst_ip=np.concatenate(cols.dip).astype(np.uint32),
        src_as=np.concatenate(cols.sas).astype(np.int64),
        dst_as=np.concatenate(cols.das).astype(np.int64),
        src_port=np.concatenate(cols.sport).astype(np.int64),
        dst_port=np.concatenate(cols.dport).astype(np.int64),
        protocol=np.concatenate(cols.proto).astype(np.uint8),
        packets=np.concatenate(cols.packets).astype(np.int64),
        bytes=np.concatenate(cols.nbytes).astype(np.int64),
    )
    background = np.zeros(len(table), dtype=bool)
    background[:n_background] = True
    _enforce_truth_disjoint(table, truths, background)

    order = np.argsort(table.start_time, kind="stable")
    return table.take(order), truths


def write_ground_truth(truths, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRUTH_HEADER.split(","))
        for t in truths:
            w.writerow([
                t.bin_index, t.kind.value, t.intensity,
                "" if t.src_as is None else t.src_as,
                "" if t.dst_ip is None else t.dst_ip,
                "" if t.src_port is None else t.src_port,
                "" if t.dst_port is None else t.dst_port,
            ])


def read_ground_truth(path) -> list[TruthRecord]:
    out = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != TRUTH_HEADER:
            raise ValueError(f"bad ground-truth header: {header!r}")
        for row in reader:
            b, kind, inten, sas, dip, sp, dp = row
            out.append(TruthRecord(
                bin_index=int(b), kind=AttackKind(kind), intensity=int(inten),
                src_as=int(sas) if sas else None,
                dst_ip=dip or None,
                src_port=int(sp) if sp else None,
                dst_port=int(dp) if dp else None,
            ))
    return out


def generate_files(spec: ScenarioSpec, trace_path, truth_path) -> tuple[FlowTable, list[TruthRecord]]:
    table, truths = generate(spec)
    table.to_csv(trace_path)
    write_ground_truth(truths, truth_path)
    return table, truths


@dataclass(frozen=True)
class PowerLawReport:
    fit: PowerLawFit
    K: int
    residual: float
    bound: float | None
    holds: bool | None


def verify_powerlaw(table: FlowTable, feature: FeatureKind, K: int) -> PowerLawReport:
    """Fit the trace-level decay of one feature and check the tail bound."""
    counts = np.sort(np.unique(table.feature(feature), return_counts=True)[1])[::-1]
    counts = counts.astype(np.float64)
    fit = fit_power_law(counts)
    tail = counts[K:]
    residual = float(np.sqrt((tail * tail).sum()))
    if fit.degenerate or not 0 < fit.p < 2:
        return PowerLawReport(fit=fit, K=K, residual=residual, bound=None, holds=None)
    bound = tail_norm_bound(fit.R, fit.p, K)
    return PowerLawReport(fit=fit, K=K, residual=residual, bound=bound,
                          holds=bool(residual <= bound))


def mixed_scenario(n_scans: int = 20, n_dos: int = 10, n_ddos: int = 10,
                   duration_bins: int = 672, flows_per_bin: int = 14000,
                   seed: int = 7) -> ScenarioSpec:
    """A week-long scenario with a spread of attack kinds and sizings.

    Injections land on distinct bins. Scans mix strong sweeps, a few
    packet-filter-only sweeps with larger payloads, and a few faint sweeps
    near the election cutoff; floods mix both visibility classes.
    """
    rng = np.random.default_rng(seed)
    n_total = n_scans + n_dos + n_ddos
    usable = np.arange(2, duration_bins - 2)
    bins = rng.choice(usable, size=n_total, replace=False)
    injections = []
    k = 0

    for i in range(n_scans):
        if i < max(1, n_scans // 5):           # faint sweeps
            inten = int(rng.integers(46, 55))
            sizing = Sizing.TINY
        elif i < max(2, 2 * n_scans // 5):     # larger-payload sweeps
            inten = int(rng.integers(90, 220))
            sizing = Sizing.SMALL
        else:
            inten = int(rng.integers(85, 260))
            sizing = Sizing.TINY
        injections.append(InjectionSpec(AttackKind.SCAN, int(bins[k]), inten, sizing))
        k += 1

    for i in range(n_dos):
        sizing = Sizing.SMALL if i % 3 == 0 else Sizing.TINY
        injections.append(InjectionSpec(
            AttackKind.DOS, int(bins[k]), int(rng.integers(75, 93)), sizing))
        k += 1

    for i in range(n_ddos):
        sizing = Sizing.SMALL if i % 3 == 1 else Sizing.TINY
        injections.append(InjectionSpec(
            AttackKind.DDOS, int(bins[k]), int(rng.integers(160, 400)), sizing))
        k += 1

    return ScenarioSpec(duration_bins=duration_bins, flows_per_bin=flows_per_bin,
                        powerlaw_p=0.8, injections=tuple(injections), seed=seed)
