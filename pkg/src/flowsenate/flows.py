"""Flow records, trace parsing, time binning, and small-flow pre-filters.

Traces are CSV files with the canonical header
``start_time,duration,src_ip,dst_ip,src_as,dst_as,src_port,dst_port,protocol,packets,bytes``.
Two representations are provided: :class:`FlowRecord` for record-level work
and :class:`FlowTable` (columnar numpy) for whole-trace pipelines.
"""

from __future__ import annotations

import enum
import ipaddress
import logging
from dataclasses import dataclass, fields as dc_fields

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

TRACE_HEADER = "start_time,duration,src_ip,dst_ip,src_as,dst_as,src_port,dst_port,protocol,packets,bytes"
TRACE_COLUMNS = TRACE_HEADER.split(",")

MAX_AS = 2**32 - 1
MAX_PORT = 65535

# abort threshold for dirty traces
MALFORMED_FRACTION_LIMIT = 0.01


class TraceFormatError(ValueError):
    """Raised for header mismatches and traces with too many bad lines."""


class Protocol(enum.Enum):
    TCP = "TCP"
    UDP = "UDP"
    OTHER = "OTHER"

    @classmethod
    def from_str(cls, s: str) -> "Protocol":
        try:
            return cls(s)
        except ValueError:
            raise ValueError(f"unknown protocol literal: {s!r}") from None


class FeatureKind(enum.Enum):
    """The four traffic features every pipeline stage iterates over."""

    SRC_AS = "src_as"
    DST_AS = "dst_as"
    SRC_PORT = "src_port"
    DST_PORT = "dst_port"

    @property
    def column(self) -> str:
        return self.value


ALL_FEATURES = tuple(FeatureKind)


class Heuristic(enum.Enum):
    H1 = "H1"  # small packet count per flow
    H2 = "H2"  # small byte count per flow


@dataclass(frozen=True)
class PrefilterConfig:
    heuristic: Heuristic
    alpha: int = 3   # packet-count threshold (H1)
    beta: int = 64   # byte-count threshold (H2)

    def __post_init__(self):
        if self.alpha < 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")


@dataclass(frozen=True)
class TimeBin:
    index: int
    start: int
    width: int = 900

    def __post_init__(self):
        if self.index < 0:
            raise ValueError(f"bin index must be >= 0, got {self.index}")
        if self.width <= 0:
            raise ValueError(f"bin width must be > 0, got {self.width}")


@dataclass(frozen=True)
class FlowRecord:
    """One sampled flow. Immutable; validated on construction."""

    start_time: int
    duration: int
    src_ip: str
    dst_ip: str
    src_as: int
    dst_as: int
    src_port: int
    dst_port: int
    protocol: Protocol
    packets: int
    bytes: int

    def __post_init__(self):
        for name in ("src_ip", "dst_ip"):
            addr = getattr(self, name)
            try:
                ipaddress.IPv4Address(addr)
            except (ipaddress.AddressValueError, ValueError):
                raise ValueError(f"{name} is not a valid IPv4 address: {addr!r}") from None
        for name in ("src_as", "dst_as"):
            v = getattr(self, name)
            if not 0 <= v <= MAX_AS:
                raise ValueError(f"{name} out of range: {v}")
        for name in ("src_port", "dst_port"):
            v = getattr(self, name)
            if not 0 <= v <= MAX_PORT:
                raise ValueError(f"{name} out of range: {v}")
        if self.packets < 1:
            raise ValueError(f"packets must be >= 1, got {self.packets}")
        if self.bytes < self.packets:
            raise ValueError(f"bytes ({self.bytes}) < packets ({self.packets})")
        if self.duration < 0:
            raise ValueError(f"duration must be >= 0, got {self.duration}")

    def to_csv_line(self) -> str:
        """Canonical one-line serialization (inverse of parsing)."""
        return (f"{self.start_time},{self.duration},{self.src_ip},{self.dst_ip},"
                f"{self.src_as},{self.dst_as},{self.src_port},{self.dst_port},"
                f"{self.protocol.value},{self.packets},{self.bytes}")

    @classmethod
    def from_csv_line(cls, line: str) -> "FlowRecord":
        parts = line.rstrip("\n").split(",")
        if len(parts) != len(TRACE_COLUMNS):
            raise ValueError(f"expected {len(TRACE_COLUMNS)} fields, got {len(parts)}")
        (start, dur, sip, dip, sas, das, sport, dport, proto, pkts, byts) = parts
        return cls(
            start_time=int(start), duration=int(dur), src_ip=sip, dst_ip=dip,
            src_as=int(sas), dst_as=int(das), src_port=int(sport),
            dst_port=int(dport), protocol=Protocol.from_str(proto),
            packets=int(pkts), bytes=int(byts),
        )


def ip_to_int(addr: str) -> int:
    return int(ipaddress.IPv4Address(addr))


def int_to_ip(v: int) -> str:
    return str(ipaddress.IPv4Address(int(v)))


_PROTO_CODE = {Protocol.TCP: 0, Protocol.UDP: 1, Protocol.OTHER: 2}
_CODE_PROTO = {v: k for k, v in _PROTO_CODE.items()}
_PROTO_NAME_CODE = {p.value: c for p, c in _PROTO_CODE.items()}


@dataclass
class FlowTable:
    """Column-oriented trace; the bulk counterpart of a FlowRecord list.

    IPs are packed as uint32, protocol as a small integer code. All arrays
    share one length and are treated as immutable.
    """

    start_time: np.ndarray
    duration: np.ndarray
    src_ip: np.ndarray
    dst_ip: np.ndarray
    src_as: np.ndarray
    dst_as: np.ndarray
    src_port: np.ndarray
    dst_port: np.ndarray
    protocol: np.ndarray
    packets: np.ndarray
    bytes: np.ndarray

    def __len__(self) -> int:
        return self.start_time.shape[0]

    def take(self, idx: np.ndarray) -> "FlowTable":
        """Row subset by boolean mask or index array."""
        return FlowTable(**{f.name: getattr(self, f.name)[idx] for f in dc_fields(self)})

    def feature(self, kind: FeatureKind) -> np.ndarray:
        return getattr(self, kind.column)

    @classmethod
    def from_records(cls, records) -> "FlowTable":
        records = list(records)
        return cls(
            start_time=np.array([r.start_time for r in records], dtype=np.int64),
            duration=np.array([r.duration for r in records], dtype=np.int64),
            src_ip=np.array([ip_to_int(r.src_ip) for r in records], dtype=np.uint32),
            dst_ip=np.array([ip_to_int(r.dst_ip) for r in records], dtype=np.uint32),
            src_as=np.array([r.src_as for r in records], dtype=np.int64),
            dst_as=np.array([r.dst_as for r in records], dtype=np.int64),
            src_port=np.array([r.src_port for r in records], dtype=np.int64),
            dst_port=np.array([r.dst_port for r in records], dtype=np.int64),
            protocol=np.array([_PROTO_CODE[r.protocol] for r in records], dtype=np.uint8),
            packets=np.array([r.packets for r in records], dtype=np.int64),
            bytes=np.array([r.bytes for r in records], dtype=np.int64),
        )

    def to_records(self) -> list[FlowRecord]:
        return [
            FlowRecord(
                start_time=int(self.start_time[i]), duration=int(self.duration[i]),
                src_ip=int_to_ip(self.src_ip[i]), dst_ip=int_to_ip(self.dst_ip[i]),
                src_as=int(self.src_as[i]), dst_as=int(self.dst_as[i]),
                src_port=int(self.src_port[i]), dst_port=int(self.dst_port[i]),
                protocol=_CODE_PROTO[int(self.protocol[i])],
                packets=int(self.packets[i]), bytes=int(self.bytes[i]),
            )
            for i in range(len(self))
        ]

    def to_csv(self, path) -> None:
        df = pd.DataFrame({
            "start_time": self.start_time,
            "duration": self.duration,
            "src_ip": _ips_to_str(self.src_ip),
            "dst_ip": _ips_to_str(self.dst_ip),
            "src_as": self.src_as,
            "dst_as": self.dst_as,
            "src_port": self.src_port,
            "dst_port": self.dst_port,
            "protocol": np.array([p.value for p in _CODE_PROTO.values()], dtype=object)[self.protocol],
            "packets": self.packets,
            "bytes": self.bytes,
        })
        df.to_csv(path, index=False)


def _ips_to_str(packed: np.ndarray) -> np.ndarray:
    uniq, inv = np.unique(packed, return_inverse=True)
    rendered = np.array([int_to_ip(v) for v in uniq.tolist()], dtype=object)
    return rendered[inv]


def _ips_from_str(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Parse dotted-quad strings; returns (uint32 array, valid mask)."""
    uniq, inv = np.unique(np.asarray(values, dtype=object), return_inverse=True)
    packed = np.zeros(len(uniq), dtype=np.uint32)
    ok = np.ones(len(uniq), dtype=bool)
    for i, s in enumerate(uniq.tolist()):
        try:
            packed[i] = int(ipaddress.IPv4Address(s))
        except (ipaddress.AddressValueError, ValueError, TypeError):
            ok[i] = False
    return packed[inv], ok[inv]


def _count_data_lines(path) -> int:
    n = 0
    last = b"\n"
    with open(path, "rb") as fh:
        while chunk := fh.read(1 << 22):
            n += chunk.count(b"\n")
            last = chunk
    if not last.endswith(b"\n"):
        n += 1
    return max(0, n - 1)  # minus header


def read_trace_table(path) -> tuple[FlowTable, int]:
    """Load a trace into a FlowTable; returns (table, malformed_line_count).

    Raises TraceFormatError on a bad header or when malformed lines exceed
    1% of the file.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
    if header != TRACE_HEADER:
        raise TraceFormatError(f"bad trace header: {header!r}")

    n_lines = _count_data_lines(path)
    if n_lines == 0:
        return _empty_table(), 0

    try:
        table, malformed = _read_fast(path, n_lines)
    except (ValueError, TypeError, pd.errors.ParserError):
        table, malformed = _read_tolerant(path, n_lines)

    if malformed:
        log.warning("trace %s: %d of %d lines malformed", path, malformed, n_lines)
    if malformed > MALFORMED_FRACTION_LIMIT * n_lines:
        raise TraceFormatError(
            f"{malformed} of {n_lines} lines malformed (> {MALFORMED_FRACTION_LIMIT:.0%})")
    return table, malformed


def _empty_table() -> FlowTable:
    z64 = np.zeros(0, dtype=np.int64)
    return FlowTable(
        start_time=z64, duration=z64.copy(),
        src_ip=np.zeros(0, dtype=np.uint32), dst_ip=np.zeros(0, dtype=np.uint32),
        src_as=z64.copy(), dst_as=z64.copy(), src_port=z64.copy(), dst_port=z64.copy(),
        protocol=np.zeros(0, dtype=np.uint8), packets=z64.copy(), bytes=z64.copy(),
    )


def _read_fast(path, n_lines: int) -> tuple[FlowTable, int]:
    df = pd.read_csv(
        path,
        dtype={c: "int64" for c in TRACE_COLUMNS if c not in ("src_ip", "dst_ip", "protocol")}
        | {"src_ip": "object", "dst_ip": "object", "protocol": "object"},
        na_filter=False,
        on_bad_lines="skip",
    )
    if list(df.columns) != TRACE_COLUMNS:
        raise TraceFormatError(f"bad trace header: {','.join(df.columns)!r}")
    ragged = n_lines - len(df)

    sip, sip_ok = _ips_from_str(df["src_ip"].to_numpy())
    dip, dip_ok = _ips_from_str(df["dst_ip"].to_numpy())
    proto = df["protocol"].map(_PROTO_NAME_CODE)
    proto_ok = proto.notna().to_numpy()
    good = sip_ok & dip_ok & proto_ok & _valid_ranges(df)

    table = FlowTable(
        start_time=df["start_time"].to_numpy()[good],
        duration=df["duration"].to_numpy()[good],
        src_ip=sip[good], dst_ip=dip[good],
        src_as=df["src_as"].to_numpy()[good],
        dst_as=df["dst_as"].to_numpy()[good],
        src_port=df["src_port"].to_numpy()[good],
        dst_port=df["dst_port"].to_numpy()[good],
        protocol=proto.to_numpy(dtype="float64")[good].astype(np.uint8),
        packets=df["packets"].to_numpy()[good],
        bytes=df["bytes"].to_numpy()[good],
    )
    return table, ragged + int((~good).sum())


def _valid_ranges(df: pd.DataFrame) -> np.ndarray:
    ok = (df["src_as"].to_numpy() >= 0) & (df["src_as"].to_numpy() <= MAX_AS)
    ok &= (df["dst_as"].to_numpy() >= 0) & (df["dst_as"].to_numpy() <= MAX_AS)
    for c in ("src_port", "dst_port"):
        v = df[c].to_numpy()
        ok &= (v >= 0) & (v <= MAX_PORT)
    pk = df["packets"].to_numpy()
    ok &= pk >= 1
    ok &= df["bytes"].to_numpy() >= pk
    ok &= df["duration"].to_numpy() >= 0
    return ok


def _read_tolerant(path, n_lines: int) -> tuple[FlowTable, int]:
    records = []
    malformed = 0
    with open(path, "r", encoding="utf-8") as fh:
        fh.readline()  # header, already checked
        for line in fh:
            if not line.strip():
                malformed += 1
                continue
            try:
                records.append(FlowRecord.from_csv_line(line))
            except (ValueError, TypeError):
                malformed += 1
    table = FlowTable.from_records(records) if records else _empty_table()
    return table, malformed


class ParsedTrace(list):
    """Sequence of FlowRecord with a malformed-line counter attached."""

    malformed: int = 0


def parse_trace(path) -> ParsedTrace:
    """Record-level trace loader; see read_trace_table for the bulk path."""
    table, malformed = read_trace_table(path)
    out = ParsedTrace(table.to_records())
    out.malformed = malformed
    return out


def prefilter(records, cfg: PrefilterConfig):
    """Keep small flows: H1 by packet count <= alpha, H2 by byte count <= beta."""
    if cfg.heuristic is Heuristic.H1:
        return [r for r in records if r.packets <= cfg.alpha]
    return [r for r in records if r.bytes <= cfg.beta]


def prefilter_mask(table: FlowTable, cfg: PrefilterConfig) -> np.ndarray:
    if cfg.heuristic is Heuristic.H1:
        return table.packets <= cfg.alpha
    return table.bytes <= cfg.beta


def bin_count(start_times: np.ndarray, width: int) -> tuple[int, int]:
    """(trace_start, number of bins) for the given record start times."""
    t0 = int(start_times.min())
    last = int(start_times.max())
    return t0, (last - t0) // width + 1


def bin_indices(table: FlowTable, width: int, t0: int | None = None) -> tuple[np.ndarray, int, int]:
    """Assign each row to a bin; returns (indices, trace_start, n_bins)."""
    if len(table) == 0:
        raise ValueError("cannot bin an empty trace")
    if width <= 0:
        raise ValueError(f"bin width must be > 0, got {width}")
    if t0 is None:
        t0 = int(table.start_time.min())
    idx = (table.start_time - t0) // width
    return idx.astype(np.int64), t0, int(idx.max()) + 1


def bin_records(records, width: int) -> dict[TimeBin, list[FlowRecord]]:
    """Partition records into contiguous bins keyed by TimeBin.

    Empty interior bins are present with empty lists; a record on a bin
    boundary belongs to the later bin (floor convention).
    """
    records = list(records)
    if not records:
        raise ValueError("cannot bin an empty trace")
    if width <= 0:
        raise ValueError(f"bin width must be > 0, got {width}")
    t0 = min(r.start_time for r in records)
    n = (max(r.start_time for r in records) - t0) // width + 1
    out: dict[TimeBin, list[FlowRecord]] = {
        TimeBin(index=i, start=t0 + i * width, width=width): [] for i in range(n)
    }
    keys = list(out.keys())
    for r in records:
        out[keys[(r.start_time - t0) // width]].append(r)
    return out
