import numpy as np
import pytest

from flowsenate.flows import (ALL_FEATURES, FeatureKind, FlowRecord, FlowTable,
                              Heuristic, PrefilterConfig, Protocol, TimeBin,
                              TraceFormatError, TRACE_HEADER, bin_count,
                              bin_indices, bin_records, int_to_ip, ip_to_int,
                              parse_trace, prefilter, prefilter_mask,
                              read_trace_table)


def rec(start=0, duration=10, src_ip="10.0.0.1", dst_ip="172.16.0.1",
        src_as=100, dst_as=200, src_port=1234, dst_port=80,
        protocol=Protocol.TCP, packets=1, bytes=60):
    return FlowRecord(start, duration, src_ip, dst_ip, src_as, dst_as,
                      src_port, dst_port, protocol, packets, bytes)


class TestFlowRecord:
    def test_valid_roundtrip(self):
        r = rec(packets=3, bytes=200, protocol=Protocol.UDP)
        assert FlowRecord.from_csv_line(r.to_csv_line()) == r

    @pytest.mark.parametrize("kwargs", [
        dict(src_port=70000),
        dict(dst_port=-1),
        dict(packets=0),
        dict(bytes=0),            # bytes < packets
        dict(duration=-5),
        dict(src_as=-1),
        dict(dst_as=2**32),
        dict(src_ip="not-an-ip"),
        dict(dst_ip="300.1.2.3"),
    ])
    def test_rejects_out_of_range(self, kwargs):
        base = dict(start=0, duration=1, src_ip="10.0.0.1", dst_ip="172.16.0.1",
                    src_as=1, dst_as=2, src_port=10, dst_port=20,
                    protocol=Protocol.TCP, packets=2, bytes=100)
        base.update(kwargs)
        with pytest.raises(ValueError):
            FlowRecord(base["start"], base["duration"], base["src_ip"],
                       base["dst_ip"], base["src_as"], base["dst_as"],
                       base["src_port"], base["dst_port"], base["protocol"],
                       base["packets"], base["bytes"])

    def test_ip_int_roundtrip(self):
        for addr in ("0.0.0.0", "10.1.2.3", "255.255.255.255"):
            assert int_to_ip(ip_to_int(addr)) == addr


class TestTraceReading:
    def _write(self, path, lines):
        path.write_text("\n".join([TRACE_HEADER, *lines]) + "\n")

    def test_reads_clean_file(self, tmp_path):
        p = tmp_path / "t.csv"
        rows = [rec(start=i, dst_port=80 + i).to_csv_line() for i in range(5)]
        self._write(p, rows)
        table, malformed = read_trace_table(p)
        assert len(table) == 5 and malformed == 0
        assert table.dst_port.tolist() == [80, 81, 82, 83, 84]

    def test_counts_bad_port_line_as_malformed(self, tmp_path):
        p = tmp_path / "t.csv"
        good = [rec(start=i).to_csv_line() for i in range(199)]
        bad = good[0].replace(",80,", ",70000,")
        self._write(p, good + [bad])
        table, malformed = read_trace_table(p)
        assert malformed == 1
        assert len(table) == 199

    def test_rejects_too_many_malformed(self, tmp_path):
        p = tmp_path / "t.csv"
        good = [rec(start=i).to_csv_line() for i in range(50)]
        self._write(p, good + ["garbage,line"])   # 1/51 > 1%
        with pytest.raises(TraceFormatError):
            read_trace_table(p)

    def test_rejects_wrong_header(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(TraceFormatError):
            read_trace_table(p)

    def test_parse_trace_records_match_table(self, tmp_path):
        p = tmp_path / "t.csv"
        rows = [rec(start=i * 7, src_port=1000 + i).to_csv_line() for i in range(8)]
        self._write(p, rows)
        records = parse_trace(p)
        table, _ = read_trace_table(p)
        assert [r.to_csv_line() for r in records] == \
               [r.to_csv_line() for r in table.to_records()]
        assert records.malformed == 0

    def test_table_csv_roundtrip(self, tmp_path):
        recs = [rec(start=i, packets=i + 1, bytes=100 * (i + 1)) for i in range(6)]
        table = FlowTable.from_records(recs)
        p = tmp_path / "out.csv"
        table.to_csv(p)
        again, malformed = read_trace_table(p)
        assert malformed == 0
        assert [r.to_csv_line() for r in again.to_records()] == \
               [r.to_csv_line() for r in recs]


class TestPrefilter:
    def test_h1_packet_cap_inclusive(self):
        records = [rec(packets=p, bytes=1500) for p in (1, 3, 4)]
        kept = prefilter(records, PrefilterConfig(Heuristic.H1))
        assert [r.packets for r in kept] == [1, 3]

    def test_h2_byte_cap_inclusive(self):
        records = [rec(packets=1, bytes=b) for b in (40, 64, 65)]
        kept = prefilter(records, PrefilterConfig(Heuristic.H2))
        assert [r.bytes for r in kept] == [40, 64]

    def test_mask_matches_record_filter(self):
        rng = np.random.default_rng(4)
        records = [rec(packets=int(p), bytes=int(p) * 60)
                   for p in rng.integers(1, 8, size=40)]
        table = FlowTable.from_records(records)
        for h in Heuristic:
            cfg = PrefilterConfig(h)
            mask = prefilter_mask(table, cfg)
            assert mask.sum() == len(prefilter(records, cfg))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PrefilterConfig(Heuristic.H1, alpha=0)


class TestBinning:
    def test_eighteen_day_trace_has_1728_bins(self):
        starts = np.array([0, 1_555_199])   # 18 days of 900 s bins
        t0, n = bin_count(starts, 900)
        assert (t0, n) == (0, 1728)

    def test_boundary_flow_goes_to_later_bin(self):
        records = [rec(start=0), rec(start=899), rec(start=900)]
        binned = bin_records(records, 900)
        sizes = {b.index: len(v) for b, v in binned.items()}
        assert sizes == {0: 2, 1: 1}

    def test_empty_interior_bins_present(self):
        records = [rec(start=0), rec(start=2700)]
        binned = bin_records(records, 900)
        assert sorted(b.index for b in binned) == [0, 1, 2, 3]
        assert [len(binned[b]) for b in sorted(binned, key=lambda b: b.index)] == \
               [1, 0, 0, 1]

    def test_bin_indices_matches_record_binning(self):
        rng = np.random.default_rng(1)
        records = [rec(start=int(s)) for s in rng.integers(0, 5000, size=60)]
        table = FlowTable.from_records(records)
        idx, t0, n_bins = bin_indices(table, 900)
        binned = bin_records(records, 900)
        assert n_bins == len(binned)
        for b, members in binned.items():
            assert int((idx == b.index).sum()) == len(members)

    def test_rejects_empty_and_bad_width(self):
        with pytest.raises(ValueError):
            bin_records([], 900)
        with pytest.raises(ValueError):
            bin_records([rec()], 0)

    def test_timebin_validation(self):
        with pytest.raises(ValueError):
            TimeBin(index=-1, start=0)


class TestFlowTable:
    def test_take_and_feature(self):
        records = [rec(src_as=i, dst_as=10 * i, src_port=i + 1, dst_port=2 * i + 1)
                   for i in range(1, 6)]
        table = FlowTable.from_records(records)
        sub = table.take(np.array([0, 2, 4]))
        assert sub.src_as.tolist() == [1, 3, 5]
        assert table.feature(FeatureKind.DST_AS).tolist() == [10, 20, 30, 40, 50]
        assert len(ALL_FEATURES) == 4
