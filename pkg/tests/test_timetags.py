import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdmqkd.exceptions import ContractViolationError, DataParseError
from sdmqkd.sim.timetags import (
    HEADER,
    MAGIC,
    TimeTagSet,
    channel_id,
    channel_owner,
    read_binary,
    read_csv,
    read_tags,
    write_binary,
    write_csv,
    write_tags,
)

channel_sets = st.dictionaries(
    st.integers(0, 23),
    st.sets(st.integers(0, 10**12), max_size=30).map(lambda s: np.array(sorted(s), dtype=np.int64)),
    max_size=6,
)


def sample():
    return TimeTagSet({0: [5, 10, 40], 1: [7], 4: [], 5: [10, 11]}, {"duration": 1.0})


class TestContainer:
    def test_invariants(self):
        with pytest.raises(ContractViolationError):
            TimeTagSet({0: [3, 3]})
        with pytest.raises(ContractViolationError):
            TimeTagSet({0: [-1, 3]})
        with pytest.raises(ContractViolationError):
            TimeTagSet({0: [2 * 10**12]}, {"duration": 1.0})

    def test_read_only(self):
        with pytest.raises(ValueError):
            sample().channels[0][0] = 1

    def test_records_sorted_by_time(self):
        rec = sample().records()
        assert list(rec["time_ps"]) == sorted(rec["time_ps"])
        assert list(rec["channel"][rec["time_ps"] == 10]) == [0, 5]

    def test_channel_ids(self):
        assert channel_id(2, 3) == 11
        assert channel_owner(11) == (2, 3)


class TestFormats:
    @pytest.mark.parametrize("fmt", ["csv", "bin"])
    def test_roundtrip(self, tmp_path, fmt):
        tags = sample()
        path = tmp_path / f"t.{fmt}"
        write_tags(tags, path, fmt)
        back = read_tags(path, tags.meta, channels=sorted(tags.channels))
        assert back == tags
        assert sorted(back.channels) == sorted(tags.channels)

    @given(channel_sets)
    def test_roundtrip_property(self, channels):
        import tempfile
        from pathlib import Path

        tags = TimeTagSet(channels)
        with tempfile.TemporaryDirectory() as d:
            for writer, reader, name in ((write_csv, read_csv, "a.csv"), (write_binary, read_binary, "a.bin")):
                p = Path(d) / name
                writer(tags, p)
                assert reader(p) == tags

    def test_binary_layout(self, tmp_path):
        path = tmp_path / "t.bin"
        write_binary(sample(), path)
        raw = path.read_bytes()
        assert HEADER.size == 16
        assert raw[:8] == MAGIC
        assert len(raw) == 16 + 6 * 10

    def test_csv_header(self, tmp_path):
        path = tmp_path / "t.csv"
        write_csv(sample(), path)
        assert path.read_text().splitlines()[:2] == ["channel,time_ps", "0,5"]

    def test_corrupt_csv_reports_line(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("channel,time_ps\n0,5\n1,7\n0,abc\n")
        with pytest.raises(DataParseError, match="line 4"):
            read_csv(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,b\n")
        with pytest.raises(DataParseError, match="line 1"):
            read_csv(path)

    def test_unsorted_file_is_data_error(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("channel,time_ps\n0,5\n0,5\n")
        with pytest.raises(DataParseError):
            read_csv(path)

    def test_empty_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("channel,time_ps\n")
        assert read_csv(path, channels=[0, 1]).n_tags() == 0

    @pytest.mark.parametrize(
        "payload", [b"short", b"BADMAGIC" + b"\x01\x00" + bytes(6), MAGIC + b"\x09\x00" + bytes(6),
                    MAGIC + b"\x01\x00" + bytes(6) + b"\x00\x01\x02"]
    )
    def test_bad_binary(self, tmp_path, payload):
        path = tmp_path / "t.bin"
        path.write_bytes(payload)
        with pytest.raises(DataParseError):
            read_binary(path)
