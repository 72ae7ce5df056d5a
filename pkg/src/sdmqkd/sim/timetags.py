"""Time-tag container and its CSV / binary file formats.

Binary layout: a 16-byte header (8-byte magic, little-endian u16 version,
6 reserved zero bytes) followed by packed little-endian records of
``(u16 channel, i64 time_ps)`` in time order.
"""

import io
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ContractViolationError, DataParseError

MAGIC = b"SDMQTTAG"
VERSION = 1
HEADER = struct.Struct("<8sH6x")
RECORD = np.dtype([("channel", "<u2"), ("time_ps", "<i8")])
PORTS_PER_USER = 4  # H/T, V/R, D, A


def channel_id(user_index, port):
    return PORTS_PER_USER * user_index + port


def channel_owner(channel):
    return divmod(int(channel), PORTS_PER_USER)


@dataclass(frozen=True, eq=False)
class TimeTagSet:
    """Per-channel, strictly increasing picosecond timestamps."""

    channels: dict
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        fixed = {}
        limit = self.meta.get("duration")
        limit = None if limit is None else int(round(float(limit) * 1e12))
        for ch, tags in sorted(self.channels.items()):
            arr = np.ascontiguousarray(np.asarray(tags, dtype=np.int64))
            if arr.size > 1 and np.any(np.diff(arr) <= 0):
                raise ContractViolationError(f"channel {ch}: timestamps must be strictly increasing")
            if arr.size and (arr[0] < 0 or (limit is not None and arr[-1] > limit)):
                raise ContractViolationError(f"channel {ch}: timestamps outside [0, duration]")
            arr.setflags(write=False)
            fixed[int(ch)] = arr
        object.__setattr__(self, "channels", fixed)

    @property
    def duration(self):
        return float(self.meta.get("duration", 0.0))

    def __getitem__(self, channel):
        return self.channels.get(int(channel), np.empty(0, dtype=np.int64))

    def n_tags(self):
        return sum(a.size for a in self.channels.values())

    def __eq__(self, other):
        if not isinstance(other, TimeTagSet):
            return NotImplemented
        mine = {k: v for k, v in self.channels.items() if v.size}
        theirs = {k: v for k, v in other.channels.items() if v.size}
        return mine.keys() == theirs.keys() and all(np.array_equal(mine[k], theirs[k]) for k in mine)

    def records(self):
        """All tags as a structured array sorted by (time, channel)."""
        n = self.n_tags()
        rec = np.empty(n, dtype=RECORD)
        pos = 0
        for ch, arr in self.channels.items():
            rec["channel"][pos:pos + arr.size] = ch
            rec["time_ps"][pos:pos + arr.size] = arr
            pos += arr.size
        order = np.lexsort((rec["channel"], rec["time_ps"]))
        return rec[order]


def _from_records(channel, time_ps, meta, channels=None):
    order = np.lexsort((time_ps, channel))
    channel, time_ps = channel[order], time_ps[order]
    out = {int(c): np.empty(0, dtype=np.int64) for c in (channels or [])}
    if channel.size:
        cuts = np.flatnonzero(np.diff(channel)) + 1
        for ch_arr, t_arr in zip(np.split(channel, cuts), np.split(time_ps, cuts)):
            out[int(ch_arr[0])] = t_arr
    try:
        return TimeTagSet(out, dict(meta or {}))
    except ContractViolationError as exc:
        raise DataParseError(str(exc)) from None


def write_csv(tags, path):
    rec = tags.records()
    with open(path, "w", newline="") as fh:
        fh.write("channel,time_ps\n")
        if rec.size:
            buf = io.StringIO()
            np.savetxt(buf, np.column_stack([rec["channel"].astype(np.int64), rec["time_ps"]]),
                       fmt="%d", delimiter=",")
            fh.write(buf.getvalue())


def _locate_bad_line(path):
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1:
                continue
            parts = line.strip().split(",")
            if not line.strip():
                continue
            try:
                if len(parts) != 2:
                    raise ValueError
                ch, t = int(parts[0]), int(parts[1])
                if not (0 <= ch < 65536):
                    raise ValueError
            except ValueError:
                return lineno, line.rstrip("\n")
    return None, None


def read_csv(path, meta=None, channels=None):
    with open(path) as fh:
        header = fh.readline().strip()
    if header != "channel,time_ps":
        raise DataParseError(f"expected header 'channel,time_ps', got {header!r}", line=1)
    try:
        with warnings.catch_warnings():
            warnings.filterwarnings("ignore", message="loadtxt: input contained no data")
            data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.int64, ndmin=2)
    except ValueError:
        lineno, text = _locate_bad_line(path)
        raise DataParseError(f"malformed row {text!r}", line=lineno) from None
    if data.size == 0:
        data = data.reshape(0, 2)
    if data.shape[1] != 2 or np.any((data[:, 0] < 0) | (data[:, 0] > 65535)):
        lineno, text = _locate_bad_line(path)
        raise DataParseError(f"malformed row {text!r}", line=lineno)
    return _from_records(data[:, 0].astype(np.uint16), data[:, 1], meta, channels)


def write_binary(tags, path):
    rec = tags.records()
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION))
        fh.write(rec.tobytes())


def read_binary(path, meta=None, channels=None):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise DataParseError("file shorter than header")
    magic, version = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise DataParseError(f"bad magic {magic!r}")
    if version != VERSION:
        raise DataParseError(f"unsupported version {version}")
    body = raw[HEADER.size:]
    if len(body) % RECORD.itemsize:
        raise DataParseError("truncated record")
    rec = np.frombuffer(body, dtype=RECORD)
    return _from_records(rec["channel"].copy(), rec["time_ps"].astype(np.int64), meta, channels)


def write_tags(tags, path, fmt):
    if fmt == "csv":
        write_csv(tags, path)
    elif fmt == "bin":
        write_binary(tags, path)
    else:
        raise ValueError(f"unknown tag format {fmt!r}")


def read_tags(path, meta=None, channels=None):
    path = str(path)
    if path.endswith(".csv"):
        return read_csv(path, meta, channels)
    return read_binary(path, meta, channels)
