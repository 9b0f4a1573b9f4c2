"""Trajectory and summary record files.

Binary trajectory file::

    header  : magic b"VMFTRAJ1" | u16 version | u16 d | u64 N | 32-byte config digest
    record* : u32 payload length | u32 crc32(payload) | payload

    payload : f64 time | i64 step | u8 system tag | 7 pad | 32-byte digest | u64 n
              | n*d f64 positions | n*d f64 velocities | n i64 stream ids

All integers little-endian. Summary statistics go to CSV files whose leading
``# key = value`` comment lines carry the config digest.
"""

import csv
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .errors import RecordError

MAGIC = b"VMFTRAJ1"
VERSION = 1
_HEADER = struct.Struct("<8sHHQ32s")
_FRAME = struct.Struct("<II")
_PAYLOAD = struct.Struct("<dqB7x32sQ")


@dataclass
class TrajectoryRecord:
    config_hash: str
    time: float
    step: int
    system_tag: int
    positions: np.ndarray
    velocities: np.ndarray
    ids: np.ndarray = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype="<f8")
        self.velocities = np.ascontiguousarray(self.velocities, dtype="<f8")
        if self.ids is None:
            self.ids = np.arange(self.positions.shape[0])
        self.ids = np.ascontiguousarray(self.ids, dtype="<i8")

    @classmethod
    def from_state(cls, state, config_hash, system_tag):
        return cls(config_hash, state.time, state.step, int(system_tag), state.positions,
                   state.velocities, state.ids)

    def to_state(self):
        from .particle_system import ParticleState

        return ParticleState(self.positions.copy(), self.velocities.copy(), self.time, self.step,
                             self.ids.copy())

    def bit_equal(self, other):
        return (self.config_hash == other.config_hash
                and struct.pack("<d", self.time) == struct.pack("<d", other.time)
                and self.step == other.step and self.system_tag == other.system_tag
                and self.positions.tobytes() == other.positions.tobytes()
                and self.velocities.tobytes() == other.velocities.tobytes()
                and self.ids.tobytes() == other.ids.tobytes())


def _digest(h):
    b = bytes.fromhex(h) if h else b"\0" * 32
    if len(b) != 32:
        raise RecordError(f"config hash must be a sha256 hex digest, got {h!r}")
    return b


class RecordWriter:
    """Append-only writer; one owner per path."""

    def __init__(self, path, d, N, config_hash):
        self.path = str(path)
        self.d, self.N, self.config_hash = d, N, config_hash
        self._last_time = -np.inf
        try:
            self._fh = open(self.path, "wb")
            self._fh.write(_HEADER.pack(MAGIC, VERSION, d, N, _digest(config_hash)))
        except OSError as exc:
            raise RecordError(f"{self.path}: cannot write ({exc.strerror})") from exc

    def write(self, rec):
        if rec.config_hash != self.config_hash:
            raise RecordError(f"{self.path}: record hash {rec.config_hash[:12]} does not match "
                              f"file hash {self.config_hash[:12]}")
        if rec.positions.ndim != 2 or rec.positions.shape[1] != self.d:
            raise RecordError(f"{self.path}: record dimension does not match header d={self.d}")
        if rec.time < self._last_time:
            raise RecordError(f"{self.path}: records must be appended in time order")
        self._last_time = rec.time
        n = rec.positions.shape[0]
        payload = b"".join([
            _PAYLOAD.pack(rec.time, rec.step, rec.system_tag, _digest(rec.config_hash), n),
            rec.positions.tobytes(), rec.velocities.tobytes(), rec.ids.tobytes()])
        try:
            self._fh.write(_FRAME.pack(len(payload), zlib.crc32(payload)))
            self._fh.write(payload)
        except OSError as exc:
            raise RecordError(f"{self.path}: write failed ({exc.strerror})") from exc

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_records(path, records, d=None, N=None, config_hash=None):
    records = list(records)
    if records:
        d = records[0].positions.shape[1] if d is None else d
        N = records[0].positions.shape[0] if N is None else N
        config_hash = records[0].config_hash if config_hash is None else config_hash
    if d is None or N is None or config_hash is None:
        raise RecordError("an empty record file needs explicit d, N and config_hash")
    with RecordWriter(path, d, N, config_hash) as w:
        for r in records:
            w.write(r)


def read_records(path):
    """Return ``(header, records)``; header is a dict with d, N, config_hash, version."""
    path = str(path)
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise RecordError(f"{path}: cannot read ({exc.strerror})") from exc
    if len(data) < _HEADER.size:
        raise RecordError(f"{path}: truncated header at byte offset 0")
    magic, version, d, N, digest = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise RecordError(f"{path}: not a trajectory file (bad magic at byte offset 0)")
    if version != VERSION:
        raise RecordError(f"{path}: unsupported format version {version}")
    header = dict(version=version, d=d, N=N, config_hash=digest.hex())
    out, off = [], _HEADER.size
    while off < len(data):
        if off + _FRAME.size > len(data):
            raise RecordError(f"{path}: truncated record frame at byte offset {off}")
        length, crc = _FRAME.unpack_from(data, off)
        start = off + _FRAME.size
        payload = data[start:start + length]
        if len(payload) != length:
            raise RecordError(f"{path}: truncated record at byte offset {off}")
        if zlib.crc32(payload) != crc:
            raise RecordError(f"{path}: checksum mismatch in record at byte offset {off}")
        t, step, tag, h, n = _PAYLOAD.unpack_from(payload, 0)
        if length != _PAYLOAD.size + n * (2 * d + 1) * 8:
            raise RecordError(f"{path}: inconsistent record length at byte offset {off}")
        body = np.frombuffer(payload, dtype="<f8", offset=_PAYLOAD.size, count=2 * n * d)
        ids = np.frombuffer(payload, dtype="<i8", offset=_PAYLOAD.size + 16 * n * d, count=n)
        out.append(TrajectoryRecord(h.hex(), t, step, tag, body[:n * d].reshape(n, d).copy(),
                                    body[n * d:].reshape(n, d).copy(), ids.copy()))
        off = start + length
    return header, out


def write_summary(path, columns, rows, meta=None):
    """CSV with ``# key = value`` metadata lines (config hash, scheme, ...)."""
    try:
        with open(path, "w", newline="") as fh:
            for k, v in (meta or {}).items():
                fh.write(f"# {k} = {v}\n")
            w = csv.writer(fh)
            w.writerow(columns)
            for row in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x
                            for x in row])
    except OSError as exc:
        raise RecordError(f"{path}: cannot write ({exc.strerror})") from exc


def read_summary(path):
    meta, lines = {}, []
    try:
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    k, _, v = line[1:].partition("=")
                    meta[k.strip()] = v.strip()
                else:
                    lines.append(line)
    except OSError as exc:
        raise RecordError(f"{path}: cannot read ({exc.strerror})") from exc
    reader = csv.reader(lines)
    columns = next(reader, [])
    return meta, columns, [row for row in reader]
