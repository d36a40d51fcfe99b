"""Append-only log-structured key/value map.

File format (all integers big-endian)::

    header   8 bytes  b"VOSDLOG1"
    record   type:u8  key_len:u32  key  value_len:u32  value  crc:u32

``crc`` is CRC-32/ISO-HDLC (``zlib.crc32``) over every preceding byte of the
record, type byte included. Record types:

    0x01  PUT      key -> value
    0x02  DELETE   tombstone for key; value is empty
    0x03  COMMIT   empty key; value = batch_seq:u64 record_count:u32

A batch is a run of PUT/DELETE records closed by one COMMIT whose
record_count matches. On open the log is scanned front to back; a batch
becomes visible only when its COMMIT record is intact. The first torn,
corrupt or uncommitted record ends the scan and the file is truncated there.
"""

import bisect
import os
import struct
import threading
import zlib
from dataclasses import dataclass

from .errors import IoFailure

MAGIC = b"VOSDLOG1"
PUT, DELETE, COMMIT = 1, 2, 3

_LEN = struct.Struct(">I")
_CRC = struct.Struct(">I")
_COMMIT_VALUE = struct.Struct(">QI")


@dataclass
class CompactReport:
    records_dropped: int
    bytes_reclaimed: int


@dataclass
class RecoveryInfo:
    batches: int = 0
    truncated_bytes: int = 0


def encode_record(kind, key, value=b""):
    body = bytes([kind]) + _LEN.pack(len(key)) + key + _LEN.pack(len(value)) + value
    return body + _CRC.pack(zlib.crc32(body))


def encode_batch(seq, entries):
    """Serialize one committed batch of ``(key, value_or_None)`` entries."""
    out = [encode_record(PUT, k, v) if v is not None else encode_record(DELETE, k) for k, v in entries]
    out.append(encode_record(COMMIT, b"", _COMMIT_VALUE.pack(seq, len(entries))))
    return b"".join(out)


def _parse(buf, pos):
    """Decode the record at ``pos``; return (kind, key, value_off, value_len, end) or None."""
    if pos + 5 > len(buf):
        return None
    kind = buf[pos]
    (klen,) = _LEN.unpack_from(buf, pos + 1)
    kpos = pos + 5
    if kpos + klen + 4 > len(buf):
        return None
    (vlen,) = _LEN.unpack_from(buf, kpos + klen)
    vpos = kpos + klen + 4
    end = vpos + vlen + 4
    if end > len(buf):
        return None
    (crc,) = _CRC.unpack_from(buf, vpos + vlen)
    if zlib.crc32(buf[pos:vpos + vlen]) != crc or kind not in (PUT, DELETE, COMMIT):
        return None
    return kind, bytes(buf[kpos:kpos + klen]), vpos, vlen, end


class LogStructuredMap:
    """Ordered key -> bytes map persisted in one append-only log file.

    Reads go through an in-memory index of value offsets. All access is
    serialized by one lock, so scans see each batch entirely or not at all.
    """

    def __init__(self, path, sync=True, auto_compact_bytes=64 << 20):
        self.path = os.fspath(path)
        self.sync = sync
        self.auto_compact_bytes = auto_compact_bytes
        self._lock = threading.RLock()
        self._index = {}
        self._keys = []
        self._seq = 0
        self._live_bytes = 0
        self._fd = None
        self.recovery = RecoveryInfo()
        self._open()

    # -- open / recovery -----------------------------------------------

    def _open(self):
        flags = os.O_RDWR | os.O_CREAT
        try:
            self._fd = os.open(self.path, flags, 0o644)
            with open(self.path, "rb") as f:
                buf = f.read()
        except OSError as e:
            raise IoFailure(f"opening {self.path}: {e}") from e
        if len(buf) < len(MAGIC) or buf[: len(MAGIC)] != MAGIC:
            # empty, torn header, or foreign file: start a fresh log
            self.recovery.truncated_bytes = len(buf)
            os.ftruncate(self._fd, 0)
            os.pwrite(self._fd, MAGIC, 0)
            self._fsync()
            self._size = len(MAGIC)
            return
        pos = good = len(MAGIC)
        pending = []
        while True:
            rec = _parse(buf, pos)
            if rec is None:
                break
            kind, key, voff, vlen, end = rec
            if kind == COMMIT:
                if vlen != _COMMIT_VALUE.size:
                    break
                seq, count = _COMMIT_VALUE.unpack_from(buf, voff)
                if count != len(pending):
                    break
                for k, v in pending:
                    self._apply(k, v)
                pending = []
                self._seq = seq
                self.recovery.batches += 1
                good = end
            else:
                pending.append((key, (voff, vlen, end - pos) if kind == PUT else None))
            pos = end
        if good < len(buf):
            self.recovery.truncated_bytes = len(buf) - good
            os.ftruncate(self._fd, good)
            self._fsync()
        self._size = good

    def _fsync(self):
        if self.sync:
            os.fsync(self._fd)

    def _apply(self, key, loc):
        old = self._index.get(key)
        if old is not None:
            self._live_bytes -= old[2]
        if loc is None:
            if old is not None:
                del self._index[key]
                i = bisect.bisect_left(self._keys, key)
                del self._keys[i]
            return
        if old is None:
            bisect.insort(self._keys, key)
        self._index[key] = loc
        self._live_bytes += loc[2]

    # -- public API ----------------------------------------------------

    def put_batch(self, entries):
        """Append ``(key, value)`` pairs atomically; a ``None`` value deletes.

        Values may also be zero-argument callables, resolved while the batch
        is written so large payloads need not all be held at once.
        """
        with self._lock:
            seq = self._seq + 1
            pos = self._size
            staged = []
            try:
                for key, value in entries:
                    if callable(value):
                        value = value()
                    if value is None:
                        rec = encode_record(DELETE, key)
                        staged.append((key, None))
                    else:
                        rec = encode_record(PUT, key, value)
                        voff = pos + 1 + 4 + len(key) + 4
                        staged.append((key, (voff, len(value), len(rec))))
                    os.pwrite(self._fd, rec, pos)
                    pos += len(rec)
                rec = encode_record(COMMIT, b"", _COMMIT_VALUE.pack(seq, len(staged)))
                os.pwrite(self._fd, rec, pos)
                pos += len(rec)
                self._fsync()
            except OSError as e:
                os.ftruncate(self._fd, self._size)
                raise IoFailure(f"appending to {self.path}: {e}") from e
            self._size = pos
            self._seq = seq
            for key, loc in staged:
                self._apply(key, loc)
            if self.auto_compact_bytes and self._size > self.auto_compact_bytes and self._live_bytes * 3 < self._size:
                self.compact()

    def get(self, key, offset=0, length=None):
        with self._lock:
            loc = self._index.get(key)
            if loc is None:
                return None
            voff, vlen, _ = loc
            if length is None:
                length = vlen - offset
            return os.pread(self._fd, length, voff + offset) if length else b""

    def __contains__(self, key):
        with self._lock:
            return key in self._index

    def value_length(self, key):
        with self._lock:
            loc = self._index.get(key)
            return None if loc is None else loc[1]

    def scan(self, prefix=b""):
        """Sorted ``(key, value)`` pairs under ``prefix``, read as one snapshot."""
        with self._lock:
            i = bisect.bisect_left(self._keys, prefix)
            out = []
            while i < len(self._keys) and self._keys[i].startswith(prefix):
                k = self._keys[i]
                voff, vlen, _ = self._index[k]
                out.append((k, os.pread(self._fd, vlen, voff) if vlen else b""))
                i += 1
        return iter(out)

    def keys(self, prefix=b""):
        with self._lock:
            i = bisect.bisect_left(self._keys, prefix)
            j = i
            while j < len(self._keys) and self._keys[j].startswith(prefix):
                j += 1
            return self._keys[i:j]

    def size(self):
        return self._size

    def compact(self):
        """Rewrite the log with one record per live key, in key order."""
        with self._lock:
            tmp = self.path + ".compact"
            old_size = self._size
            old_records = 0
            with open(self.path, "rb") as f:
                buf = f.read(old_size)
            pos = len(MAGIC)
            while pos < old_size:
                rec = _parse(buf, pos)
                if rec[0] != COMMIT:
                    old_records += 1
                pos = rec[4]
            live = len(self._keys)
            try:
                with open(tmp, "wb") as f:
                    f.write(MAGIC)
                    if live:
                        entries = []
                        for k in self._keys:
                            voff, vlen, _ = self._index[k]
                            entries.append((k, buf[voff:voff + vlen]))
                        f.write(encode_batch(self._seq, entries))
                    f.flush()
                    if self.sync:
                        os.fsync(f.fileno())
                os.replace(tmp, self.path)
            except OSError as e:
                raise IoFailure(f"compacting {self.path}: {e}") from e
            os.close(self._fd)
            self._index.clear()
            self._keys.clear()
            self._live_bytes = 0
            self.recovery = RecoveryInfo()
            self._open()
            return CompactReport(old_records - live, old_size - self._size)

    def close(self):
        with self._lock:
            if self._fd is not None:
                os.close(self._fd)
                self._fd = None
