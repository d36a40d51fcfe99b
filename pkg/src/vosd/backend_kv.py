"""Key/value backend storing a full payload copy per object version.

Every store mutation becomes one atomic `LogStructuredMap` batch holding the
payload changes and the touched metadata records. Key encoding, with ``c`` the
collection id, ``o`` the object id and ``be64`` a big-endian u64::

    b"S"                              store parameters (JSON)
    b"N" c                            collection header: next_cvid, counters
    b"C" c 00 be64(cvid)              collection version (JSON)
    b"P" c 00 name                    named pointer -> be64(cvid)
    b"O" c 00 o                       object header: next_vid
    b"V" c 00 o 00 be64(vid)          version node: length, parent, children, frozen
    b"D" c 00 o 00 be64(vid)          payload bytes

Big-endian version numbers keep the versions of one object contiguous and
ascending under lexicographic key order.
"""

import json
import os
import struct

from .core import (
    DEFAULT_CHUNK_SIZE,
    BaseStore,
    CollectionVersion,
    VersionRecord,
    _Collection,
    _ObjectMeta,
)
from .errors import CorruptManifest, InvalidArgument
from .kvlog import LogStructuredMap

FORMAT_VERSION = 1
LOG_FILE = "vosd.log"
_BE64 = struct.Struct(">Q")


def _enc(s):
    return s.encode("utf-8")


def payload_key(cid, oid, vid):
    return b"D" + _enc(cid) + b"\0" + _enc(oid) + b"\0" + _BE64.pack(vid)


def payload_prefix(cid, oid):
    return b"D" + _enc(cid) + b"\0" + _enc(oid) + b"\0"


def version_key(cid, oid, vid):
    return b"V" + _enc(cid) + b"\0" + _enc(oid) + b"\0" + _BE64.pack(vid)


def object_key(cid, oid):
    return b"O" + _enc(cid) + b"\0" + _enc(oid)


def cv_key(cid, cvid):
    return b"C" + _enc(cid) + b"\0" + _BE64.pack(cvid)


def pointer_key(cid, name):
    return b"P" + _enc(cid) + b"\0" + _enc(name)


def header_key(cid):
    return b"N" + _enc(cid)


def _dump(obj):
    return json.dumps(obj, separators=(",", ":")).encode()


class KvStore(BaseStore):
    name = "kv"

    def __init__(self, root, chunk_size=None, sync=True, auto_compact_bytes=64 << 20):
        self.root = os.fspath(root)
        os.makedirs(self.root, exist_ok=True)
        self.kv = LogStructuredMap(os.path.join(self.root, LOG_FILE), sync=sync, auto_compact_bytes=auto_compact_bytes)
        raw = self.kv.get(b"S")
        if raw is not None:
            stored = json.loads(raw)["chunk_size"]
            if chunk_size is not None and chunk_size != stored:
                raise InvalidArgument(f"store was created with chunk_size={stored}")
            chunk_size = stored
        else:
            chunk_size = chunk_size or DEFAULT_CHUNK_SIZE
            self.kv.put_batch([(b"S", _dump({"format_version": FORMAT_VERSION, "chunk_size": chunk_size}))])
        super().__init__(chunk_size)
        self._load()

    # -- KV surface ----------------------------------------------------

    def kv_put_batch(self, entries):
        self.kv.put_batch(entries)

    def kv_scan(self, prefix=b""):
        return self.kv.scan(prefix)

    def compact(self):
        return self.kv.compact()

    def close(self):
        self.kv.close()

    # -- metadata ------------------------------------------------------

    def _load(self):
        for key, raw in self.kv.scan(b"N"):
            name = key[1:].decode("utf-8")
            head = json.loads(raw)
            col = _Collection(name)
            col.next_cvid = head["next_cvid"]
            col.bytes_copied = head["bytes_copied_on_snapshot"]
            col.bytes_written = head["bytes_written"]
            base = len(name.encode()) + 2
            for k, v in self.kv.scan(b"C" + key[1:] + b"\0"):
                cvid = _BE64.unpack(k[base:])[0]
                m = json.loads(v)
                col.cvs[cvid] = CollectionVersion(cvid, m["members"], m["parent"], m["frozen"])
            for k, v in self.kv.scan(b"P" + key[1:] + b"\0"):
                col.pointers[k[base:].decode("utf-8")] = _BE64.unpack(v)[0]
            for k, v in self.kv.scan(b"O" + key[1:] + b"\0"):
                col.objects[k[base:].decode("utf-8")] = _ObjectMeta(json.loads(v)["next_vid"])
            for k, v in self.kv.scan(b"V" + key[1:] + b"\0"):
                oid = k[base:-9].decode("utf-8")
                vid = _BE64.unpack(k[-8:])[0]
                m = json.loads(v)
                rec = VersionRecord(vid, m["length"], m["parent"], set(m["children"]), m["frozen"])
                if oid not in col.objects:
                    raise CorruptManifest(f"version node {oid}@{vid} has no object header")
                if self.kv.value_length(payload_key(name, oid, vid)) != rec.length:
                    raise CorruptManifest(f"payload of {name}/{oid}@{vid} missing or wrong length")
                col.objects[oid].versions[vid] = rec
            self._cols[name] = col

    def _commit(self, col, ch):
        c = col.name
        entries = [
            (
                header_key(c),
                _dump(
                    {
                        "next_cvid": col.next_cvid,
                        "bytes_copied_on_snapshot": col.bytes_copied,
                        "bytes_written": col.bytes_written,
                    }
                ),
            )
        ]
        entries.extend(ch.puts)
        for cvid in sorted(ch.cvs):
            cv = col.cvs.get(cvid)
            value = None if cv is None else _dump({"members": cv.members, "parent": cv.parent, "frozen": cv.frozen})
            entries.append((cv_key(c, cvid), value))
        for name in sorted(ch.pointers):
            entries.append((pointer_key(c, name), _BE64.pack(col.pointers[name])))
        for oid in sorted(ch.objects):
            entries.append((object_key(c, oid), _dump({"next_vid": col.objects[oid].next_vid})))
        for oid, vid in sorted(ch.versions):
            rec = col.objects[oid].versions.get(vid) if oid in col.objects else None
            value = None
            if rec is not None:
                value = _dump(
                    {"length": rec.length, "parent": rec.parent, "children": sorted(rec.children), "frozen": rec.frozen}
                )
            entries.append((version_key(c, oid, vid), value))
        self.kv.put_batch(entries)
        super()._commit(col, ch)

    # -- payload hooks -------------------------------------------------

    def _p_create(self, col, oid, rec, data, ch):
        ch.puts.append((payload_key(col.name, oid, rec.vid), data))

    def _p_read(self, col, oid, rec, offset, length):
        return self.kv.get(payload_key(col.name, oid, rec.vid), offset, length)

    def _p_write(self, col, oid, rec, offset, data, ch):
        key = payload_key(col.name, oid, rec.vid)
        buf = bytearray(self.kv.get(key))
        buf[offset:offset + len(data)] = data
        ch.puts.append((key, bytes(buf)))

    def _p_replace(self, col, oid, rec, data, ch):
        ch.puts.append((payload_key(col.name, oid, rec.vid), data))

    def _p_clone(self, col, oid, src, dst, ch):
        src_key = payload_key(col.name, oid, src.vid)
        ch.puts.append((payload_key(col.name, oid, dst.vid), lambda: self.kv.get(src_key)))
        return src.length

    def _p_drop(self, col, oid, rec, ch):
        ch.puts.append((payload_key(col.name, oid, rec.vid), None))
        return -(-rec.length // self.chunk_size), rec.length


def open_store(root, chunk_size=None, sync=True):
    return KvStore(root, chunk_size=chunk_size, sync=sync)
