"""Naive full-copy reference backend.

Every version owns a private ``bytearray``; clones copy it, diffs compare
bytes. Nothing is shared with `BaseStore` beyond argument validation and the
result types, so tests can use it as an independent oracle.
"""

import threading

from .core import (
    DEFAULT_CHUNK_SIZE,
    HEAD,
    INITIAL_POINTERS,
    ByteRange,
    GcReport,
    Store,
    StoreStats,
    check_data,
    check_id,
    check_name,
)
from .errors import (
    AlreadyExists,
    DanglingTarget,
    FrozenVersion,
    InvalidArgument,
    NoSuchCollection,
    NoSuchCollectionVersion,
    NoSuchObject,
    NoSuchPointer,
    NoSuchVersion,
    OutOfBounds,
    VersionInUse,
)


def _ceil_div(a, b):
    return (a + b - 1) // b


class OracleStore(Store):
    name = "oracle"

    def __init__(self, chunk_size=DEFAULT_CHUNK_SIZE):
        check_id(chunk_size, "chunk_size")
        if chunk_size <= 0:
            raise InvalidArgument("chunk_size must be positive")
        self.chunk_size = chunk_size
        self._c = {}
        self._mutex = threading.RLock()

    # each collection is a plain dict:
    #   next_cv, cvs{cvid: {members, parent, frozen}}, objs{oid: {next, vers}},
    #   ptrs{name: cvid}, pins{cvid: n}, copied, written
    # each version: {data: bytearray, parent, children: set, frozen}

    def _col(self, cid):
        cid = check_name(cid, "collection id")
        if cid not in self._c:
            raise NoSuchCollection(cid)
        return self._c[cid]

    def _cv(self, c, cvid):
        check_id(cvid, "collection version id")
        if cvid not in c["cvs"]:
            raise NoSuchCollectionVersion(str(cvid))
        return c["cvs"][cvid]

    def _member(self, c, cv, oid):
        if oid not in cv["members"]:
            raise NoSuchObject(oid)
        return c["objs"][oid]["vers"][cv["members"][oid]]

    def _ver(self, c, oid, vid):
        check_id(vid, "version id")
        if oid not in c["objs"]:
            raise NoSuchObject(oid)
        vers = c["objs"][oid]["vers"]
        if vid not in vers:
            raise NoSuchVersion(f"{oid}@{vid}")
        return vers[vid]

    def create_collection(self, cid):
        cid = check_name(cid, "collection id")
        with self._mutex:
            if cid in self._c:
                raise AlreadyExists(cid)
            self._c[cid] = {
                "next_cv": 2,
                "cvs": {1: {"members": {}, "parent": None, "frozen": False}},
                "objs": {},
                "ptrs": {p: 1 for p in INITIAL_POINTERS},
                "pins": {},
                "copied": 0,
                "written": 0,
            }
            return 1

    def list_collections(self):
        with self._mutex:
            return sorted(self._c)

    def collection_versions(self, cid):
        with self._mutex:
            return sorted(self._col(cid)["cvs"])

    def list_objects(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            return sorted(self._cv(c, cvid)["members"])

    def members(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            return dict(sorted(self._cv(c, cvid)["members"].items()))

    def collection_parent(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            return self._cv(c, cvid)["parent"]

    def collection_children(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            self._cv(c, cvid)
            return {k for k, v in c["cvs"].items() if v["parent"] == cvid}

    def is_frozen(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            return self._cv(c, cvid)["frozen"]

    def create_object(self, cid, cvid, oid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            if cv["frozen"]:
                raise FrozenVersion(str(cvid))
            if oid in cv["members"]:
                raise AlreadyExists(oid)
            obj = c["objs"].setdefault(oid, {"next": 1, "vers": {}})
            vid = obj["next"]
            obj["next"] += 1
            obj["vers"][vid] = {
                "data": bytearray(data),
                "parent": None,
                "children": set(),
                "frozen": False,
            }
            cv["members"][oid] = vid
            c["written"] += len(data)
            return vid

    def get(self, cid, cvid, oid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            return bytes(self._member(c, self._cv(c, cvid), oid)["data"])

    def get_range(self, cid, cvid, oid, offset, length):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        check_id(length, "length")
        with self._mutex:
            c = self._col(cid)
            data = self._member(c, self._cv(c, cvid), oid)["data"]
            if offset < 0 or length < 0 or offset + length > len(data):
                raise OutOfBounds(f"{offset}+{length}")
            return bytes(data[offset:offset + length])

    def read_version(self, cid, oid, vid, offset=0, length=None):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        if length is not None:
            check_id(length, "length")
        with self._mutex:
            c = self._col(cid)
            data = self._ver(c, oid, vid)["data"]
            if length is None:
                length = len(data) - offset
            if offset < 0 or length < 0 or offset + length > len(data):
                raise OutOfBounds(f"{offset}+{length}")
            return bytes(data[offset:offset + length])

    def _assign(self, c, ver, data):
        ver["data"] = bytearray(data)
        c["written"] += len(data)

    def _splice(self, c, ver, offset, data):
        buf = ver["data"]
        if offset < 0 or offset > len(buf):
            raise OutOfBounds(str(offset))
        buf[offset:offset + len(data)] = data
        c["written"] += len(data)

    def _check_writable(self, cv, ver):
        if cv is not None and cv["frozen"]:
            raise FrozenVersion("collection version frozen")
        if ver["frozen"]:
            raise FrozenVersion("version frozen")

    def set(self, cid, cvid, oid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            ver = self._member(c, cv, oid)
            self._check_writable(cv, ver)
            self._assign(c, ver, data)

    def write_range(self, cid, cvid, oid, offset, data):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        data = check_data(data)
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            ver = self._member(c, cv, oid)
            self._check_writable(cv, ver)
            self._splice(c, ver, offset, data)

    def set_version(self, cid, oid, vid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        with self._mutex:
            c = self._col(cid)
            ver = self._ver(c, oid, vid)
            self._check_writable(None, ver)
            self._assign(c, ver, data)

    def write_version(self, cid, oid, vid, offset, data):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        data = check_data(data)
        with self._mutex:
            c = self._col(cid)
            ver = self._ver(c, oid, vid)
            self._check_writable(None, ver)
            self._splice(c, ver, offset, data)

    def _copy(self, c, oid, vid):
        obj = c["objs"][oid]
        src = obj["vers"][vid]
        new = obj["next"]
        obj["next"] += 1
        obj["vers"][new] = {
            "data": bytearray(src["data"]),
            "parent": vid,
            "children": set(),
            "frozen": False,
        }
        src["children"].add(new)
        src["frozen"] = True
        c["copied"] += len(src["data"])
        return new

    def clone_object(self, cid, cvid, oid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            self._member(c, cv, oid)
            new = self._copy(c, oid, cv["members"][oid])
            if not cv["frozen"]:
                cv["members"][oid] = new
            return new

    def clone_version(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            self._ver(c, oid, vid)
            return self._copy(c, oid, vid)

    def _copy_cv(self, c, src_cvid):
        src = c["cvs"][src_cvid]
        new = c["next_cv"]
        c["next_cv"] += 1
        members = {}
        for oid in sorted(src["members"]):
            members[oid] = self._copy(c, oid, src["members"][oid])
        src["frozen"] = True
        c["cvs"][new] = {"members": members, "parent": src_cvid, "frozen": False}
        return new

    def clone_collection(self, cid, src_cvid):
        with self._mutex:
            c = self._col(cid)
            self._cv(c, src_cvid)
            return self._copy_cv(c, src_cvid)

    def snapshot(self, cid, pointer=HEAD, pin=False):
        pointer = check_name(pointer, "pointer name")
        with self._mutex:
            c = self._col(cid)
            if pointer not in c["ptrs"]:
                raise NoSuchPointer(pointer)
            src = c["ptrs"][pointer]
            new = self._copy_cv(c, src)
            if pin:
                for k in (src, new):
                    c["pins"][k] = c["pins"].get(k, 0) + 1
            return src, new

    def freeze_collection(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            cv["frozen"] = True
            for oid, vid in cv["members"].items():
                c["objs"][oid]["vers"][vid]["frozen"] = True

    def bind_member(self, cid, cvid, oid, vid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            self._ver(c, oid, vid)
            if cv["frozen"]:
                raise FrozenVersion(str(cvid))
            cv["members"][oid] = vid

    def set_collection_parent(self, cid, cvid, parent):
        with self._mutex:
            c = self._col(cid)
            cv = self._cv(c, cvid)
            if parent is not None:
                self._cv(c, parent)
                seen = parent
                while seen is not None:
                    if seen == cvid:
                        raise InvalidArgument("cycle")
                    seen = c["cvs"][seen]["parent"]
            cv["parent"] = parent

    def parent(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        with self._mutex:
            return self._ver(self._col(cid), oid, vid)["parent"]

    def children(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        with self._mutex:
            return set(self._ver(self._col(cid), oid, vid)["children"])

    def versions(self, cid, oid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            if oid not in c["objs"]:
                raise NoSuchObject(oid)
            return sorted(c["objs"][oid]["vers"])

    def diff(self, cid, oid, v1, v2):
        """Byte-exact comparison, widened to whole chunks and coalesced."""
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            a = bytes(self._ver(c, oid, v1)["data"])
            b = bytes(self._ver(c, oid, v2)["data"])
        cs = self.chunk_size
        longest = max(len(a), len(b))
        dirty = set()
        for pos in range(0, longest, cs):
            if a[pos:pos + cs] != b[pos:pos + cs]:
                dirty.add(pos // cs)
        ranges = []
        for idx in sorted(dirty):
            lo = idx * cs
            hi = min(lo + cs, longest)
            if ranges and ranges[-1].offset + ranges[-1].length == lo:
                prev = ranges.pop()
                ranges.append(ByteRange(prev.offset, hi - prev.offset))
            else:
                ranges.append(ByteRange(lo, hi - lo))
        return ranges

    def pointer_get(self, cid, name):
        name = check_name(name, "pointer name")
        with self._mutex:
            c = self._col(cid)
            if name not in c["ptrs"]:
                raise NoSuchPointer(name)
            return c["ptrs"][name]

    def pointer_cas(self, cid, name, expected, new):
        name = check_name(name, "pointer name")
        if expected is not None:
            check_id(expected, "expected")
        check_id(new, "new")
        with self._mutex:
            c = self._col(cid)
            if new not in c["cvs"]:
                raise DanglingTarget(str(new))
            if c["ptrs"].get(name) != expected:
                return False
            c["ptrs"][name] = new
            return True

    def pointers(self, cid):
        with self._mutex:
            return dict(sorted(self._col(cid)["ptrs"].items()))

    def pin(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            self._cv(c, cvid)
            c["pins"][cvid] = c["pins"].get(cvid, 0) + 1

    def unpin(self, cid, cvid):
        with self._mutex:
            c = self._col(cid)
            check_id(cvid, "collection version id")
            n = c["pins"].get(cvid, 0) - 1
            if n > 0:
                c["pins"][cvid] = n
            else:
                c["pins"].pop(cvid, None)

    def roots(self, cid):
        with self._mutex:
            return self._roots(self._col(cid))

    def _roots(self, c):
        return set(c["ptrs"].values()) | {k for k, n in c["pins"].items() if n > 0}

    def _remove_version(self, c, oid, vid):
        vers = c["objs"][oid]["vers"]
        ver = vers.pop(vid)
        up = ver["parent"]
        if up is not None and up in vers:
            vers[up]["children"].discard(vid)
            vers[up]["children"].update(ver["children"])
        for child in ver["children"]:
            vers[child]["parent"] = up
        return len(ver["data"])

    def delete_version(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        with self._mutex:
            c = self._col(cid)
            ver = self._ver(c, oid, vid)
            if ver["children"]:
                raise VersionInUse(f"{oid}@{vid} has children")
            roots = self._roots(c)
            holders = [k for k, cv in c["cvs"].items() if cv["members"].get(oid) == vid]
            if any(k in roots for k in holders):
                raise VersionInUse(f"{oid}@{vid} is rooted")
            for k in holders:
                del c["cvs"][k]["members"][oid]
            self._remove_version(c, oid, vid)

    def gc(self, cid, extra_roots=()):
        with self._mutex:
            c = self._col(cid)
            roots = self._roots(c) | set(extra_roots)
            report = GcReport()
            cvs = c["cvs"]
            for k in [k for k in cvs if k not in roots]:
                up = cvs[k]["parent"]
                del cvs[k]
                for other in cvs.values():
                    if other["parent"] == k:
                        other["parent"] = up
                report.collection_versions_removed += 1
            keep = {(oid, vid) for cv in cvs.values() for oid, vid in cv["members"].items()}
            for oid, obj in c["objs"].items():
                for vid in sorted(obj["vers"]):
                    if (oid, vid) not in keep:
                        size = self._remove_version(c, oid, vid)
                        report.versions_removed += 1
                        report.chunks_freed += _ceil_div(size, self.chunk_size)
                        report.bytes_freed += size
            return report

    def stats(self):
        out = StoreStats()
        with self._mutex:
            for c in self._c.values():
                for obj in c["objs"].values():
                    for ver in obj["vers"].values():
                        out.chunk_count += _ceil_div(len(ver["data"]), self.chunk_size)
                        out.stored_bytes += len(ver["data"])
                out.bytes_copied_on_snapshot += c["copied"]
                out.bytes_written += c["written"]
        return out
