"""Domain types and the versioned object store interface.

A store holds collections. A collection holds objects, each with a lineage of
numbered versions, plus numbered collection versions that bind every object
id to one of its versions. Named pointers (HEAD, HCT, HRC, user names) bind a
name to a collection version and are updated by compare-and-swap.

`BaseStore` implements the whole interface over an in-memory version graph
and delegates payload storage and persistence to a handful of hooks. MemStore,
FileStore and KvStore are subclasses; OracleStore is written independently.
"""

import threading
from collections import Counter
from dataclasses import dataclass, field

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

DEFAULT_CHUNK_SIZE = 16 * 1024
MAX_NAME_BYTES = 255

HEAD = "HEAD"
HCT = "HCT"
HRC = "HRC"
INITIAL_POINTERS = (HEAD, HCT, HRC)

# Operations every backend exposes; the server dispatches exactly these.
STORE_OPS = (
    "create_collection",
    "list_collections",
    "create_object",
    "get",
    "get_range",
    "set",
    "write_range",
    "read_version",
    "write_version",
    "set_version",
    "clone_object",
    "clone_version",
    "clone_collection",
    "snapshot",
    "diff",
    "parent",
    "children",
    "versions",
    "list_objects",
    "members",
    "collection_versions",
    "collection_parent",
    "collection_children",
    "is_frozen",
    "freeze_collection",
    "bind_member",
    "set_collection_parent",
    "pointer_get",
    "pointer_cas",
    "pointers",
    "pin",
    "unpin",
    "roots",
    "delete_version",
    "gc",
    "stats",
    "get_latest",
    "set_latest",
)


def check_name(name, what="name"):
    """Normalize an object/collection/pointer name to ``str``.

    Names are non-empty, at most 255 UTF-8 bytes, and free of ``/`` and NUL
    so they can double as file names and KV key components.
    """
    if isinstance(name, (bytes, bytearray)):
        try:
            name = bytes(name).decode("utf-8")
        except UnicodeDecodeError:
            raise InvalidArgument(f"{what} is not valid UTF-8") from None
    if not isinstance(name, str):
        raise InvalidArgument(f"{what} must be a string, got {type(name).__name__}")
    raw = name.encode("utf-8")
    if not raw or len(raw) > MAX_NAME_BYTES:
        raise InvalidArgument(f"{what} must be 1..{MAX_NAME_BYTES} bytes")
    if "/" in name or "\x00" in name or name in (".", ".."):
        raise InvalidArgument(f"{what} {name!r} contains a forbidden character")
    return name


def check_id(value, what):
    if isinstance(value, bool) or not isinstance(value, int):
        raise InvalidArgument(f"{what} must be an integer")
    return value


def check_data(data):
    if isinstance(data, (bytearray, memoryview)):
        return bytes(data)
    if not isinstance(data, bytes):
        raise InvalidArgument("data must be bytes")
    return data


def n_chunks(length, chunk_size):
    return -(-length // chunk_size)


@dataclass(frozen=True)
class ByteRange:
    offset: int
    length: int


@dataclass
class VersionRecord:
    """One version of one object.

    ``chunk_slots`` is only populated by chunked (copy-on-write) backends.
    """

    vid: int
    length: int = 0
    parent: int | None = None
    children: set = field(default_factory=set)
    frozen: bool = False
    chunk_slots: list = field(default_factory=list)


@dataclass
class CollectionVersion:
    cvid: int
    members: dict = field(default_factory=dict)
    parent: int | None = None
    frozen: bool = False


@dataclass
class StoreStats:
    chunk_count: int = 0
    stored_bytes: int = 0
    bytes_copied_on_snapshot: int = 0
    bytes_written: int = 0


@dataclass
class GcReport:
    versions_removed: int = 0
    collection_versions_removed: int = 0
    chunks_freed: int = 0
    bytes_freed: int = 0


def chunk_diff(chunk_size, len_a, len_b, chunk_equal):
    """Coalesced chunk-aligned ranges where two payloads differ.

    ``chunk_equal(i)`` is only consulted for chunk positions present in both
    payloads with equal extent; positions past the shorter payload always
    differ.
    """
    longest = max(len_a, len_b)
    out = []
    for i in range(n_chunks(longest, chunk_size)):
        start = i * chunk_size
        ext_a = max(0, min(start + chunk_size, len_a) - start)
        ext_b = max(0, min(start + chunk_size, len_b) - start)
        if ext_a == ext_b and chunk_equal(i):
            continue
        end = min(start + chunk_size, longest)
        if out and out[-1][0] + out[-1][1] == start:
            out[-1][1] += end - start
        else:
            out.append([start, end - start])
    return [ByteRange(o, n) for o, n in out]


class Store:
    """Versioned object store interface.

    Error precedence, shared by all backends: argument validation
    (InvalidArgument), then collection, collection version, object and
    version lookup (NoSuch*), then the freeze rule (FrozenVersion), then
    bounds (OutOfBounds).
    """

    name = "store"
    chunk_size = DEFAULT_CHUNK_SIZE

    def get_latest(self, cid, oid):
        """OSD-compatible read of the latest version (resolved through HEAD)."""
        return self.get(cid, self.pointer_get(cid, HEAD), oid)

    def set_latest(self, cid, oid, data):
        """OSD-compatible write to HEAD's collection version.

        Creates the object there if it does not exist yet.
        """
        cvid = self.pointer_get(cid, HEAD)
        if check_name(oid, "object id") in self.list_objects(cid, cvid):
            self.set(cid, cvid, oid, data)
        else:
            self.create_object(cid, cvid, oid, data)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class _ObjectMeta:
    __slots__ = ("next_vid", "versions")

    def __init__(self, next_vid=1):
        self.next_vid = next_vid
        self.versions = {}


class _Collection:
    def __init__(self, name):
        self.name = name
        self.next_cvid = 1
        self.cvs = {}
        self.objects = {}
        self.pointers = {}
        self.bytes_copied = 0
        self.bytes_written = 0
        self.pins = Counter()
        self.lock = threading.RLock()
        self.storage = None  # backend-private


class _Change:
    """Metadata touched by one operation, handed to the persistence hook."""

    def __init__(self):
        self.versions = set()
        self.objects = set()
        self.cvs = set()
        self.pointers = set()
        self.puts = []
        self.after = []

    def version(self, oid, vid):
        self.versions.add((oid, vid))
        return self


class BaseStore(Store):
    """Shared version-graph implementation.

    Subclasses provide payload storage through the ``_p_*`` hooks and make
    metadata changes durable in ``_commit``. All mutation of one collection
    happens under that collection's lock.
    """

    def __init__(self, chunk_size=DEFAULT_CHUNK_SIZE):
        check_id(chunk_size, "chunk_size")
        if chunk_size <= 0:
            raise InvalidArgument("chunk_size must be positive")
        self.chunk_size = chunk_size
        self._cols = {}
        self._lock = threading.Lock()

    # -- backend hooks -------------------------------------------------

    def _p_init(self, col, ch):
        pass

    def _p_create(self, col, oid, rec, data, ch):
        raise NotImplementedError

    def _p_read(self, col, oid, rec, offset, length):
        raise NotImplementedError

    def _p_write(self, col, oid, rec, offset, data, ch):
        raise NotImplementedError

    def _p_replace(self, col, oid, rec, data, ch):
        raise NotImplementedError

    def _p_clone(self, col, oid, src, dst, ch):
        """Populate ``dst`` from ``src``; return payload bytes copied."""
        raise NotImplementedError

    def _p_drop(self, col, oid, rec, ch):
        """Release a version's payload; return (chunks_freed, bytes_freed)."""
        raise NotImplementedError

    def _p_chunk_ids(self, col, rec):
        return None

    def _space(self, col):
        chunks = stored = 0
        for om in col.objects.values():
            for rec in om.versions.values():
                chunks += n_chunks(rec.length, self.chunk_size)
                stored += rec.length
        return chunks, stored

    def _commit(self, col, ch):
        for fn in ch.after:
            fn()

    # -- lookup helpers ------------------------------------------------

    def _col(self, cid):
        cid = check_name(cid, "collection id")
        with self._lock:
            col = self._cols.get(cid)
        if col is None:
            raise NoSuchCollection(f"no such collection {cid!r}")
        return col

    def _cv(self, col, cvid):
        check_id(cvid, "collection version id")
        cv = col.cvs.get(cvid)
        if cv is None:
            raise NoSuchCollectionVersion(f"no such collection version {cvid} in {col.name!r}")
        return cv

    def _member(self, col, cv, oid):
        vid = cv.members.get(oid)
        if vid is None:
            raise NoSuchObject(f"no such object {oid!r} in collection version {cv.cvid}")
        return col.objects[oid].versions[vid]

    def _rec(self, col, oid, vid):
        check_id(vid, "version id")
        om = col.objects.get(oid)
        if om is None:
            raise NoSuchObject(f"no such object {oid!r}")
        rec = om.versions.get(vid)
        if rec is None:
            raise NoSuchVersion(f"no such version {vid} of {oid!r}")
        return rec

    def _writable(self, cv, rec):
        if cv is not None and cv.frozen:
            raise FrozenVersion(f"collection version {cv.cvid} is frozen")
        if rec.frozen:
            raise FrozenVersion(f"version {rec.vid} is frozen")

    def _rooted(self, col):
        roots = set(col.pointers.values())
        roots.update(k for k, n in col.pins.items() if n > 0)
        return roots

    # -- collections ---------------------------------------------------

    def create_collection(self, cid):
        cid = check_name(cid, "collection id")
        with self._lock:
            if cid in self._cols:
                raise AlreadyExists(f"collection {cid!r} already exists")
            col = _Collection(cid)
            self._cols[cid] = col
        with col.lock:
            ch = _Change()
            self._p_init(col, ch)
            col.cvs[1] = CollectionVersion(1)
            col.next_cvid = 2
            for p in INITIAL_POINTERS:
                col.pointers[p] = 1
            ch.cvs.add(1)
            ch.pointers.update(INITIAL_POINTERS)
            self._commit(col, ch)
        return 1

    def list_collections(self):
        with self._lock:
            return sorted(self._cols)

    def collection_versions(self, cid):
        col = self._col(cid)
        with col.lock:
            return sorted(col.cvs)

    def list_objects(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            return sorted(self._cv(col, cvid).members)

    def members(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            return dict(sorted(self._cv(col, cvid).members.items()))

    def collection_parent(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            return self._cv(col, cvid).parent

    def collection_children(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            self._cv(col, cvid)
            return {c.cvid for c in col.cvs.values() if c.parent == cvid}

    def is_frozen(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            return self._cv(col, cvid).frozen

    # -- objects -------------------------------------------------------

    def create_object(self, cid, cvid, oid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            if cv.frozen:
                raise FrozenVersion(f"collection version {cvid} is frozen")
            if oid in cv.members:
                raise AlreadyExists(f"object {oid!r} already in collection version {cvid}")
            om = col.objects.get(oid)
            if om is None:
                om = col.objects[oid] = _ObjectMeta()
            vid = om.next_vid
            om.next_vid += 1
            rec = VersionRecord(vid, length=len(data))
            ch = _Change().version(oid, vid)
            self._p_create(col, oid, rec, data, ch)
            om.versions[vid] = rec
            cv.members[oid] = vid
            col.bytes_written += len(data)
            ch.objects.add(oid)
            ch.cvs.add(cvid)
            self._commit(col, ch)
            return vid

    def get(self, cid, cvid, oid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            rec = self._member(col, self._cv(col, cvid), oid)
            return self._p_read(col, oid, rec, 0, rec.length)

    def get_range(self, cid, cvid, oid, offset, length):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        check_id(length, "length")
        col = self._col(cid)
        with col.lock:
            rec = self._member(col, self._cv(col, cvid), oid)
            if offset < 0 or length < 0 or offset + length > rec.length:
                raise OutOfBounds(f"range [{offset}, {offset + length}) outside 0..{rec.length}")
            return self._p_read(col, oid, rec, offset, length)

    def read_version(self, cid, oid, vid, offset=0, length=None):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        if length is not None:
            check_id(length, "length")
        col = self._col(cid)
        with col.lock:
            rec = self._rec(col, oid, vid)
            if length is None:
                length = rec.length - offset
            if offset < 0 or length < 0 or offset + length > rec.length:
                raise OutOfBounds(f"range [{offset}, {offset + length}) outside 0..{rec.length}")
            return self._p_read(col, oid, rec, offset, length)

    def _do_set(self, col, oid, rec, data):
        ch = _Change().version(oid, rec.vid)
        self._p_replace(col, oid, rec, data, ch)
        rec.length = len(data)
        col.bytes_written += len(data)
        self._commit(col, ch)

    def _do_write(self, col, oid, rec, offset, data):
        if offset < 0 or offset > rec.length:
            raise OutOfBounds(f"write offset {offset} beyond length {rec.length}")
        ch = _Change().version(oid, rec.vid)
        self._p_write(col, oid, rec, offset, data, ch)
        rec.length = max(rec.length, offset + len(data))
        col.bytes_written += len(data)
        self._commit(col, ch)

    def set(self, cid, cvid, oid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            rec = self._member(col, cv, oid)
            self._writable(cv, rec)
            self._do_set(col, oid, rec, data)

    def write_range(self, cid, cvid, oid, offset, data):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        data = check_data(data)
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            rec = self._member(col, cv, oid)
            self._writable(cv, rec)
            self._do_write(col, oid, rec, offset, data)

    def set_version(self, cid, oid, vid, data):
        oid = check_name(oid, "object id")
        data = check_data(data)
        col = self._col(cid)
        with col.lock:
            rec = self._rec(col, oid, vid)
            self._writable(None, rec)
            self._do_set(col, oid, rec, data)

    def write_version(self, cid, oid, vid, offset, data):
        oid = check_name(oid, "object id")
        check_id(offset, "offset")
        data = check_data(data)
        col = self._col(cid)
        with col.lock:
            rec = self._rec(col, oid, vid)
            self._writable(None, rec)
            self._do_write(col, oid, rec, offset, data)

    def _clone_rec(self, col, oid, src, ch):
        om = col.objects[oid]
        vid = om.next_vid
        om.next_vid += 1
        dst = VersionRecord(vid, length=src.length, parent=src.vid)
        col.bytes_copied += self._p_clone(col, oid, src, dst, ch)
        om.versions[vid] = dst
        src.children.add(vid)
        src.frozen = True
        ch.version(oid, vid).version(oid, src.vid)
        ch.objects.add(oid)
        return dst

    def clone_object(self, cid, cvid, oid):
        """Clone ``oid``'s member version in ``cvid``; the source is frozen.

        In a writable collection version the clone replaces the source as the
        member, so writes through ``cvid`` keep working.
        """
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            src = self._member(col, cv, oid)
            ch = _Change()
            dst = self._clone_rec(col, oid, src, ch)
            if not cv.frozen:
                cv.members[oid] = dst.vid
                ch.cvs.add(cvid)
            self._commit(col, ch)
            return dst.vid

    def clone_version(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            src = self._rec(col, oid, vid)
            ch = _Change()
            dst = self._clone_rec(col, oid, src, ch)
            self._commit(col, ch)
            return dst.vid

    def _clone_cv(self, col, src):
        ch = _Change()
        cvid = col.next_cvid
        col.next_cvid += 1
        new = CollectionVersion(cvid, parent=src.cvid)
        for oid in sorted(src.members):
            rec = col.objects[oid].versions[src.members[oid]]
            new.members[oid] = self._clone_rec(col, oid, rec, ch).vid
        src.frozen = True
        col.cvs[cvid] = new
        ch.cvs.update((cvid, src.cvid))
        return new, ch

    def clone_collection(self, cid, src_cvid):
        col = self._col(cid)
        with col.lock:
            new, ch = self._clone_cv(col, self._cv(col, src_cvid))
            self._commit(col, ch)
            return new.cvid

    def snapshot(self, cid, pointer=HEAD, pin=False):
        """Atomically resolve ``pointer`` and clone its target.

        Returns ``(source_cvid, new_cvid)``. With ``pin`` both versions are
        pinned (GC roots) before the collection lock is released; release
        them with two `unpin` calls.
        """
        pointer = check_name(pointer, "pointer name")
        col = self._col(cid)
        with col.lock:
            src = col.pointers.get(pointer)
            if src is None:
                raise NoSuchPointer(f"no pointer {pointer!r} in {col.name!r}")
            new, ch = self._clone_cv(col, col.cvs[src])
            if pin:
                col.pins[src] += 1
                col.pins[new.cvid] += 1
            self._commit(col, ch)
            return src, new.cvid

    def freeze_collection(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            ch = _Change()
            cv.frozen = True
            ch.cvs.add(cvid)
            for oid, vid in cv.members.items():
                rec = col.objects[oid].versions[vid]
                if not rec.frozen:
                    rec.frozen = True
                    ch.version(oid, vid)
            self._commit(col, ch)

    def bind_member(self, cid, cvid, oid, vid):
        """Point ``oid`` in writable ``cvid`` at an existing version."""
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            self._rec(col, oid, vid)
            if cv.frozen:
                raise FrozenVersion(f"collection version {cvid} is frozen")
            cv.members[oid] = vid
            ch = _Change()
            ch.cvs.add(cvid)
            self._commit(col, ch)

    def set_collection_parent(self, cid, cvid, parent):
        """Re-link collection lineage; ``parent`` may be None."""
        col = self._col(cid)
        with col.lock:
            cv = self._cv(col, cvid)
            if parent is not None:
                self._cv(col, parent)
                walk = parent
                while walk is not None:
                    if walk == cvid:
                        raise InvalidArgument("re-parenting would create a cycle")
                    walk = col.cvs[walk].parent
            cv.parent = parent
            ch = _Change()
            ch.cvs.add(cvid)
            self._commit(col, ch)

    # -- lineage and diff ----------------------------------------------

    def parent(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            return self._rec(col, oid, vid).parent

    def children(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            return set(self._rec(col, oid, vid).children)

    def versions(self, cid, oid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            om = col.objects.get(oid)
            if om is None:
                raise NoSuchObject(f"no such object {oid!r}")
            return sorted(om.versions)

    def diff(self, cid, oid, v1, v2):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            a = self._rec(col, oid, v1)
            b = self._rec(col, oid, v2)
            if a is b:
                return []
            ids_a = self._p_chunk_ids(col, a)
            ids_b = self._p_chunk_ids(col, b)
            cs = self.chunk_size
            if ids_a is not None and ids_b is not None:
                def equal(i):
                    if ids_a[i] == ids_b[i]:
                        return True
                    lo = i * cs
                    n = min(cs, a.length - lo)
                    return self._p_read(col, oid, a, lo, n) == self._p_read(col, oid, b, lo, n)
            else:
                da = self._p_read(col, oid, a, 0, a.length)
                db = self._p_read(col, oid, b, 0, b.length)

                def equal(i):
                    return da[i * cs:(i + 1) * cs] == db[i * cs:(i + 1) * cs]
            return chunk_diff(cs, a.length, b.length, equal)

    # -- named pointers ------------------------------------------------

    def pointer_get(self, cid, name):
        name = check_name(name, "pointer name")
        col = self._col(cid)
        with col.lock:
            target = col.pointers.get(name)
            if target is None:
                raise NoSuchPointer(f"no pointer {name!r} in {col.name!r}")
            return target

    def pointer_cas(self, cid, name, expected, new):
        name = check_name(name, "pointer name")
        if expected is not None:
            check_id(expected, "expected")
        check_id(new, "new")
        col = self._col(cid)
        with col.lock:
            if new not in col.cvs:
                raise DanglingTarget(f"collection version {new} does not exist")
            if col.pointers.get(name) != expected:
                return False
            col.pointers[name] = new
            ch = _Change()
            ch.pointers.add(name)
            self._commit(col, ch)
            return True

    def pointers(self, cid):
        col = self._col(cid)
        with col.lock:
            return dict(sorted(col.pointers.items()))

    def pin(self, cid, cvid):
        """Make ``cvid`` a GC root until a matching `unpin`. Not persisted."""
        col = self._col(cid)
        with col.lock:
            self._cv(col, cvid)
            col.pins[cvid] += 1

    def roots(self, cid):
        """Collection versions currently protected from GC."""
        col = self._col(cid)
        with col.lock:
            return self._rooted(col)

    def unpin(self, cid, cvid):
        col = self._col(cid)
        with col.lock:
            check_id(cvid, "collection version id")
            if col.pins[cvid] <= 1:
                col.pins.pop(cvid, None)
            else:
                col.pins[cvid] -= 1

    # -- deletion ------------------------------------------------------

    def _unlink_version(self, col, oid, rec, ch):
        versions = col.objects[oid].versions
        parent = versions.get(rec.parent) if rec.parent is not None else None
        if parent is not None:
            parent.children.discard(rec.vid)
            ch.version(oid, parent.vid)
        for c in sorted(rec.children):
            child = versions[c]
            child.parent = rec.parent
            ch.version(oid, c)
            if parent is not None:
                parent.children.add(c)
        del versions[rec.vid]
        ch.version(oid, rec.vid)
        return self._p_drop(col, oid, rec, ch)

    def delete_version(self, cid, oid, vid):
        oid = check_name(oid, "object id")
        col = self._col(cid)
        with col.lock:
            rec = self._rec(col, oid, vid)
            if rec.children:
                raise VersionInUse(f"version {vid} of {oid!r} has children")
            roots = self._rooted(col)
            holders = [cv for cv in col.cvs.values() if cv.members.get(oid) == vid]
            for cv in holders:
                if cv.cvid in roots:
                    raise VersionInUse(
                        f"version {vid} of {oid!r} is referenced by rooted collection version {cv.cvid}"
                    )
            ch = _Change()
            for cv in holders:
                del cv.members[oid]
                ch.cvs.add(cv.cvid)
            self._unlink_version(col, oid, rec, ch)
            self._commit(col, ch)

    def gc(self, cid, extra_roots=()):
        """Drop every collection version that is not a pointer target, pinned,
        or listed in ``extra_roots``, then every object version no surviving
        collection version references. Lineage is spliced around removals."""
        col = self._col(cid)
        with col.lock:
            roots = self._rooted(col) | set(extra_roots)
            report = GcReport()
            ch = _Change()
            for cvid in sorted(col.cvs):
                if cvid in roots:
                    continue
                dead = col.cvs.pop(cvid)
                for other in col.cvs.values():
                    if other.parent == cvid:
                        other.parent = dead.parent
                        ch.cvs.add(other.cvid)
                ch.cvs.add(cvid)
                report.collection_versions_removed += 1
            live = {(oid, vid) for cv in col.cvs.values() for oid, vid in cv.members.items()}
            for oid in sorted(col.objects):
                for vid in sorted(col.objects[oid].versions):
                    if (oid, vid) in live:
                        continue
                    rec = col.objects[oid].versions[vid]
                    chunks, nbytes = self._unlink_version(col, oid, rec, ch)
                    report.versions_removed += 1
                    report.chunks_freed += chunks
                    report.bytes_freed += nbytes
            if ch.cvs or ch.versions:
                self._commit(col, ch)
            return report

    # -- accounting ----------------------------------------------------

    def stats(self):
        out = StoreStats()
        with self._lock:
            cols = list(self._cols.values())
        for col in cols:
            with col.lock:
                chunks, stored = self._space(col)
                out.chunk_count += chunks
                out.stored_bytes += stored
                out.bytes_copied_on_snapshot += col.bytes_copied
                out.bytes_written += col.bytes_written
        return out


def full_copy_drop(rec, chunk_size):
    return n_chunks(rec.length, chunk_size), rec.length


__all__ = [
    "BaseStore",
    "ByteRange",
    "CollectionVersion",
    "DEFAULT_CHUNK_SIZE",
    "GcReport",
    "HCT",
    "HEAD",
    "HRC",
    "STORE_OPS",
    "Store",
    "StoreStats",
    "VersionRecord",
    "check_name",
    "chunk_diff",
]
