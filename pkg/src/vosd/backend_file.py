"""Directory backend with one full payload file per object version.

Layout under ``root``::

    vosd-store.json                         store parameters
    <collection>/manifest.json              version graph, pointers, counters
    <collection>/objects/<oid>/<vid>.dat    payload of one version

The manifest is rewritten through ``manifest.json.tmp`` and an atomic rename
on every metadata change. New payload files (create, clone) are written as
``<vid>.dat.tmp`` and renamed before the manifest that references them is
committed, so a crash leaves at worst an orphan ``.dat`` which `FileStore`
removes on open. Whole-file replacements of an existing version are written
to ``<vid>.dat.<seq>.stage`` and renamed after the manifest commit. The
manifest lists the stage files of the commit that wrote it, so open rolls
those forward and deletes any other stage file. In-place range writes use
positioned writes on the live ``.dat``."""

import json
import logging
import os
import shutil
from dataclasses import dataclass, field

from .core import (
    DEFAULT_CHUNK_SIZE,
    BaseStore,
    CollectionVersion,
    VersionRecord,
    _Collection,
    _ObjectMeta,
    check_name,
    n_chunks,
)
from .errors import CorruptManifest, InvalidArgument, IoFailure

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
STORE_FILE = "vosd-store.json"
MANIFEST = "manifest.json"


@dataclass
class RecoveryReport:
    orphans_removed: list = field(default_factory=list)
    temp_files_removed: list = field(default_factory=list)
    incomplete_collections: list = field(default_factory=list)


def _fsync_dir(path):
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


class FileStore(BaseStore):
    name = "file"

    def __init__(self, root, chunk_size=None, sync=True):
        self.root = os.fspath(root)
        self.sync = sync
        os.makedirs(self.root, exist_ok=True)
        meta_path = os.path.join(self.root, STORE_FILE)
        if os.path.exists(meta_path):
            try:
                with open(meta_path) as f:
                    meta = json.load(f)
                stored = int(meta["chunk_size"])
            except (OSError, ValueError, KeyError, TypeError) as e:
                raise CorruptManifest(f"{STORE_FILE}: {e}") from None
            if chunk_size is not None and chunk_size != stored:
                raise InvalidArgument(f"store was created with chunk_size={stored}")
            chunk_size = stored
        else:
            chunk_size = chunk_size or DEFAULT_CHUNK_SIZE
            self._atomic_write(
                meta_path,
                json.dumps({"format_version": FORMAT_VERSION, "backend": "file", "chunk_size": chunk_size}).encode(),
            )
        super().__init__(chunk_size)
        self.recovery = RecoveryReport()
        self._load_all()

    # -- paths and raw file helpers ------------------------------------

    def _col_dir(self, name):
        return os.path.join(self.root, name)

    def _obj_dir(self, col, oid):
        return os.path.join(self.root, col.name, "objects", oid)

    def _dat(self, col, oid, vid):
        return os.path.join(self._obj_dir(col, oid), f"{vid}.dat")

    def _atomic_write(self, path, data):
        tmp = path + ".tmp"
        try:
            with open(tmp, "wb") as f:
                f.write(data)
                if self.sync:
                    f.flush()
                    os.fsync(f.fileno())
            os.replace(tmp, path)
            if self.sync:
                _fsync_dir(os.path.dirname(path))
        except OSError as e:
            raise IoFailure(f"writing {path}: {e}") from e

    def _stage(self, col, oid, rec, data, ch):
        """Write a stage file now; rename it over the ``.dat`` after the manifest commit."""
        st = col.storage
        seq = st["next_stage"]
        st["next_stage"] += 1
        st["staged"].append([oid, rec.vid, seq])
        path = self._dat(col, oid, rec.vid)
        tmp = f"{path}.{seq}.stage"
        try:
            with open(tmp, "wb") as f:
                f.write(data)
                if self.sync:
                    f.flush()
                    os.fsync(f.fileno())
        except OSError as e:
            raise IoFailure(f"writing {tmp}: {e}") from e
        ch.after.append(lambda: os.replace(tmp, path))

    def _read_file(self, path, offset, length):
        try:
            with open(path, "rb") as f:
                return os.pread(f.fileno(), length, offset) if length else b""
        except OSError as e:
            raise IoFailure(f"reading {path}: {e}") from e

    # -- manifest ------------------------------------------------------

    def _manifest(self, col):
        return {
            "format_version": FORMAT_VERSION,
            "collection": col.name,
            "chunk_size": self.chunk_size,
            "next_cvid": col.next_cvid,
            "counters": {
                "bytes_copied_on_snapshot": col.bytes_copied,
                "bytes_written": col.bytes_written,
            },
            "pointers": dict(col.pointers),
            "next_stage": col.storage["next_stage"],
            "staged": col.storage["staged"],
            "collection_versions": {
                str(cv.cvid): {"members": cv.members, "parent": cv.parent, "frozen": cv.frozen}
                for cv in col.cvs.values()
            },
            "objects": {
                oid: {
                    "next_vid": om.next_vid,
                    "versions": {
                        str(r.vid): {
                            "length": r.length,
                            "parent": r.parent,
                            "children": sorted(r.children),
                            "frozen": r.frozen,
                        }
                        for r in om.versions.values()
                    },
                }
                for oid, om in col.objects.items()
            },
        }

    def _commit(self, col, ch):
        path = os.path.join(self._col_dir(col.name), MANIFEST)
        try:
            self._atomic_write(path, json.dumps(self._manifest(col), separators=(",", ":")).encode())
        finally:
            col.storage["staged"] = []
        super()._commit(col, ch)

    def _load_all(self):
        for name in sorted(os.listdir(self.root)):
            d = self._col_dir(name)
            if not os.path.isdir(d):
                continue
            tmp = os.path.join(d, MANIFEST + ".tmp")
            if os.path.exists(tmp):
                os.remove(tmp)
                self.recovery.temp_files_removed.append(tmp)
            if not os.path.exists(os.path.join(d, MANIFEST)):
                # crashed inside create_collection
                shutil.rmtree(d)
                self.recovery.incomplete_collections.append(name)
                continue
            col = self._load_collection(name)
            self._cols[name] = col
        if any(vars(self.recovery).values()):
            log.warning("file store %s recovered: %s", self.root, self.recovery)

    def _load_collection(self, name):
        path = os.path.join(self._col_dir(name), MANIFEST)
        try:
            with open(path) as f:
                m = json.load(f)
        except (OSError, ValueError) as e:
            raise CorruptManifest(f"{path}: {e}") from None
        try:
            if m["format_version"] != FORMAT_VERSION:
                raise CorruptManifest(f"{path}: unsupported format_version {m['format_version']}")
            if m["collection"] != name:
                raise CorruptManifest(f"{path}: names collection {m['collection']!r}")
            col = _Collection(check_name(name, "collection id"))
            col.next_cvid = int(m["next_cvid"])
            col.bytes_copied = int(m["counters"]["bytes_copied_on_snapshot"])
            col.bytes_written = int(m["counters"]["bytes_written"])
            col.pointers = {str(k): int(v) for k, v in m["pointers"].items()}
            col.storage = {"next_stage": int(m["next_stage"]), "staged": []}
            staged = {(str(o), int(v), int(q)) for o, v, q in m["staged"]}
            for k, v in m["collection_versions"].items():
                cvid = int(k)
                col.cvs[cvid] = CollectionVersion(
                    cvid,
                    members={str(o): int(x) for o, x in v["members"].items()},
                    parent=None if v["parent"] is None else int(v["parent"]),
                    frozen=bool(v["frozen"]),
                )
            for oid, o in m["objects"].items():
                om = col.objects[oid] = _ObjectMeta(int(o["next_vid"]))
                for k, v in o["versions"].items():
                    vid = int(k)
                    om.versions[vid] = VersionRecord(
                        vid,
                        length=int(v["length"]),
                        parent=None if v["parent"] is None else int(v["parent"]),
                        children={int(c) for c in v["children"]},
                        frozen=bool(v["frozen"]),
                    )
        except CorruptManifest:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise CorruptManifest(f"{path}: malformed entry ({e!r})") from None
        self._sweep(col, staged)
        self._validate(col, path)
        return col

    def _validate(self, col, path):
        def bad(what):
            raise CorruptManifest(f"{path}: {what}")

        for oid, om in col.objects.items():
            for vid, rec in om.versions.items():
                if vid >= om.next_vid:
                    bad(f"version {oid}@{vid} not below next_vid")
                if rec.parent is not None:
                    p = om.versions.get(rec.parent)
                    if p is None or vid not in p.children:
                        bad(f"version {oid}@{vid} has inconsistent parent {rec.parent}")
                for c in rec.children:
                    if c not in om.versions or om.versions[c].parent != vid:
                        bad(f"version {oid}@{vid} has inconsistent child {c}")
                dat = self._dat(col, oid, vid)
                try:
                    size = os.path.getsize(dat)
                except OSError:
                    bad(f"version {oid}@{vid} payload file missing")
                if size != rec.length:
                    bad(f"version {oid}@{vid} payload is {size} bytes, manifest says {rec.length}")
        for cvid, cv in col.cvs.items():
            if cvid >= col.next_cvid:
                bad(f"collection version {cvid} not below next_cvid")
            if cv.parent is not None and cv.parent not in col.cvs:
                bad(f"collection version {cvid} has dangling parent {cv.parent}")
            for oid, vid in cv.members.items():
                if oid not in col.objects or vid not in col.objects[oid].versions:
                    bad(f"collection version {cvid} references missing {oid}@{vid}")
                if cv.frozen and not col.objects[oid].versions[vid].frozen:
                    bad(f"frozen collection version {cvid} references writable {oid}@{vid}")
        for name, target in col.pointers.items():
            if target not in col.cvs:
                bad(f"pointer {name} targets missing collection version {target}")

    def _sweep(self, col, staged):
        objects_dir = os.path.join(self._col_dir(col.name), "objects")
        if not os.path.isdir(objects_dir):
            return
        for oid in os.listdir(objects_dir):
            d = os.path.join(objects_dir, oid)
            known = col.objects.get(oid)
            for fn in sorted(os.listdir(d)):
                p = os.path.join(d, fn)
                parts = fn.split(".")
                if fn.endswith(".stage") and len(parts) == 4 and parts[0].isdigit() and parts[2].isdigit():
                    vid, seq = int(parts[0]), int(parts[2])
                    if (oid, vid, seq) in staged and known is not None and vid in known.versions:
                        os.replace(p, self._dat(col, oid, vid))  # committed, roll forward
                    else:
                        os.remove(p)
                        self.recovery.temp_files_removed.append(p)
                elif fn.endswith(".tmp") or fn.endswith(".stage"):
                    os.remove(p)
                    self.recovery.temp_files_removed.append(p)
            for fn in sorted(os.listdir(d)):
                p = os.path.join(d, fn)
                stem = fn[:-4] if fn.endswith(".dat") else None
                if known is None or not stem or not stem.isdigit() or int(stem) not in known.versions:
                    os.remove(p)
                    self.recovery.orphans_removed.append(p)

    # -- payload hooks -------------------------------------------------

    def _p_init(self, col, ch):
        col.storage = {"next_stage": 0, "staged": []}
        try:
            os.makedirs(os.path.join(self._col_dir(col.name), "objects"), exist_ok=True)
        except OSError as e:
            raise IoFailure(str(e)) from e

    def _p_create(self, col, oid, rec, data, ch):
        os.makedirs(self._obj_dir(col, oid), exist_ok=True)
        self._atomic_write(self._dat(col, oid, rec.vid), data)

    def _p_read(self, col, oid, rec, offset, length):
        return self._read_file(self._dat(col, oid, rec.vid), offset, length)

    def _p_write(self, col, oid, rec, offset, data, ch):
        path = self._dat(col, oid, rec.vid)
        if offset + len(data) > rec.length:
            buf = bytearray(self._read_file(path, 0, rec.length))
            buf[offset:offset + len(data)] = data
            self._stage(col, oid, rec, bytes(buf), ch)
            return
        try:
            fd = os.open(path, os.O_WRONLY)
            try:
                os.pwrite(fd, data, offset)
                if self.sync:
                    os.fsync(fd)
            finally:
                os.close(fd)
        except OSError as e:
            raise IoFailure(f"writing {path}: {e}") from e

    def _p_replace(self, col, oid, rec, data, ch):
        self._stage(col, oid, rec, data, ch)

    def _p_clone(self, col, oid, src, dst, ch):
        target = self._dat(col, oid, dst.vid)
        tmp = target + ".tmp"
        try:
            shutil.copyfile(self._dat(col, oid, src.vid), tmp)
            if self.sync:
                fd = os.open(tmp, os.O_RDONLY)
                try:
                    os.fsync(fd)
                finally:
                    os.close(fd)
            os.replace(tmp, target)
        except OSError as e:
            raise IoFailure(f"cloning to {target}: {e}") from e
        return src.length

    def _p_drop(self, col, oid, rec, ch):
        path = self._dat(col, oid, rec.vid)
        # unlink only once the manifest no longer references the file
        ch.after.append(lambda: os.remove(path))
        return n_chunks(rec.length, self.chunk_size), rec.length

    def payload_bytes_on_disk(self):
        """Sum of all ``.dat`` sizes (for storage accounting checks)."""
        total = 0
        for dirpath, _, files in os.walk(self.root):
            total += sum(os.path.getsize(os.path.join(dirpath, f)) for f in files if f.endswith(".dat"))
        return total


def open_store(root, chunk_size=None, sync=True):
    return FileStore(root, chunk_size=chunk_size, sync=sync)
