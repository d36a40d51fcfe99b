"""Transaction layers over a versioned store.

Optimistic MVCC: a transaction clones the collection version named by HCT
(highest committed transaction), works on that private snapshot, and at
commit diffs every object it wrote against the current HCT. No conflicting
change means the snapshot is rebased onto the current HCT and HCT is moved
to it by compare-and-swap; otherwise the transaction aborts.

Read-atomic checkpoints: a single writer clones the version named by HRC
(highest readable checkpoint), writes tagged data into it, freezes it and
swings HRC. Readers resolve HRC once and read every object through that
frozen collection version, so they never see a mix of two checkpoints.

The delivered isolation for transactions is snapshot isolation: only
write-write conflicts are detected.
"""

import itertools
import threading
from collections import defaultdict
from dataclasses import dataclass, field

from .core import HCT, HRC
from .errors import (
    CkptNotActive,
    ConcurrentCheckpoint,
    InUse,
    NoSuchCollectionVersion,
    NoSuchPointer,
    NotLinearChain,
    TxContention,
    TxNotActive,
    UninitializedHct,
    UninitializedHrc,
)

ACTIVE = "active"
COMMITTED = "committed"
ABORTED = "aborted"


@dataclass
class TxHandle:
    tx_id: int
    cid: str
    snapshot_cvid: int
    start_hct: int
    write_set: set = field(default_factory=set)
    state: str = ACTIVE


@dataclass
class Committed:
    new_hct: int


@dataclass
class Aborted:
    conflicts: set


CommitOutcome = Committed | Aborted


@dataclass
class CkptHandle:
    ckpt_id: int
    cid: str
    ckpt_cvid: int
    base_hrc: int
    state: str = ACTIVE

    @property
    def tag(self):
        return self.ckpt_cvid


class TxnLayer:
    """MVCC transactions and read-atomic checkpoints for one store.

    The layer is thread-safe; individual handles belong to one client.
    """

    def __init__(self, store, max_retries=64):
        self.store = store
        self.max_retries = max_retries
        self._handles = {}
        self._ids = itertools.count(1)
        self._lock = threading.Lock()
        self._commit_locks = defaultdict(threading.Lock)

    def _register(self, handle):
        with self._lock:
            self._handles[handle.tx_id if isinstance(handle, TxHandle) else handle.ckpt_id] = handle
        return handle

    def _next_id(self):
        with self._lock:
            return next(self._ids)

    def _lookup(self, h, kind):
        key = h if isinstance(h, int) else getattr(h, "tx_id", None) or getattr(h, "ckpt_id", None)
        with self._lock:
            handle = self._handles.get(key)
        if not isinstance(handle, kind):
            err = TxNotActive if kind is TxHandle else CkptNotActive
            raise err(f"unknown handle {key}")
        return handle

    def _active_tx(self, h):
        tx = self._lookup(h, TxHandle)
        if tx.state != ACTIVE:
            raise TxNotActive(f"transaction {tx.tx_id} is {tx.state}")
        return tx

    def _active_ckpt(self, h):
        ck = self._lookup(h, CkptHandle)
        if ck.state != ACTIVE:
            raise CkptNotActive(f"checkpoint {ck.ckpt_id} is {ck.state}")
        return ck

    def handles(self):
        with self._lock:
            return list(self._handles.values())

    # -- MVCC ----------------------------------------------------------

    def tx_begin(self, cid):
        try:
            start, snap = self.store.snapshot(cid, HCT, pin=True)
        except NoSuchPointer:
            raise UninitializedHct(f"collection {cid!r} has no HCT pointer") from None
        return self._register(TxHandle(self._next_id(), cid, snap, start))

    def tx_get(self, h, oid):
        tx = self._active_tx(h)
        return self.store.get(tx.cid, tx.snapshot_cvid, oid)

    def tx_write(self, h, oid, offset, data):
        tx = self._active_tx(h)
        self.store.write_range(tx.cid, tx.snapshot_cvid, oid, offset, data)
        tx.write_set.add(oid)

    def tx_set(self, h, oid, data):
        tx = self._active_tx(h)
        self.store.set(tx.cid, tx.snapshot_cvid, oid, data)
        tx.write_set.add(oid)

    def _finish(self, tx, state):
        tx.state = state
        self.store.unpin(tx.cid, tx.snapshot_cvid)
        self.store.unpin(tx.cid, tx.start_hct)

    def _conflicts(self, tx, cur):
        s = self.store
        before = s.members(tx.cid, tx.start_hct)
        now = s.members(tx.cid, cur)
        out = set()
        for oid in tx.write_set:
            a, b = before.get(oid), now.get(oid)
            if a == b:
                continue
            if a is None or b is None or s.diff(tx.cid, oid, a, b):
                out.add(oid)
        return out

    def tx_commit(self, h):
        """Validate and commit; first committer wins on write-write overlap."""
        tx = self._active_tx(h)
        s = self.store
        if not tx.write_set:
            self._finish(tx, COMMITTED)
            return Committed(s.pointer_get(tx.cid, HCT))
        with self._commit_locks[tx.cid]:
            for _ in range(self.max_retries):
                try:
                    cur = s.pointer_get(tx.cid, HCT)
                except NoSuchPointer:
                    raise UninitializedHct(f"collection {tx.cid!r} has no HCT pointer") from None
                if cur != tx.start_hct:
                    conflicts = self._conflicts(tx, cur)
                    if conflicts:
                        self._finish(tx, ABORTED)
                        return Aborted(conflicts)
                    # carry over everything committed since we began
                    for oid, vid in s.members(tx.cid, cur).items():
                        if oid not in tx.write_set:
                            s.bind_member(tx.cid, tx.snapshot_cvid, oid, vid)
                    s.set_collection_parent(tx.cid, tx.snapshot_cvid, cur)
                if s.pointer_cas(tx.cid, HCT, cur, tx.snapshot_cvid):
                    s.freeze_collection(tx.cid, tx.snapshot_cvid)
                    self._finish(tx, COMMITTED)
                    return Committed(tx.snapshot_cvid)
            raise TxContention(f"HCT of {tx.cid!r} kept moving for {self.max_retries} attempts")

    def tx_abort(self, h):
        tx = self._active_tx(h)
        self._finish(tx, ABORTED)
        return Aborted(set())

    def hct_get(self, cid):
        try:
            return self.store.pointer_get(cid, HCT)
        except NoSuchPointer:
            raise UninitializedHct(f"collection {cid!r} has no HCT pointer") from None

    # -- read-atomic checkpoints ---------------------------------------

    def ckpt_begin(self, cid):
        try:
            base, snap = self.store.snapshot(cid, HRC, pin=True)
        except NoSuchPointer:
            raise UninitializedHrc(f"collection {cid!r} has no HRC pointer") from None
        return self._register(CkptHandle(self._next_id(), cid, snap, base))

    def ckpt_write(self, h, oid, offset, data):
        ck = self._active_ckpt(h)
        self.store.write_range(ck.cid, ck.ckpt_cvid, oid, offset, data)

    def ckpt_put(self, h, oid, data):
        """Replace ``oid`` in the checkpoint, creating it if absent."""
        ck = self._active_ckpt(h)
        if oid in self.store.list_objects(ck.cid, ck.ckpt_cvid):
            self.store.set(ck.cid, ck.ckpt_cvid, oid, data)
        else:
            self.store.create_object(ck.cid, ck.ckpt_cvid, oid, data)

    def _end_ckpt(self, ck, state):
        ck.state = state
        self.store.unpin(ck.cid, ck.ckpt_cvid)
        self.store.unpin(ck.cid, ck.base_hrc)

    def ckpt_commit(self, h):
        ck = self._active_ckpt(h)
        s = self.store
        s.freeze_collection(ck.cid, ck.ckpt_cvid)
        if not s.pointer_cas(ck.cid, HRC, ck.base_hrc, ck.ckpt_cvid):
            self._end_ckpt(ck, ABORTED)
            raise ConcurrentCheckpoint(f"HRC of {ck.cid!r} moved since checkpoint {ck.ckpt_id} began")
        self._end_ckpt(ck, COMMITTED)
        return ck.ckpt_cvid

    def ckpt_abort(self, h):
        self._end_ckpt(self._active_ckpt(h), ABORTED)

    def hrc_get(self, cid):
        try:
            return self.store.pointer_get(cid, HRC)
        except NoSuchPointer:
            raise UninitializedHrc(f"collection {cid!r} has no HRC pointer") from None

    def read_atomic_get(self, cid, oid):
        return self.store.get(cid, self.hrc_get(cid), oid)

    def read_atomic_snapshot(self, cid, oids=None):
        """Read several objects from one checkpoint: ``(cvid, {oid: bytes})``."""
        s = self.store
        while True:
            cvid = self.hrc_get(cid)
            try:
                s.pin(cid, cvid)
            except NoSuchCollectionVersion:
                continue  # collected between resolve and pin
            try:
                names = s.list_objects(cid, cvid) if oids is None else oids
                return cvid, {oid: s.get(cid, cvid, oid) for oid in names}
            finally:
                s.unpin(cid, cvid)

    # -- merge and GC --------------------------------------------------

    def merge_checkpoints(self, cid, from_cvid, to_cvid):
        """Squash the checkpoints strictly between ``from_cvid`` and ``to_cvid``.

        ``to_cvid`` keeps its content and is re-parented onto ``from_cvid``;
        the skipped versions become garbage for the next `txn_gc`.
        """
        s = self.store
        if from_cvid == to_cvid:
            raise NotLinearChain("from and to are the same version")
        between = []
        walk = s.collection_parent(cid, to_cvid)
        s.collection_parent(cid, from_cvid)
        while walk != from_cvid:
            if walk is None:
                raise NotLinearChain(f"{from_cvid} is not an ancestor of {to_cvid}")
            between.append(walk)
            walk = s.collection_parent(cid, walk)
        for cvid in [from_cvid, *between]:
            if len(s.collection_children(cid, cvid)) != 1:
                raise NotLinearChain(f"collection version {cvid} branches")
        busy = s.roots(cid) & set(between)
        if busy:
            raise InUse(f"collection versions {sorted(busy)} are referenced")
        s.set_collection_parent(cid, to_cvid, from_cvid)
        return to_cvid

    def txn_gc(self, cid):
        """Collect garbage; live handle snapshots are pinned and survive."""
        report = self.store.gc(cid)
        with self._lock:
            for key in [k for k, h in self._handles.items() if h.cid == cid and h.state != ACTIVE]:
                del self._handles[key]
        return report


__all__ = [
    "Aborted",
    "CkptHandle",
    "CommitOutcome",
    "Committed",
    "TxHandle",
    "TxnLayer",
]
