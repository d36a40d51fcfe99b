"""Copy-on-write in-memory backend.

Object payloads are lists of chunk ids into a refcounted per-collection
`ChunkPool`. Cloning a version copies the slot list and bumps refcounts;
writing a slot allocates a fresh chunk and releases the old one.
"""

from .core import BaseStore, DEFAULT_CHUNK_SIZE


class ChunkPool:
    """Refcounted pool of immutable byte chunks."""

    def __init__(self):
        self._data = {}
        self._refs = {}
        self._next = 1
        self.stored_bytes = 0

    def __len__(self):
        return len(self._data)

    def alloc(self, data):
        cid = self._next
        self._next += 1
        self._data[cid] = data
        self._refs[cid] = 1
        self.stored_bytes += len(data)
        return cid

    def incref(self, cid):
        self._refs[cid] += 1

    def decref(self, cid):
        """Drop one reference; return bytes freed (0 if still referenced)."""
        n = self._refs[cid] - 1
        if n:
            self._refs[cid] = n
            return 0
        del self._refs[cid]
        size = len(self._data.pop(cid))
        self.stored_bytes -= size
        return size

    def data(self, cid):
        return self._data[cid]

    def refcount(self, cid):
        return self._refs.get(cid, 0)

    def ids(self):
        return set(self._data)


class MemStore(BaseStore):
    name = "mem"

    def __init__(self, chunk_size=DEFAULT_CHUNK_SIZE):
        super().__init__(chunk_size)

    def _p_init(self, col, ch):
        col.storage = ChunkPool()

    def _alloc_all(self, pool, data):
        cs = self.chunk_size
        return [pool.alloc(data[i:i + cs]) for i in range(0, len(data), cs)]

    def _p_create(self, col, oid, rec, data, ch):
        rec.chunk_slots = self._alloc_all(col.storage, data)

    def _p_read(self, col, oid, rec, offset, length):
        if length == 0:
            return b""
        cs = self.chunk_size
        pool = col.storage
        first, last = offset // cs, (offset + length - 1) // cs
        buf = b"".join(pool.data(c) for c in rec.chunk_slots[first:last + 1])
        start = offset - first * cs
        return buf[start:start + length]

    def _p_write(self, col, oid, rec, offset, data, ch):
        if not data:
            return
        cs = self.chunk_size
        pool = col.storage
        slots = rec.chunk_slots
        end = offset + len(data)
        for i in range(offset // cs, (end - 1) // cs + 1):
            base = i * cs
            lo, hi = max(offset, base), min(end, base + cs)
            old = slots[i] if i < len(slots) else None
            chunk = bytearray(pool.data(old)) if old is not None else bytearray()
            if len(chunk) < hi - base:
                chunk.extend(bytes(hi - base - len(chunk)))
            chunk[lo - base:hi - base] = data[lo - offset:hi - offset]
            new = pool.alloc(bytes(chunk))
            if old is None:
                slots.append(new)
            else:
                slots[i] = new
                pool.decref(old)

    def _p_replace(self, col, oid, rec, data, ch):
        pool = col.storage
        for c in rec.chunk_slots:
            pool.decref(c)
        rec.chunk_slots = self._alloc_all(pool, data)

    def _p_clone(self, col, oid, src, dst, ch):
        dst.chunk_slots = list(src.chunk_slots)
        for c in dst.chunk_slots:
            col.storage.incref(c)
        return 0

    def _p_drop(self, col, oid, rec, ch):
        chunks = freed = 0
        for c in rec.chunk_slots:
            n = col.storage.decref(c)
            if n:
                chunks += 1
                freed += n
        return chunks, freed

    def _p_chunk_ids(self, col, rec):
        return rec.chunk_slots

    def _space(self, col):
        return len(col.storage), col.storage.stored_bytes

    def chunk_refcounts(self, cid):
        """Per-chunk refcounts of one collection (for accounting checks)."""
        col = self._col(cid)
        with col.lock:
            return {c: col.storage.refcount(c) for c in col.storage.ids()}
