"""vosd: a single-node versioned object store.

Four interchangeable backends (copy-on-write memory, full-copy files,
full-copy log-structured KV, naive reference), optimistic MVCC and
read-atomic checkpoint layers, a benchmark harness and a socket daemon.
"""

__version__ = "0.1.0"

from .core import HCT, HEAD, HRC, ByteRange, GcReport, Store, StoreStats  # noqa: E402
from .memstore import MemStore  # noqa: E402
from .oracle import OracleStore  # noqa: E402
from .backend_file import FileStore  # noqa: E402
from .backend_kv import KvStore  # noqa: E402
from .txn import Aborted, Committed, TxnLayer  # noqa: E402


def open_store(backend, path=None, chunk_size=None, sync=True):
    """Open a store by backend name: ``mem``, ``oracle``, ``file`` or ``kv``."""
    from .errors import InvalidArgument

    if backend in ("mem", "oracle"):
        if path is not None:
            raise InvalidArgument(f"backend {backend!r} does not take a path")
        cls = MemStore if backend == "mem" else OracleStore
        return cls(chunk_size) if chunk_size else cls()
    if backend in ("file", "kv"):
        if path is None:
            raise InvalidArgument(f"backend {backend!r} requires a path")
        cls = FileStore if backend == "file" else KvStore
        return cls(path, chunk_size=chunk_size, sync=sync)
    raise InvalidArgument(f"unknown backend {backend!r}")


__all__ = [
    "Aborted",
    "ByteRange",
    "Committed",
    "FileStore",
    "GcReport",
    "HCT",
    "HEAD",
    "HRC",
    "KvStore",
    "MemStore",
    "OracleStore",
    "Store",
    "StoreStats",
    "TxnLayer",
    "open_store",
]
