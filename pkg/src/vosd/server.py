"""Socket daemon exposing the store and transaction layers, plus a client.

Wire format. Every message is one frame::

    length:u32 big-endian | version:u8 | body

``length`` counts the version byte and the body. Version 0x01 means the body
is a UTF-8 JSON object; other values are reserved. Requests are
``{"id": u64, "op": str, "params": {...}}``; responses are
``{"id": u64, "ok": result}`` or ``{"id": u64|null, "err": {"code", "detail"}}``.

JSON values that plain JSON cannot carry are tagged objects:
``{"$b64": str}`` for bytes, ``{"$set": [...]}``, ``{"$tuple": [...]}`` and
``{"$type": name, ...fields}`` for result dataclasses. Error codes are the
``code`` attributes in `vosd.errors`.
"""

import base64
import dataclasses
import inspect
import itertools
import json
import logging
import os
import signal
import socket
import socketserver
import struct
import threading

from .core import STORE_OPS, ByteRange, GcReport, StoreStats
from .errors import (
    BadRequest,
    BindFailure,
    ConnectionClosed,
    InternalError,
    Timeout,
    UnknownOp,
    VosdError,
    error_from_code,
)
from .memstore import MemStore
from .txn import Aborted, CkptHandle, Committed, TxHandle, TxnLayer

log = logging.getLogger(__name__)

FRAME_JSON = 0x01
DEFAULT_ADDR = "127.0.0.1:7878"
MAX_FRAME = 1 << 30
_HDR = struct.Struct(">I")

TXN_OPS = (
    "tx_begin",
    "tx_get",
    "tx_write",
    "tx_set",
    "tx_commit",
    "tx_abort",
    "hct_get",
    "ckpt_begin",
    "ckpt_write",
    "ckpt_put",
    "ckpt_commit",
    "ckpt_abort",
    "hrc_get",
    "read_atomic_get",
    "read_atomic_snapshot",
    "merge_checkpoints",
    "txn_gc",
)

_TYPES = {cls.__name__: cls for cls in (ByteRange, StoreStats, GcReport, TxHandle, CkptHandle, Committed, Aborted)}


def parse_addr(text=None):
    text = text or os.environ.get("VOSD_ADDR") or DEFAULT_ADDR
    host, _, port = text.rpartition(":")
    return host or "127.0.0.1", int(port)


# -- codec -------------------------------------------------------------


def encode(value):
    if isinstance(value, (bytes, bytearray, memoryview)):
        return {"$b64": base64.b64encode(bytes(value)).decode("ascii")}
    if isinstance(value, (set, frozenset)):
        return {"$set": sorted((encode(v) for v in value), key=json.dumps)}
    if isinstance(value, tuple):
        return {"$tuple": [encode(v) for v in value]}
    if isinstance(value, list):
        return [encode(v) for v in value]
    if dataclasses.is_dataclass(value) and not isinstance(value, type):
        out = {"$type": type(value).__name__}
        for f in dataclasses.fields(value):
            out[f.name] = encode(getattr(value, f.name))
        return out
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    return value


def decode(value):
    if isinstance(value, list):
        return [decode(v) for v in value]
    if not isinstance(value, dict):
        return value
    if "$b64" in value:
        return base64.b64decode(value["$b64"])
    if "$set" in value:
        return {decode(v) for v in value["$set"]}
    if "$tuple" in value:
        return tuple(decode(v) for v in value["$tuple"])
    if "$type" in value:
        cls = _TYPES.get(value["$type"])
        if cls is None:
            raise BadRequest(f"unknown type tag {value['$type']!r}")
        return cls(**{k: decode(v) for k, v in value.items() if k != "$type"})
    return {k: decode(v) for k, v in value.items()}


def pack_frame(obj):
    body = bytes([FRAME_JSON]) + json.dumps(obj, separators=(",", ":")).encode("utf-8")
    return _HDR.pack(len(body)) + body


def _recv_exact(sock, n):
    buf = bytearray()
    while len(buf) < n:
        part = sock.recv(n - len(buf))
        if not part:
            return None
        buf += part
    return bytes(buf)


def read_frame(sock):
    """Return the raw frame body (version byte included) or None at EOF."""
    hdr = _recv_exact(sock, _HDR.size)
    if hdr is None:
        return None
    (n,) = _HDR.unpack(hdr)
    if n == 0 or n > MAX_FRAME:
        raise BadRequest(f"frame length {n} out of range")
    return _recv_exact(sock, n)


# -- server ------------------------------------------------------------


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        srv = self.server.vosd
        sock = self.request
        srv._track(sock, True)
        try:
            while True:
                try:
                    frame = read_frame(sock)
                except BadRequest as e:
                    sock.sendall(pack_frame({"id": None, "err": {"code": e.code, "detail": e.detail}}))
                    return
                if frame is None:
                    return
                with srv._slots:
                    reply = srv.handle_frame(frame)
                sock.sendall(pack_frame(reply))
        except OSError:
            pass
        finally:
            srv._track(sock, False)


class _TCPServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class VosdServer:
    """Serve ``store`` (and a `TxnLayer` over it) on a TCP address.

    Requests on one connection run in arrival order. At most ``max_inflight``
    requests execute at once across all connections; further frames are left
    unread in the socket until a slot frees up.
    """

    def __init__(self, store, txn=None, addr=None, max_inflight=64):
        self.store = store
        self.txn = txn or TxnLayer(store)
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._conns = set()
        self._conns_lock = threading.Lock()
        self._thread = None
        if addr is None or isinstance(addr, str):
            addr = parse_addr(addr)
        try:
            self._srv = _TCPServer(addr, _Handler)
        except OSError as e:
            raise BindFailure(f"cannot bind {addr}: {e}") from e
        self._srv.vosd = self

    @property
    def address(self):
        return self._srv.server_address[:2]

    def _track(self, sock, add):
        with self._conns_lock:
            (self._conns.add if add else self._conns.discard)(sock)

    def _target(self, op):
        if op in STORE_OPS:
            return getattr(self.store, op)
        if op in TXN_OPS:
            return getattr(self.txn, op)
        if op == "ping":
            return lambda: "pong"
        if op == "ops":
            return lambda: list(STORE_OPS + TXN_OPS)
        return None

    def handle_frame(self, frame):
        rid = None
        try:
            if frame[0] != FRAME_JSON:
                raise BadRequest(f"unsupported frame version {frame[0]}")
            try:
                req = json.loads(frame[1:].decode("utf-8"))
            except (UnicodeDecodeError, ValueError) as e:
                raise BadRequest(f"malformed JSON: {e}") from None
            if not isinstance(req, dict):
                raise BadRequest("request must be a JSON object")
            rid = req.get("id")
            op, params = req.get("op"), req.get("params", {})
            if not isinstance(rid, int) or not isinstance(op, str) or not isinstance(params, dict):
                raise BadRequest("request needs integer id, string op and object params")
            fn = self._target(op)
            if fn is None:
                raise UnknownOp(f"unknown op {op!r}")
            kwargs = decode(params)
            try:
                inspect.signature(fn).bind(**kwargs)
            except TypeError as e:
                raise BadRequest(f"bad params for {op}: {e}") from None
            return {"id": rid, "ok": encode(fn(**kwargs))}
        except VosdError as e:
            return {"id": rid, "err": {"code": e.code, "detail": e.detail or str(e)}}
        except Exception as e:  # noqa: BLE001 - surfaced to the client as "internal"
            log.exception("request %s failed", rid)
            return {"id": rid, "err": {"code": InternalError.code, "detail": repr(e)}}

    def serve_forever(self):
        self._srv.serve_forever(poll_interval=0.1)

    def start(self):
        self._thread = threading.Thread(target=self.serve_forever, name="vosd-server", daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self._srv.shutdown()
        self._srv.server_close()
        with self._conns_lock:
            conns = list(self._conns)
        for sock in conns:
            try:
                sock.shutdown(socket.SHUT_RDWR)
            except OSError:
                pass
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.shutdown()


def serve(store, txn_layer=None, listen_addr=None, max_inflight=64):
    """Run a server in the foreground until SIGINT or SIGTERM."""
    server = VosdServer(store, txn_layer, listen_addr, max_inflight)
    stop = threading.Event()

    def on_signal(signum, frame):
        stop.set()

    old = {s: signal.signal(s, on_signal) for s in (signal.SIGINT, signal.SIGTERM)}
    server.start()
    host, port = server.address
    log.info("vosd serving %s on %s:%d", store.name, host, port)
    try:
        stop.wait()
    finally:
        server.shutdown()
        for s, h in old.items():
            signal.signal(s, h)
    return server


# -- client ------------------------------------------------------------


class Client:
    """Blocking request/response client. Not shared between threads."""

    def __init__(self, addr=None, timeout=30.0):
        if addr is None or isinstance(addr, str):
            addr = parse_addr(addr)
        self.timeout = timeout
        try:
            self._sock = socket.create_connection(addr, timeout=timeout)
        except socket.timeout:
            raise Timeout(f"connecting to {addr}") from None
        except OSError as e:
            raise ConnectionClosed(f"cannot connect to {addr}: {e}") from None
        self._ids = itertools.count(1)

    def _send(self, data):
        try:
            self._sock.sendall(data)
        except socket.timeout:
            raise Timeout("send timed out") from None
        except OSError as e:
            raise ConnectionClosed(str(e)) from None

    def _recv(self):
        try:
            frame = read_frame(self._sock)
        except socket.timeout:
            raise Timeout(f"no response within {self.timeout}s") from None
        except OSError as e:
            raise ConnectionClosed(str(e)) from None
        if frame is None:
            raise ConnectionClosed("server closed the connection")
        return json.loads(frame[1:].decode("utf-8"))

    @staticmethod
    def _result(resp):
        if "err" in resp:
            raise error_from_code(resp["err"]["code"], resp["err"].get("detail", ""))
        return decode(resp["ok"])

    def call(self, op, **params):
        rid = next(self._ids)
        self._send(pack_frame({"id": rid, "op": op, "params": encode(params)}))
        resp = self._recv()
        if resp.get("id") != rid:
            raise BadRequest(f"response id {resp.get('id')} does not match request {rid}")
        return self._result(resp)

    def send_raw(self, body, version=FRAME_JSON):
        """Send an arbitrary frame body; return the decoded JSON response."""
        payload = bytes([version]) + body
        self._send(_HDR.pack(len(payload)) + payload)
        return self._recv()

    def pipeline(self, calls):
        """Send every ``(op, params)`` before reading any response.

        Returns results in order; a failed call yields its exception object.
        """
        ids = []
        frames = []
        for op, params in calls:
            rid = next(self._ids)
            ids.append(rid)
            frames.append(pack_frame({"id": rid, "op": op, "params": encode(params)}))
        sender = threading.Thread(target=self._send, args=(b"".join(frames),), daemon=True)
        sender.start()
        out = []
        for rid in ids:
            resp = self._recv()
            if resp.get("id") != rid:
                raise BadRequest(f"response id {resp.get('id')} does not match request {rid}")
            try:
                out.append(self._result(resp))
            except VosdError as e:
                out.append(e)
        sender.join()
        return out

    def close(self):
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


_SIGS = {}
for _op in STORE_OPS:
    _SIGS[_op] = inspect.signature(getattr(MemStore, _op))
for _op in TXN_OPS:
    _SIGS[_op] = inspect.signature(getattr(TxnLayer, _op))


class Remote:
    """Proxy that mirrors the library API over a `Client`.

    ``Remote(client).get("c", 1, "a")`` sends ``{"op": "get", "params":
    {"cid": "c", "cvid": 1, "oid": "a"}}``; store and txn ops share one proxy.
    """

    def __init__(self, client):
        self.client = client

    def __getattr__(self, op):
        sig = _SIGS.get(op)
        if sig is None:
            raise AttributeError(op)

        def call(*args, **kwargs):
            bound = sig.bind(None, *args, **kwargs)
            params = dict(bound.arguments)
            params.pop("self")
            return self.client.call(op, **params)

        call.__name__ = op
        return call
