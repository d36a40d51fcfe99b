"""Command-line frontend: ``vosd <command> ...``.

Commands operate on a local store (``--backend``/``--path``) or, without
``--backend``, on a running daemon at ``--addr`` / ``$VOSD_ADDR``.
Exit status: 0 success, 1 domain error, 2 usage error.
"""

import argparse
import json
import os
import re
import sys

from . import __version__, open_store
from .bench import WorkloadSpec, generate, load_reports, render, report_to_dict, run_creation, run_retrieval
from .core import HEAD, HRC
from .errors import VosdError
from .server import Client, Remote, encode, parse_addr, serve
from .txn import TxnLayer

_SIZE = re.compile(r"^\s*(\d+)\s*([KMG]?)(?:i?B)?\s*$", re.IGNORECASE)
_UNITS = {"": 1, "K": 1 << 10, "M": 1 << 20, "G": 1 << 30}


def parse_size(text):
    """``"256KiB"`` -> 262144. Suffixes K/M/G are binary with or without ``iB``."""
    m = _SIZE.match(str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"bad size {text!r}")
    return int(m.group(1)) * _UNITS[m.group(2).upper()]


class Session:
    """A store plus txn layer, local or remote."""

    def __init__(self, args):
        backend = getattr(args, "backend", None)
        if backend:
            chunk = getattr(args, "chunk_size", None)
            self.store = open_store(backend, getattr(args, "path", None), chunk)
            self.txn = TxnLayer(self.store)
            self.client = None
        else:
            self.client = Client(parse_addr(args.addr))
            self.store = self.txn = Remote(self.client)

    def close(self):
        if self.client is not None:
            self.client.close()
        else:
            self.store.close()


def _emit(args, value, text=None):
    if getattr(args, "format", "table") == "json":
        print(json.dumps(encode(value)))
    elif text is not None:
        print(text)
    elif value is not None:
        print(value)


def _cv(s, args):
    return args.cv if args.cv is not None else s.store.pointer_get(args.collection, HEAD)


def _payload(args):
    if args.data is not None:
        return args.data.encode("utf-8")
    if args.file is not None:
        with open(args.file, "rb") as f:
            return f.read()
    if args.size is not None:
        import numpy as np

        return np.random.default_rng(args.seed).bytes(args.size)
    raise VosdError("one of --data, --file or --size is required")


# -- obj ---------------------------------------------------------------


def cmd_obj_put(s, args):
    data = _payload(args)
    cv = _cv(s, args)
    st = s.store
    if args.offset is not None:
        st.write_range(args.collection, cv, args.object, args.offset, data)
    elif args.object in st.list_objects(args.collection, cv):
        st.set(args.collection, cv, args.object, data)
    else:
        st.create_object(args.collection, cv, args.object, data)
    vid = st.members(args.collection, cv)[args.object]
    if args.size is not None:
        print(f"seed {args.seed}", file=sys.stderr)
    _emit(args, vid, f"{args.object}@{vid} ({len(data)} bytes written)")


def cmd_obj_get(s, args):
    if args.vid is not None:
        data = s.store.read_version(args.collection, args.object, args.vid, args.offset or 0, args.length)
    elif args.offset is not None or args.length is not None:
        cv = _cv(s, args)
        off = args.offset or 0
        length = args.length
        if length is None:
            length = len(s.store.get(args.collection, cv, args.object)) - off
        data = s.store.get_range(args.collection, cv, args.object, off, length)
    else:
        data = s.store.get(args.collection, _cv(s, args), args.object)
    if args.out:
        with open(args.out, "wb") as f:
            f.write(data)
    elif args.format == "json":
        _emit(args, data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def cmd_obj_clone(s, args):
    if args.vid is not None:
        vid = s.store.clone_version(args.collection, args.object, args.vid)
    else:
        vid = s.store.clone_object(args.collection, _cv(s, args), args.object)
    _emit(args, vid)


def cmd_obj_diff(s, args):
    ranges = s.store.diff(args.collection, args.object, args.v1, args.v2)
    _emit(args, ranges, "\n".join(f"{r.offset} {r.length}" for r in ranges))


def cmd_obj_lineage(s, args):
    st, c, o = s.store, args.collection, args.object
    vids = [args.vid] if args.vid is not None else st.versions(c, o)
    rows = {v: {"parent": st.parent(c, o, v), "children": sorted(st.children(c, o, v))} for v in vids}
    lines = [f"v{v} parent={r['parent'] or '-'} children={','.join(map(str, r['children'])) or '-'}" for v, r in rows.items()]
    _emit(args, rows, "\n".join(lines))


# -- col / ptr -----------------------------------------------------------


def cmd_col_create(s, args):
    _emit(args, s.store.create_collection(args.collection))


def cmd_col_clone(s, args):
    st = s.store
    src = _cv(s, args)
    new = st.clone_collection(args.collection, src)
    if args.advance_head:
        st.pointer_cas(args.collection, HEAD, src, new)
    _emit(args, new)


def cmd_col_list(s, args):
    st = s.store
    if args.collection is None:
        names = st.list_collections()
        _emit(args, names, "\n".join(names))
    elif args.cv is not None:
        m = st.members(args.collection, args.cv)
        _emit(args, m, "\n".join(f"{o} v{v}" for o, v in m.items()))
    else:
        ptrs = st.pointers(args.collection)
        rows = {}
        for cv in st.collection_versions(args.collection):
            rows[cv] = {
                "parent": st.collection_parent(args.collection, cv),
                "frozen": st.is_frozen(args.collection, cv),
                "pointers": sorted(n for n, t in ptrs.items() if t == cv),
            }
        lines = [
            f"cv{cv} parent={r['parent'] or '-'} {'frozen' if r['frozen'] else 'writable'} {' '.join(r['pointers'])}".rstrip()
            for cv, r in rows.items()
        ]
        _emit(args, rows, "\n".join(lines))


def cmd_ptr_get(s, args):
    _emit(args, s.store.pointer_get(args.collection, args.name))


def cmd_ptr_cas(s, args):
    expected = None if args.expected.lower() == "none" else int(args.expected)
    ok = s.store.pointer_cas(args.collection, args.name, expected, args.new)
    _emit(args, ok, "true" if ok else "false")


def cmd_gc(s, args):
    rep = s.txn.txn_gc(args.collection)
    _emit(args, rep, " ".join(f"{k}={v}" for k, v in vars(rep).items()))


def cmd_stats(s, args):
    st = s.store.stats()
    _emit(args, st, " ".join(f"{k}={v}" for k, v in vars(st).items()))


# -- demos ---------------------------------------------------------------


def cmd_tx_demo(s, args):
    st, tx = s.store, s.txn
    c = args.collection
    say = print
    say(f"# optimistic MVCC on collection {c!r}")
    st.create_collection(c)
    for oid in ("a", "b"):
        st.create_object(c, 1, oid, b"0" * 16)
    say(f"HCT -> cv{tx.hct_get(c)} holding objects a, b")
    t1, t2 = tx.tx_begin(c), tx.tx_begin(c)
    say(f"T{t1.tx_id} and T{t2.tx_id} begin on snapshots cv{t1.snapshot_cvid}, cv{t2.snapshot_cvid} (start HCT cv{t1.start_hct})")
    tx.tx_write(t1, "a", 0, b"T1")
    tx.tx_write(t2, "a", 0, b"T2")
    say("both write object a")
    say(f"T{t1.tx_id} commit -> {tx.tx_commit(t1)}")
    out = tx.tx_commit(t2)
    say(f"T{t2.tx_id} commit -> {out}   (first committer wins)")
    t3, t4 = tx.tx_begin(c), tx.tx_begin(c)
    tx.tx_write(t3, "a", 2, b"T3")
    tx.tx_write(t4, "b", 0, b"T4")
    say(f"T{t3.tx_id} writes a, T{t4.tx_id} writes b (disjoint)")
    say(f"T{t3.tx_id} commit -> {tx.tx_commit(t3)}")
    say(f"T{t4.tx_id} commit -> {tx.tx_commit(t4)}   (rebased onto the newer HCT)")
    head = tx.hct_get(c)
    for oid in ("a", "b"):
        say(f"HCT cv{head} {oid} = {st.get(c, head, oid)!r}")
    rep = tx.txn_gc(c)
    say(f"gc: {rep}")
    return 0


def cmd_ckpt_demo(s, args):
    st, tx = s.store, s.txn
    c = args.collection
    say = print
    say(f"# read-atomic checkpoints on collection {c!r}")
    st.create_collection(c)
    names = ("x", "y", "z")
    for oid in names:
        st.create_object(c, 1, oid, b"tag-000")
    say(f"HRC -> cv{tx.hrc_get(c)}, all objects tagged 000")
    kept = tx.hrc_get(c)
    for k in (1, 2, 3):
        h = tx.ckpt_begin(c)
        for oid in names:
            tx.ckpt_write(h, oid, 0, f"tag-{k:03d}".encode())
        mid = tx.read_atomic_snapshot(c)[1]
        say(f"checkpoint {k} written into cv{h.ckpt_cvid}; readers still see {sorted(set(mid.values()))}")
        say(f"checkpoint {k} committed -> HRC cv{tx.ckpt_commit(h)}")
        if k == 1:
            kept = h.ckpt_cvid
            st.pointer_cas(c, "keep", None, kept)
    cvid, snap = tx.read_atomic_snapshot(c)
    say(f"reader resolves HRC cv{cvid}: {sorted(set(snap.values()))}")
    head = tx.hrc_get(c)
    skipped = []
    walk = st.collection_parent(c, head)
    while walk != kept:
        skipped.append(walk)
        walk = st.collection_parent(c, walk)
    tx.merge_checkpoints(c, kept, head)
    say(f"merge cv{kept}..cv{head}: cv{head} now parented on cv{st.collection_parent(c, head)}, "
        f"cv{', cv'.join(map(str, sorted(skipped)))} left for gc")
    say(f"gc: {tx.txn_gc(c)}")
    a, b = tx.ckpt_begin(c), tx.ckpt_begin(c)
    tx.ckpt_commit(a)
    try:
        tx.ckpt_commit(b)
    except VosdError as e:
        say(f"second concurrent checkpoint writer rejected: {e.code}")
    say(f"HRC cv{tx.hrc_get(c)} still reads {st.get(c, tx.hrc_get(c), 'x')!r}")
    return 0


# -- bench / render / serve ------------------------------------------------


def _spec(args):
    if args.full:
        return WorkloadSpec.full(args.seed)
    return WorkloadSpec(args.objects, args.versions, args.size, args.mods, args.mod_size, args.seed)


def _bench_store(args, spec):
    return open_store(args.backend or "mem", args.path, spec.mod_size)


def cmd_bench_create(s, args):
    spec = _spec(args)
    plan = generate(spec)
    with _bench_store(args, spec) as store:
        rep = run_creation(plan, store)
    _save(args, [rep])
    sys.stdout.write(render([rep], args.format))
    return 0


def cmd_bench_read(s, args):
    spec = _spec(args)
    plan = generate(spec)
    with _bench_store(args, spec) as store:
        run_creation(plan, store)
        rep = run_retrieval(plan, store, args.queries, args.query_seed)
    _save(args, [rep])
    sys.stdout.write(render([rep], args.format))
    return 0


def _save(args, reports):
    if args.out:
        with open(args.out, "w") as f:
            json.dump([report_to_dict(r) for r in reports], f, indent=2)


def cmd_render(s, args):
    reports = []
    for path in args.reports:
        with open(path) as f:
            reports.extend(load_reports(f.read()))
    sys.stdout.write(render(reports, args.format))
    return 0


def cmd_serve(s, args):
    store = open_store(args.backend or "mem", args.path, args.chunk_size)
    host, port = parse_addr(args.addr)
    print(f"serving {store.name} on {host}:{port}", file=sys.stderr)
    serve(store, TxnLayer(store), args.addr, args.max_inflight)
    store.close()
    return 0


# -- parser ----------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--backend", choices=("mem", "file", "kv", "oracle"))
    common.add_argument("--path", help="store directory (file and kv backends)")
    common.add_argument("--addr", help="daemon address host:port (default $VOSD_ADDR)")
    common.add_argument("--chunk-size", type=parse_size, default=None)
    common.add_argument("--format", choices=("table", "tsv", "json"), default="table")

    p = argparse.ArgumentParser(prog="vosd", description="versioned object store")
    p.add_argument("--version", action="version", version=f"vosd {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    def add(parent, name, fn, **kw):
        sp = parent.add_parser(name, parents=[common], **kw)
        sp.set_defaults(fn=fn)
        return sp

    def obj_target(sp, cv=True):
        sp.add_argument("-c", "--collection", required=True)
        sp.add_argument("-o", "--object", required=True)
        if cv:
            sp.add_argument("--cv", type=int, help="collection version (default HEAD)")

    obj = sub.add_parser("obj", help="object operations").add_subparsers(dest="cmd", required=True)
    sp = add(obj, "put", cmd_obj_put, help="create, replace or range-write an object")
    obj_target(sp)
    sp.add_argument("--offset", type=parse_size)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--data")
    g.add_argument("--file")
    g.add_argument("--size", type=parse_size, help="write SIZE seeded random bytes")
    sp.add_argument("--seed", type=int, default=0)
    sp = add(obj, "get", cmd_obj_get, help="read an object")
    obj_target(sp)
    sp.add_argument("--vid", type=int)
    sp.add_argument("--offset", type=parse_size)
    sp.add_argument("--length", type=parse_size)
    sp.add_argument("--out")
    sp = add(obj, "clone", cmd_obj_clone, help="clone an object version")
    obj_target(sp)
    sp.add_argument("--vid", type=int)
    sp = add(obj, "diff", cmd_obj_diff, help="chunk ranges that differ between two versions")
    obj_target(sp, cv=False)
    sp.add_argument("--v1", type=int, required=True)
    sp.add_argument("--v2", type=int, required=True)
    sp = add(obj, "lineage", cmd_obj_lineage, help="parent/children links")
    obj_target(sp, cv=False)
    sp.add_argument("--vid", type=int)

    col = sub.add_parser("col", help="collection operations").add_subparsers(dest="cmd", required=True)
    sp = add(col, "create", cmd_col_create)
    sp.add_argument("-c", "--collection", required=True)
    sp = add(col, "clone", cmd_col_clone)
    sp.add_argument("-c", "--collection", required=True)
    sp.add_argument("--cv", type=int)
    sp.add_argument("--advance-head", action="store_true")
    sp = add(col, "list", cmd_col_list)
    sp.add_argument("-c", "--collection")
    sp.add_argument("--cv", type=int)

    ptr = sub.add_parser("ptr", help="named pointers").add_subparsers(dest="cmd", required=True)
    sp = add(ptr, "get", cmd_ptr_get)
    sp.add_argument("-c", "--collection", required=True)
    sp.add_argument("-n", "--name", default=HEAD)
    sp = add(ptr, "cas", cmd_ptr_cas)
    sp.add_argument("-c", "--collection", required=True)
    sp.add_argument("-n", "--name", default=HRC)
    sp.add_argument("--expected", required=True, help="current target or 'none'")
    sp.add_argument("--new", type=int, required=True)

    for group, fn, default in (("tx", cmd_tx_demo, "demo-tx"), ("ckpt", cmd_ckpt_demo, "demo-ckpt")):
        g = sub.add_parser(group, help=f"{group} scenarios").add_subparsers(dest="cmd", required=True)
        sp = add(g, "demo", fn, help="narrated end-to-end scenario")
        sp.add_argument("-c", "--collection", default=default)

    sp = add(sub, "gc", cmd_gc, help="garbage-collect a collection")
    sp.add_argument("-c", "--collection", required=True)
    add(sub, "stats", cmd_stats, help="store counters")

    bench = sub.add_parser("bench", help="creation/retrieval benchmarks").add_subparsers(dest="cmd", required=True)
    for name, fn in (("create", cmd_bench_create), ("read", cmd_bench_read)):
        sp = add(bench, name, fn)
        sp.add_argument("--objects", type=int, default=10)
        sp.add_argument("--versions", type=int, default=10)
        sp.add_argument("--size", type=parse_size, default=256 << 10)
        sp.add_argument("--mods", type=int, default=4)
        sp.add_argument("--mod-size", type=parse_size, default=16 << 10)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--full", action="store_true", help="100 objects x 100 versions x 4MiB, 64 mods")
        sp.add_argument("--out", help="also save the report as JSON")
        if name == "read":
            sp.add_argument("--queries", type=int, default=100)
            sp.add_argument("--query-seed", type=int)

    sp = add(sub, "render", cmd_render, help="render saved JSON reports")
    sp.add_argument("reports", nargs="+")
    sp = add(sub, "serve", cmd_serve, help="run the daemon")
    sp.add_argument("--max-inflight", type=int, default=64)
    return p


_LOCAL_ONLY = {cmd_bench_create, cmd_bench_read, cmd_render, cmd_serve}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend in ("file", "kv") and not args.path:
        parser.error(f"--backend {args.backend} requires --path")
    if args.backend in ("mem", "oracle") and args.path:
        parser.error(f"--backend {args.backend} does not take --path")
    if args.fn not in _LOCAL_ONLY and not args.backend and not (args.addr or os.environ.get("VOSD_ADDR")):
        parser.error("choose --backend, or --addr / $VOSD_ADDR to use a daemon")
    session = None
    try:
        if args.fn not in _LOCAL_ONLY:
            session = Session(args)
        rc = args.fn(session, args)
        return rc or 0
    except VosdError as e:
        print(f"error: {e.detail or e.code}", file=sys.stderr)
        return 1
    finally:
        if session is not None:
            session.close()


if __name__ == "__main__":
    sys.exit(main())
