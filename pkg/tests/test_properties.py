"""Property tests for the store invariants."""

import hashlib
import tempfile
import threading
from collections import Counter

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from vosd import open_store
from vosd.core import HCT, HEAD, HRC
from vosd.errors import VersionInUse

CS = 8  # tiny chunks so short payloads cross many boundaries
SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])


def brute_diff(a, b, cs):
    """Chunk positions whose bytes differ, as coalesced (offset, length)."""
    n = max(len(a), len(b))
    out = []
    for i in range(0, n, cs):
        if a[i:i + cs] != b[i:i + cs]:
            end = min(i + cs, n)
            if out and out[-1][0] + out[-1][1] == i:
                out[-1] = (out[-1][0], end - out[-1][0])
            else:
                out.append((i, end - i))
    return out


def stores(kinds=("mem", "oracle", "file", "kv")):
    tmp = tempfile.TemporaryDirectory()
    out = []
    for k in kinds:
        path = None if k in ("mem", "oracle") else f"{tmp.name}/{k}"
        out.append(open_store(k, path, chunk_size=CS, sync=False))
    return tmp, out


payload = st.binary(min_size=0, max_size=40)
history_ops = st.lists(
    st.one_of(
        st.tuples(st.just("clone"), st.integers(0, 50)),
        st.tuples(st.just("write"), st.integers(0, 50), st.floats(0, 1), payload),
        st.tuples(st.just("set"), st.integers(0, 50), payload),
    ),
    max_size=25,
)


def build_history(s, init, ops):
    """Apply a version-addressed history to object "a"; return the model."""
    s.create_collection("c")
    s.create_object("c", 1, "a", init)
    model = {1: bytearray(init)}
    frozen = set()
    for op in ops:
        vids = sorted(model)
        vid = vids[op[1] % len(vids)]
        if op[0] == "clone":
            new = s.clone_version("c", "a", vid)
            model[new] = bytearray(model[vid])
            frozen.add(vid)
            continue
        writable = [v for v in vids if v not in frozen]
        if not writable:
            continue
        vid = writable[op[1] % len(writable)]
        if op[0] == "write":
            off = int(op[2] * len(model[vid]))
            s.write_version("c", "a", vid, off, op[3])
            model[vid][off:off + len(op[3])] = op[3]
        else:
            s.set_version("c", "a", vid, op[2])
            model[vid] = bytearray(op[2])
    return model


@SETTINGS
@given(init=payload, ops=history_ops)
def test_write_read_identity_all_backends(init, ops):
    tmp, group = stores()
    try:
        for s in group:
            model = build_history(s, init, ops)
            for vid, data in model.items():
                assert s.read_version("c", "a", vid) == bytes(data), s.name
    finally:
        for s in group:
            s.close()
        tmp.cleanup()


@SETTINGS
@given(init=payload, ops=history_ops, probe=st.lists(st.tuples(st.integers(0, 50), payload), max_size=8))
def test_frozen_versions_never_change(init, ops, probe):
    s = open_store("mem", chunk_size=CS)
    model = build_history(s, init, ops)
    frozen = {v: hashlib.sha256(s.read_version("c", "a", v)).hexdigest()
              for v in model if s._cols["c"].objects["a"].versions[v].frozen}
    recs = s._cols["c"].objects["a"].versions
    for i, data in probe:
        writable = [v for v in sorted(recs) if not recs[v].frozen]
        if writable:
            s.write_version("c", "a", writable[i % len(writable)], 0, data)
        s.clone_version("c", "a", sorted(model)[i % len(model)])
    for v, h in frozen.items():
        assert hashlib.sha256(s.read_version("c", "a", v)).hexdigest() == h


@SETTINGS
@given(init=payload, ops=history_ops)
def test_diff_matches_brute_force(init, ops):
    tmp, group = stores(("mem", "oracle", "kv"))
    try:
        for s in group:
            model = build_history(s, init, ops)
            vids = sorted(model)
            for a in vids:
                for b in vids:
                    got = [(r.offset, r.length) for r in s.diff("c", "a", a, b)]
                    want = brute_diff(bytes(model[a]), bytes(model[b]), CS)
                    assert got == want, (s.name, a, b)
                    # soundness: every differing byte is covered
                    x, y = bytes(model[a]), bytes(model[b])
                    covered = set()
                    for off, n in got:
                        covered.update(range(off, off + n))
                        assert x[off:off + n] != y[off:off + n]  # no empty-diff range
                    for i in range(max(len(x), len(y))):
                        if x[i:i + 1] != y[i:i + 1]:
                            assert i in covered
                    assert got == [(r.offset, r.length) for r in s.diff("c", "a", b, a)]
    finally:
        for s in group:
            s.close()
        tmp.cleanup()


col_ops = st.lists(
    st.one_of(
        st.tuples(st.just("clone_cv"), st.integers(0, 30)),
        st.tuples(st.just("write"), st.integers(0, 30), st.sampled_from("abc"), st.integers(0, 40), payload),
        st.tuples(st.just("create"), st.integers(0, 30), st.sampled_from("abcd"), payload),
        st.tuples(st.just("move"), st.sampled_from((HEAD, HCT, HRC)), st.integers(0, 30)),
        st.tuples(st.just("delete"), st.sampled_from("abc"), st.integers(0, 30)),
        st.tuples(st.just("gc")),
    ),
    max_size=30,
)


def run_col_ops(s, ops):
    from vosd.errors import VosdError

    s.create_collection("c")
    for op in ops:
        cvs = s.collection_versions("c")
        try:
            if op[0] == "clone_cv":
                s.clone_collection("c", cvs[op[1] % len(cvs)])
            elif op[0] == "write":
                cv = cvs[op[1] % len(cvs)]
                s.write_range("c", cv, op[2], op[3], op[4])
            elif op[0] == "create":
                s.create_object("c", cvs[op[1] % len(cvs)], op[2], op[3])
            elif op[0] == "move":
                s.pointer_cas("c", op[1], s.pointer_get("c", op[1]), cvs[op[2] % len(cvs)])
            elif op[0] == "delete":
                vids = s.versions("c", op[1])
                if vids:
                    s.delete_version("c", op[1], vids[op[2] % len(vids)])
            else:
                s.gc("c")
        except VosdError:
            pass


def check_lineage(s):
    col = s._cols["c"]
    for om in col.objects.values():
        for vid, rec in om.versions.items():
            if rec.parent is not None:
                assert vid in om.versions[rec.parent].children
            for ch in rec.children:
                assert om.versions[ch].parent == vid
            seen, walk = set(), vid
            while walk is not None:
                assert walk not in seen
                seen.add(walk)
                walk = om.versions[walk].parent
    for cvid in s.collection_versions("c"):
        seen, walk = set(), cvid
        while walk is not None:
            assert walk not in seen
            seen.add(walk)
            walk = s.collection_parent("c", walk)
        for ch in s.collection_children("c", cvid):
            assert s.collection_parent("c", ch) == cvid


@SETTINGS
@given(ops=col_ops)
def test_refcount_conservation_and_lineage(ops):
    s = open_store("mem", chunk_size=CS)
    run_col_ops(s, ops)
    col = s._cols["c"]
    slots = Counter()
    for om in col.objects.values():
        for rec in om.versions.values():
            slots.update(rec.chunk_slots)
    assert dict(slots) == s.chunk_refcounts("c")
    assert all(n > 0 for n in s.chunk_refcounts("c").values())
    check_lineage(s)


@SETTINGS
@given(ops=col_ops)
def test_collection_ops_agree_with_oracle(ops):
    a, b = open_store("mem", chunk_size=CS), open_store("oracle", chunk_size=CS)
    run_col_ops(a, ops)
    run_col_ops(b, ops)
    for cv in a.collection_versions("c"):
        assert a.members("c", cv) == b.members("c", cv)
        for oid in a.list_objects("c", cv):
            assert a.get("c", cv, oid) == b.get("c", cv, oid)
    assert b.collection_versions("c") == a.collection_versions("c")


def test_delete_refuses_pointer_reachable():
    s = open_store("mem", chunk_size=CS)
    s.create_collection("c")
    s.create_object("c", 1, "a", b"x" * 20)
    try:
        s.delete_version("c", "a", 1)
    except VersionInUse:
        pass
    else:
        raise AssertionError("deleted a version HEAD still references")


def test_cas_linearizability():
    s = open_store("mem")
    s.create_collection("c")
    targets = [s.clone_collection("c", 1) for _ in range(8)]
    successes = []
    lock = threading.Lock()
    barrier = threading.Barrier(8)

    def worker(target):
        barrier.wait()
        while True:
            cur = s.pointer_get("c", HCT)
            if s.pointer_cas("c", HCT, cur, target):
                with lock:
                    successes.append((cur, target))
                return

    threads = [threading.Thread(target=worker, args=(t,)) for t in targets]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(successes) == 8
    chain = [1]
    for expected, new in successes:
        assert expected == chain[-1]
        chain.append(new)
    assert s.pointer_get("c", HCT) == chain[-1]
    assert sorted(chain[1:]) == sorted(targets)
