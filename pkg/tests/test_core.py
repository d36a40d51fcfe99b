"""Store interface behaviour, run against every backend."""

import pytest

from conftest import KiB, MiB, seeded
from vosd.core import HCT, HEAD, HRC, ByteRange, chunk_diff
from vosd.errors import (
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


def test_create_collection(store):
    assert store.create_collection("ckpts") == 1
    assert store.pointer_get("ckpts", HEAD) == 1
    assert store.pointer_get("ckpts", HCT) == 1
    assert store.pointer_get("ckpts", HRC) == 1
    assert store.list_objects("ckpts", 1) == []
    with pytest.raises(AlreadyExists):
        store.create_collection("ckpts")
    assert store.list_collections() == ["ckpts"]


@pytest.mark.parametrize("bad", ["", "a/b", "a\0b", ".", "..", "x" * 256, 7, None])
def test_names_validated(store, bad):
    with pytest.raises(InvalidArgument):
        store.create_collection(bad)


def test_create_and_get(store):
    store.create_collection("c")
    data = seeded(4 * MiB, seed=3)
    assert store.create_object("c", 1, "a", data) == 1
    assert store.get("c", 1, "a") == data
    assert store.get_range("c", 1, "a", 32768, 16384) == data[32768:49152]
    with pytest.raises(AlreadyExists):
        store.create_object("c", 1, "a", b"x")
    # 4 MiB / 16 KiB = 256 chunks, one full object of payload
    st = store.stats()
    assert st.chunk_count == 256
    assert st.stored_bytes == 4 * MiB


def test_fresh_stats_are_zero(store):
    st = store.stats()
    assert (st.chunk_count, st.stored_bytes, st.bytes_copied_on_snapshot, st.bytes_written) == (0, 0, 0, 0)


def test_unknown_ids(store):
    with pytest.raises(NoSuchCollection):
        store.get("nope", 1, "a")
    store.create_collection("c")
    with pytest.raises(NoSuchCollectionVersion):
        store.get("c", 5, "a")
    with pytest.raises(NoSuchObject):
        store.get("c", 1, "a")
    store.create_object("c", 1, "a", b"abc")
    with pytest.raises(NoSuchVersion):
        store.read_version("c", "a", 9)
    with pytest.raises(NoSuchPointer):
        store.pointer_get("c", "missing")
    with pytest.raises(InvalidArgument):
        store.get("c", True, "a")


def test_range_bounds(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", b"0123456789")
    assert store.get_range("c", 1, "a", 10, 0) == b""
    with pytest.raises(OutOfBounds):
        store.get_range("c", 1, "a", 5, 6)
    with pytest.raises(OutOfBounds):
        store.write_range("c", 1, "a", 11, b"x")
    store.write_range("c", 1, "a", 10, b"ab")  # extending at the end is allowed
    assert store.get("c", 1, "a") == b"0123456789ab"


def test_write_range_locality(store):
    store.create_collection("c")
    data = seeded(64 * KiB)
    store.create_object("c", 1, "a", data)
    patch = seeded(16 * KiB, seed=9)
    store.write_range("c", 1, "a", 16384, patch)
    got = store.get("c", 1, "a")
    assert got[16384:32768] == patch
    assert got[:16384] == data[:16384] and got[32768:] == data[32768:]


def test_clone_and_freeze(store):
    store.create_collection("c")
    data = seeded(64 * KiB)
    store.create_object("c", 1, "a", data)
    v2 = store.clone_object("c", 1, "a")
    assert v2 == 2
    assert store.members("c", 1) == {"a": 2}  # writable cv follows the clone
    assert store.read_version("c", "a", 2) == data
    assert store.parent("c", "a", 2) == 1
    assert store.children("c", "a", 1) == {2}
    assert store.parent("c", "a", 1) is None
    with pytest.raises(FrozenVersion):
        store.write_version("c", "a", 1, 0, b"x")
    store.write_range("c", 1, "a", 0, b"new")
    assert store.read_version("c", "a", 1) == data


def test_two_clones_are_isolated(store):
    store.create_collection("c")
    data = seeded(48 * KiB)
    store.create_object("c", 1, "a", data)
    v2 = store.clone_version("c", "a", 1)
    v3 = store.clone_version("c", "a", 1)
    assert store.children("c", "a", 1) == {v2, v3}
    store.write_version("c", "a", v2, 100, b"only-in-v2")
    assert store.read_version("c", "a", v3) == data
    assert store.read_version("c", "a", v2)[100:110] == b"only-in-v2"


def test_clone_collection(store):
    store.create_collection("c")
    objs = {f"o{i}": seeded(20 * KiB, seed=i) for i in range(5)}
    for oid, data in objs.items():
        store.create_object("c", 1, oid, data)
    cv2 = store.clone_collection("c", 1)
    assert cv2 == 2
    assert store.is_frozen("c", 1) and not store.is_frozen("c", 2)
    assert store.collection_parent("c", 2) == 1
    assert store.collection_children("c", 1) == {2}
    for oid, data in objs.items():
        assert store.get("c", 2, oid) == data
        assert store.members("c", 2)[oid] == 2
    with pytest.raises(FrozenVersion):
        store.set("c", 1, "o0", b"x")
    with pytest.raises(FrozenVersion):
        store.create_object("c", 1, "new", b"x")
    store.set("c", 2, "o0", b"replaced")
    assert store.get("c", 1, "o0") == objs["o0"]


def test_diff_examples(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", seeded(64 * KiB))
    assert store.diff("c", "a", 1, 1) == []
    store.clone_object("c", 1, "a")
    store.write_range("c", 1, "a", 32768, seeded(16 * KiB, seed=2))
    assert store.diff("c", "a", 1, 2) == [ByteRange(32768, 16384)]
    assert store.diff("c", "a", 2, 1) == [ByteRange(32768, 16384)]


def test_diff_tail_and_coalescing(store):
    store.create_collection("c")
    base = seeded(40 * KiB)
    store.create_object("c", 1, "a", base)
    store.clone_object("c", 1, "a")
    store.write_range("c", 1, "a", 0, b"\xff" * (32 * KiB))  # chunks 0 and 1
    store.write_range("c", 1, "a", len(base), b"tail")
    # chunk 2 grew, so it differs; everything coalesces up to the new end
    assert store.diff("c", "a", 1, 2) == [ByteRange(0, 40964)]
    store.clone_object("c", 1, "a")
    store.write_range("c", 1, "a", 0, base[:16384])
    assert store.diff("c", "a", 2, 3) == [ByteRange(0, 16384)]


def test_diff_identical_rewrite_is_empty(store):
    store.create_collection("c")
    data = seeded(32 * KiB)
    store.create_object("c", 1, "a", data)
    store.clone_object("c", 1, "a")
    store.write_range("c", 1, "a", 0, data[:16384])  # same bytes, new chunk
    assert store.diff("c", "a", 1, 2) == []


def test_lineage_chain(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", b"v1")
    cv = 1
    for _ in range(2):
        cv = store.clone_collection("c", cv)
    assert store.parent("c", "a", 3) == 2
    assert store.children("c", "a", 1) == {2}
    assert store.versions("c", "a") == [1, 2, 3]


def test_pointer_cas(store):
    store.create_collection("c")
    cv2 = store.clone_collection("c", 1)
    assert store.pointer_cas("c", HCT, 1, cv2) is True
    assert store.pointer_cas("c", HCT, 1, 1) is False
    assert store.pointer_get("c", HCT) == cv2
    assert store.pointer_cas("c", "mine", None, 1) is True
    assert store.pointer_cas("c", "mine", None, 1) is False
    with pytest.raises(DanglingTarget):
        store.pointer_cas("c", HCT, cv2, 42)
    with pytest.raises(NoSuchCollection):
        store.pointer_cas("zz", HCT, None, 1)


def test_latest_resolves_through_head(store):
    store.create_collection("c")
    store.set_latest("c", "a", b"one")
    assert store.get_latest("c", "a") == b"one"
    store.set_latest("c", "a", b"two")
    assert store.get_latest("c", "a") == b"two"
    cv2 = store.clone_collection("c", 1)
    store.pointer_cas("c", HEAD, 1, cv2)
    store.set_latest("c", "a", b"three")
    assert store.get("c", 1, "a") == b"two"
    assert store.get_latest("c", "a") == b"three"


def test_delete_version(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", seeded(32 * KiB))
    before = store.stats().stored_bytes
    with pytest.raises(VersionInUse):
        store.delete_version("c", "a", 1)  # HEAD's cv references it
    v2 = store.clone_version("c", "a", 1)
    with pytest.raises(VersionInUse):
        store.delete_version("c", "a", 1)  # has a child
    store.delete_version("c", "a", v2)
    assert store.versions("c", "a") == [1]
    assert store.children("c", "a", 1) == set()
    assert store.stats().stored_bytes == before


def test_delete_only_version_frees_everything(store):
    store.create_collection("c")
    cv2 = store.clone_collection("c", 1)
    store.create_object("c", cv2, "a", seeded(64 * KiB))
    assert store.stats().stored_bytes == 64 * KiB
    store.delete_version("c", "a", 1)  # cv2 is not rooted
    assert store.stats().stored_bytes == 0
    assert store.members("c", cv2) == {}


def test_gc_linear_chain(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", seeded(32 * KiB))
    cv = 1
    for i in range(4):
        nxt = store.clone_collection("c", cv)
        store.write_range("c", nxt, "a", 0, seeded(16 * KiB, seed=10 + i))
        cv = nxt
    for name in (HEAD, HCT, HRC):
        store.pointer_cas("c", name, 1, cv)
    rep = store.gc("c")
    assert rep.collection_versions_removed == 4
    assert rep.versions_removed == 4
    assert store.collection_versions("c") == [cv]
    assert store.collection_parent("c", cv) is None
    assert store.versions("c", "a") == [5]
    assert store.parent("c", "a", 5) is None
    again = store.gc("c")
    assert (again.versions_removed, again.collection_versions_removed, again.bytes_freed) == (0, 0, 0)


def test_gc_respects_pins_and_extra_roots(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", b"x")
    cv2 = store.clone_collection("c", 1)
    cv3 = store.clone_collection("c", cv2)
    for name in (HEAD, HCT, HRC):
        store.pointer_cas("c", name, 1, cv3)
    store.pin("c", 1)
    rep = store.gc("c", extra_roots=[cv2])
    assert rep.collection_versions_removed == 0
    store.unpin("c", 1)
    assert store.gc("c").collection_versions_removed == 2


def test_snapshot_pins_both(store):
    store.create_collection("c")
    src, new = store.snapshot("c", HCT, pin=True)
    assert (src, new) == (1, 2)
    assert {1, 2} <= store.roots("c")
    store.unpin("c", 1)
    store.unpin("c", 2)
    assert store.roots("c") == {1}


def test_bind_member_and_reparent(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", b"one")
    cv2 = store.clone_collection("c", 1)
    store.set("c", cv2, "a", b"two")
    cv3 = store.clone_collection("c", cv2)
    store.bind_member("c", cv3, "a", 1)
    assert store.get("c", cv3, "a") == b"one"
    with pytest.raises(FrozenVersion):
        store.bind_member("c", cv2, "a", 1)
    store.set_collection_parent("c", cv3, 1)
    assert store.collection_parent("c", cv3) == 1
    with pytest.raises(InvalidArgument):
        store.set_collection_parent("c", 1, cv3)  # would be a cycle


@pytest.mark.parametrize(
    "len_a,len_b,diff_chunks,want",
    [
        (0, 0, set(), []),
        (10, 0, set(), [(0, 10)]),
        (8, 8, {0, 1}, [(0, 4), (4, 4)]),
        (8, 8, {1}, [(4, 4)]),
        (12, 12, {0, 2}, [(0, 4), (8, 4)]),
        (12, 14, {1}, [(4, 4), (12, 2)]),
        (12, 14, {2}, [(8, 6)]),
    ],
)
def test_chunk_diff_helper(len_a, len_b, diff_chunks, want):
    got = chunk_diff(4, len_a, len_b, lambda i: i not in diff_chunks)
    # adjacent ranges coalesce
    merged = []
    for off, n in want:
        if merged and merged[-1][0] + merged[-1][1] == off:
            merged[-1] = (merged[-1][0], merged[-1][1] + n)
        else:
            merged.append((off, n))
    assert [(r.offset, r.length) for r in got] == merged
