import hashlib
import json

import numpy as np
import pytest

from conftest import BACKENDS, KiB, MiB, make_store
from vosd import OracleStore
from vosd.bench import (
    CreationReport,
    RetrievalReport,
    WorkloadSpec,
    generate,
    load_reports,
    parse_tsv,
    render,
    run_creation,
    run_retrieval,
)
from vosd.errors import InvalidSpec, VerificationFailure

TINY = WorkloadSpec(n_objects=3, n_versions=4, object_size=64 * KiB, mods_per_round=2, mod_size=16 * KiB, seed=3)


def test_desk_plan_shape():
    p = generate(WorkloadSpec.desk(7))
    assert p.indices.shape == (9, 10, 4)
    assert p.total_mods() == 360
    assert len(p.initial(0)) == 256 * KiB
    mods = p.mods(2, 0)
    assert len(mods) == 4
    assert all(off % (16 * KiB) == 0 and len(d) == 16 * KiB for off, d in mods)
    assert p.indices.min() >= 0 and p.indices.max() < 16


def test_full_scale_plan_shape():
    spec = WorkloadSpec.full()
    assert (spec.n_objects, spec.n_versions, spec.object_size, spec.mods_per_round, spec.mod_size) == (
        100, 100, 4 * MiB, 64, 16 * KiB)
    p = generate(spec)
    assert p.indices.shape == (99, 100, 64)
    assert p.indices.max() < 256


def test_plan_determinism():
    a, b = generate(WorkloadSpec.desk(7)), generate(WorkloadSpec.desk(7))
    assert a == b
    assert a.initial(4) == b.initial(4) and a.mods(9, 2) == b.mods(9, 2)
    assert generate(WorkloadSpec.desk(8)) != a
    assert a.initial(0) != a.initial(1)


def test_desk_plan_frozen_digest():
    # pinned so a change in the generator cannot slip through unnoticed
    p = generate(WorkloadSpec.desk(7))
    h = hashlib.sha256(p.indices.tobytes())
    h.update(p.initial(0))
    h.update(p.mods(5, 3)[2][1])
    assert h.hexdigest() == "6e702a397e28dde84dcf5fd72e58fe63583f22a23e01457fd94eab55685cb89d"
    assert p.indices[0, 0].tolist() == [6, 10, 12, 7]


@pytest.mark.parametrize("kw", [
    {"n_objects": 0},
    {"n_versions": -1},
    {"object_size": 100},  # not a multiple of mod_size
    {"mods_per_round": 5, "object_size": 64 * KiB},
    {"seed": -1},
    {"seed": 2**64},
    {"mod_size": 1.5},
])
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        generate(WorkloadSpec(**kw))


def test_expected_matches_naive_replay():
    p = generate(TINY)
    for obj in range(TINY.n_objects):
        buf = bytearray(p.initial(obj))
        assert p.expected(obj, 1) == bytes(buf)
        for r in range(2, TINY.n_versions + 1):
            for off, data in p.mods(r, obj):
                buf[off:off + len(data)] = data
            assert p.expected(obj, r) == bytes(buf)
    with pytest.raises(InvalidSpec):
        p.expected(0, 0)


def test_chunk_size_must_match(tmp_path):
    with pytest.raises(InvalidSpec):
        run_creation(generate(TINY), make_store("mem", tmp_path, chunk_size=4 * KiB))


@pytest.mark.parametrize("kind", BACKENDS)
def test_creation_counters_and_replay(kind, tmp_path):
    spec = WorkloadSpec.desk(7)
    plan = generate(spec)
    store = make_store(kind, tmp_path)
    rep = run_creation(plan, store)
    assert len(rep.s_ms) == len(rep.m_ms) == 9
    assert all(x > 0 for x in rep.s_ms + rep.m_ms) and rep.f_ms > 0
    assert rep.warmup == 1
    assert rep.s_mean == pytest.approx(np.mean(rep.s_ms[1:]))
    assert rep.m_mean == pytest.approx(np.mean(rep.m_ms[1:]))
    assert rep.m_bytes_written == [10 * 4 * 16 * KiB] * 9
    if kind == "mem":
        assert sum(rep.s_bytes_copied) == 0
    else:
        assert rep.s_bytes_copied == [10 * 256 * KiB] * 9
        assert sum(rep.s_bytes_copied) == 23592960
    # state equals a replay of the same plan on the reference store
    ref = OracleStore(16 * KiB)
    ref.create_collection("bench")
    for o, oid in enumerate(plan.oids):
        ref.create_object("bench", 1, oid, plan.initial(o))
    for r in range(2, spec.n_versions + 1):
        ref.clone_collection("bench", r - 1)
        for o, oid in enumerate(plan.oids):
            for off, data in plan.mods(r, o):
                ref.write_range("bench", r, oid, off, data)
    for v in range(1, spec.n_versions + 1):
        for oid in plan.oids:
            assert store.get("bench", v, oid) == ref.get("bench", v, oid), (oid, v)
    assert store.get_latest("bench", plan.oids[0]) == ref.get("bench", 10, plan.oids[0])
    store.close()


def test_retrieval_verifies_every_read():
    plan = generate(TINY)
    store = OracleStore(16 * KiB)
    run_creation(plan, store)
    rep = run_retrieval(plan, store, n_queries=30, seed=11)
    assert len(rep.queries) == 60
    assert {q.kind for q in rep.queries} == {"latest", "random"}
    assert all(q.nbytes == TINY.object_size for q in rep.queries)
    assert all(1 <= q.vid <= TINY.n_versions for q in rep.queries)
    assert all(q.vid == TINY.n_versions for q in rep.queries if q.kind == "latest")
    assert rep.latest_ms == pytest.approx(np.mean([q.ms for q in rep.queries if q.kind == "latest"]))
    again = run_retrieval(plan, store, n_queries=30, seed=11)
    assert [(q.oid, q.vid) for q in again.queries] == [(q.oid, q.vid) for q in rep.queries]


def test_retrieval_covers_version_range():
    spec = WorkloadSpec(n_objects=2, n_versions=5, object_size=16 * KiB, mods_per_round=1, mod_size=16 * KiB)
    plan = generate(spec)
    store = OracleStore(16 * KiB)
    run_creation(plan, store)
    vids = {q.vid for q in run_retrieval(plan, store, n_queries=200).queries if q.kind == "random"}
    assert vids == {1, 2, 3, 4, 5}


def test_retrieval_detects_corruption():
    plan = generate(TINY)
    store = OracleStore(16 * KiB)
    run_creation(plan, store)
    for oid in plan.oids:
        store.write_range("bench", TINY.n_versions, oid, 0, b"\xff" * 8)
    with pytest.raises(VerificationFailure):
        run_retrieval(plan, store, n_queries=5)


@pytest.fixture(scope="module")
def reports():
    plan = generate(TINY)
    store = OracleStore(16 * KiB)
    c = run_creation(plan, store)
    return c, run_retrieval(plan, store, n_queries=10, seed=99)


def test_table_structure(reports):
    c, r = reports
    text = render([c, r])
    lines = text.splitlines()
    assert any("objects=3 versions=4" in ln and "seed=3" in ln for ln in lines)
    assert any("seed=99" in ln for ln in lines)
    header = next(i for i, ln in enumerate(lines) if ln.startswith("Backend") and "Phase" in ln)
    assert lines[header].split() == ["Backend", "Phase", "Time", "(ms)"]
    phases = [ln.split()[-2] for ln in lines[header + 1:header + 4]]
    assert phases == ["F", "S", "M"]
    assert lines[header + 1].split()[0] == "oracle"
    rh = next(i for i, ln in enumerate(lines) if "Latest" in ln)
    assert lines[rh].split() == ["Backend", "Latest", "(ms)", "Random", "(ms)"]
    assert lines[rh + 1].split()[0] == "oracle"


def test_tsv_round_trip(reports):
    c, r = reports
    rows = parse_tsv(render([c, r], "tsv"))
    assert [(x["kind"], x["metric"]) for x in rows] == [
        ("creation", "F"), ("creation", "S"), ("creation", "M"), ("retrieval", "latest"), ("retrieval", "random")]
    assert [x["ms"] for x in rows] == [c.f_ms, c.s_mean, c.m_mean, r.latest_ms, r.random_ms]
    assert rows[0]["seed"] == 3 and rows[3]["seed"] == 99
    assert rows[0]["object_size"] == 64 * KiB


def test_json_round_trip(reports):
    c, r = reports
    text = render([c, r], "json")
    back = load_reports(text)
    assert back[0] == c and back[1] == r
    data = json.loads(text)
    assert data[0]["spec"]["seed"] == 3 and data[0]["artifact_version"]


def test_empty_report_list():
    table = render([])
    assert "Phase" in table and "Latest" in table
    assert parse_tsv(render([], "tsv")) == []
    assert render([], "tsv").count("\n") == 1
    assert json.loads(render([], "json")) == []


def test_single_report_accepted(reports):
    c, _ = reports
    assert render(c) == render([c])
    assert isinstance(c, CreationReport) and isinstance(reports[1], RetrievalReport)
