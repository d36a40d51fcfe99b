"""Version-creation and version-retrieval benchmark harness.

A `WorkloadPlan` is fully determined by its `WorkloadSpec` (seed included).
Payload bytes are derived on demand from ``numpy.random.SeedSequence``
children feeding PCG64 generators, so even the 100 x 100 x 4 MiB plan costs
only its chunk-index table in memory.

Creation runs three timed phases: F (fill the first revision), then per
round S (``clone_collection``) and M (the round's chunk writes). Retrieval
reads the latest version and uniformly random versions of random objects and
checks every read against a pure replay of the plan.
"""

import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .core import HEAD
from .errors import InvalidSpec, VerificationFailure

KiB = 1024
MiB = 1024 * KiB

_FILL, _PAYLOAD, _INDICES, _QUERIES = 0, 1, 2, 3


@dataclass(frozen=True)
class WorkloadSpec:
    n_objects: int = 10
    n_versions: int = 10
    object_size: int = 256 * KiB
    mods_per_round: int = 4
    mod_size: int = 16 * KiB
    seed: int = 0

    @classmethod
    def desk(cls, seed=0):
        return cls(seed=seed)

    @classmethod
    def full(cls, seed=0):
        return cls(100, 100, 4 * MiB, 64, 16 * KiB, seed)

    def validate(self):
        for name in ("n_objects", "n_versions", "object_size", "mods_per_round", "mod_size"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 1:
                raise InvalidSpec(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be an unsigned 64-bit integer")
        if self.object_size % self.mod_size:
            raise InvalidSpec("object_size must be a multiple of mod_size")
        if self.mods_per_round * self.mod_size > self.object_size:
            raise InvalidSpec("mods_per_round * mod_size exceeds object_size")
        return self

    def describe(self):
        return (
            f"objects={self.n_objects} versions={self.n_versions} object_size={self.object_size} "
            f"mods={self.mods_per_round} mod_size={self.mod_size} seed={self.seed}"
        )


def _rng(seed, *key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def oid_for(index):
    return f"obj{index:03d}"


class WorkloadPlan:
    """Deterministic workload: initial contents plus per-round chunk writes.

    Rounds are numbered 2..n_versions, matching the collection version they
    produce. Chunk indices are drawn uniformly with replacement.
    """

    def __init__(self, spec):
        self.spec = spec.validate()
        slots = spec.object_size // spec.mod_size
        rounds = spec.n_versions - 1
        self.indices = _rng(spec.seed, _INDICES).integers(
            0, slots, size=(rounds, spec.n_objects, spec.mods_per_round), dtype=np.int64
        )

    def __eq__(self, other):
        return isinstance(other, WorkloadPlan) and self.spec == other.spec and np.array_equal(self.indices, other.indices)

    @property
    def oids(self):
        return [oid_for(i) for i in range(self.spec.n_objects)]

    def initial(self, obj):
        return _rng(self.spec.seed, _FILL, obj).bytes(self.spec.object_size)

    def mods(self, round_no, obj):
        """``[(offset, payload), ...]`` for object ``obj`` in round ``round_no``."""
        s = self.spec
        blob = _rng(s.seed, _PAYLOAD, round_no, obj).bytes(s.mods_per_round * s.mod_size)
        idx = self.indices[round_no - 2, obj]
        return [
            (int(i) * s.mod_size, blob[k * s.mod_size:(k + 1) * s.mod_size]) for k, i in enumerate(idx)
        ]

    def expected(self, obj, version):
        """Bytes of object ``obj`` at ``version`` by replaying the plan."""
        if not 1 <= version <= self.spec.n_versions:
            raise InvalidSpec(f"version {version} outside 1..{self.spec.n_versions}")
        buf = bytearray(self.initial(obj))
        for r in range(2, version + 1):
            for off, data in self.mods(r, obj):
                buf[off:off + len(data)] = data
        return bytes(buf)

    def total_mods(self):
        return int(self.indices.size)


def generate(spec):
    return WorkloadPlan(spec)


def _ms(ns):
    # perf_counter_ns can tick coarser than a fast op; never report zero
    return max(ns, 1) / 1e6


@dataclass
class CreationReport:
    backend: str
    spec: WorkloadSpec
    f_ms: float
    s_ms: list = field(default_factory=list)
    m_ms: list = field(default_factory=list)
    warmup: int = 0
    f_stats: dict = field(default_factory=dict)
    s_bytes_copied: list = field(default_factory=list)
    m_bytes_written: list = field(default_factory=list)
    artifact_version: str = __version__

    def _mean(self, xs):
        xs = xs[self.warmup:] or xs
        return statistics.fmean(xs) if xs else 0.0

    @property
    def s_mean(self):
        return self._mean(self.s_ms)

    @property
    def m_mean(self):
        return self._mean(self.m_ms)


@dataclass
class Query:
    kind: str
    oid: str
    vid: int
    ms: float
    nbytes: int


@dataclass
class RetrievalReport:
    backend: str
    spec: WorkloadSpec
    seed: int
    queries: list = field(default_factory=list)
    artifact_version: str = __version__

    def _mean(self, kind):
        xs = [q.ms for q in self.queries if q.kind == kind]
        return statistics.fmean(xs) if xs else 0.0

    @property
    def latest_ms(self):
        return self._mean("latest")

    @property
    def random_ms(self):
        return self._mean("random")


def _delta(before, after):
    return {k: getattr(after, k) - getattr(before, k) for k in vars(after)}


def run_creation(plan, store, cid="bench"):
    spec = plan.spec
    if store.chunk_size != spec.mod_size:
        raise InvalidSpec(f"mod_size {spec.mod_size} != store chunk_size {store.chunk_size}")
    oids = plan.oids
    store.create_collection(cid)
    clock = time.perf_counter_ns

    before = store.stats()
    contents = [plan.initial(o) for o in range(spec.n_objects)]
    t0 = clock()
    for oid, data in zip(oids, contents):
        store.create_object(cid, 1, oid, data)
    f_ms = _ms(clock() - t0)
    report = CreationReport(store.name, spec, f_ms, f_stats=_delta(before, store.stats()))
    del contents

    prev = 1
    for r in range(2, spec.n_versions + 1):
        s0 = store.stats()
        t0 = clock()
        cur = store.clone_collection(cid, prev)
        report.s_ms.append(_ms(clock() - t0))
        s1 = store.stats()
        report.s_bytes_copied.append(s1.bytes_copied_on_snapshot - s0.bytes_copied_on_snapshot)
        store.pointer_cas(cid, HEAD, prev, cur)

        writes = [(oid, plan.mods(r, o)) for o, oid in enumerate(oids)]
        t0 = clock()
        for oid, mods in writes:
            for off, data in mods:
                store.write_range(cid, cur, oid, off, data)
        report.m_ms.append(_ms(clock() - t0))
        report.m_bytes_written.append(store.stats().bytes_written - s1.bytes_written)
        prev = cur
    report.warmup = 1 if len(report.s_ms) > 1 else 0
    return report


def run_retrieval(plan, store, n_queries=100, seed=None, cid="bench", verify=True):
    spec = plan.spec
    seed = spec.seed if seed is None else seed
    rng = _rng(seed, _QUERIES)
    clock = time.perf_counter_ns
    report = RetrievalReport(store.name, spec, seed)
    last = spec.n_versions
    picks = [("latest", int(rng.integers(spec.n_objects)), last) for _ in range(n_queries)]
    picks += [
        ("random", int(rng.integers(spec.n_objects)), int(rng.integers(1, last + 1))) for _ in range(n_queries)
    ]
    for kind, obj, vid in picks:
        oid = oid_for(obj)
        t0 = clock()
        data = store.get_latest(cid, oid) if kind == "latest" else store.get(cid, vid, oid)
        ms = _ms(clock() - t0)
        if verify and data != plan.expected(obj, vid):
            raise VerificationFailure(f"{store.name}: {oid} version {vid} does not match the replayed plan")
        report.queries.append(Query(kind, oid, vid, ms, len(data)))
    return report


# -- rendering ---------------------------------------------------------

TSV_FIELDS = (
    "kind",
    "backend",
    "metric",
    "ms",
    "n_objects",
    "n_versions",
    "object_size",
    "mods_per_round",
    "mod_size",
    "seed",
    "artifact_version",
)


def _rows(reports):
    for rep in reports:
        spec = asdict(rep.spec)
        if isinstance(rep, CreationReport):
            metrics = [("F", rep.f_ms), ("S", rep.s_mean), ("M", rep.m_mean)]
            kind = "creation"
            spec["seed"] = rep.spec.seed
        else:
            metrics = [("latest", rep.latest_ms), ("random", rep.random_ms)]
            kind = "retrieval"
            spec["seed"] = rep.seed
        for metric, ms in metrics:
            yield {"kind": kind, "backend": rep.backend, "metric": metric, "ms": ms, **spec,
                   "artifact_version": rep.artifact_version}


def _fmt(ms):
    return f"{ms:.3f}"


def render(reports, fmt="table"):
    if isinstance(reports, (CreationReport, RetrievalReport)):
        reports = [reports]
    reports = list(reports)
    if fmt == "json":
        return json.dumps([report_to_dict(r) for r in reports], indent=2)
    if fmt == "tsv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, TSV_FIELDS, delimiter="\t", lineterminator="\n")
        w.writeheader()
        for row in _rows(reports):
            w.writerow({**row, "ms": repr(row["ms"])})
        return buf.getvalue()
    if fmt != "table":
        raise ValueError(f"unknown format {fmt!r}")
    creation = [r for r in reports if isinstance(r, CreationReport)]
    retrieval = [r for r in reports if isinstance(r, RetrievalReport)]
    out = [f"# vosd {__version__}"]
    for r in reports:
        seed = r.spec.seed if isinstance(r, CreationReport) else r.seed
        out.append(f"# {r.backend}: {replace(r.spec, seed=seed).describe()}")
    if creation or not retrieval:
        out.append(f"{'Backend':<10}{'Phase':<7}{'Time (ms)':>12}")
        for r in creation:
            for i, (phase, ms) in enumerate((("F", r.f_ms), ("S", r.s_mean), ("M", r.m_mean))):
                out.append(f"{r.backend if i == 0 else '':<10}{phase:<7}{_fmt(ms):>12}")
    if retrieval or not creation:
        if creation:
            out.append("")
        out.append(f"{'Backend':<10}{'Latest (ms)':>13}{'Random (ms)':>13}")
        for r in retrieval:
            out.append(f"{r.backend:<10}{_fmt(r.latest_ms):>13}{_fmt(r.random_ms):>13}")
    return "\n".join(out) + "\n"


def parse_tsv(text):
    rows = []
    for row in csv.DictReader(io.StringIO(text), delimiter="\t"):
        for k in ("n_objects", "n_versions", "object_size", "mods_per_round", "mod_size", "seed"):
            row[k] = int(row[k])
        row["ms"] = float(row["ms"])
        rows.append(row)
    return rows


def report_to_dict(rep):
    d = asdict(rep)
    if isinstance(rep, CreationReport):
        d.update(kind="creation", s_mean=rep.s_mean, m_mean=rep.m_mean)
    else:
        d.update(kind="retrieval", latest_ms=rep.latest_ms, random_ms=rep.random_ms)
    return d


def report_from_dict(d):
    d = dict(d)
    kind = d.pop("kind")
    d["spec"] = WorkloadSpec(**d["spec"])
    if kind == "creation":
        d.pop("s_mean", None)
        d.pop("m_mean", None)
        return CreationReport(**d)
    d.pop("latest_ms", None)
    d.pop("random_ms", None)
    d["queries"] = [Query(**q) for q in d["queries"]]
    return RetrievalReport(**d)


def load_reports(text):
    data = json.loads(text)
    if isinstance(data, dict):
        data = [data]
    return [report_from_dict(d) for d in data]
