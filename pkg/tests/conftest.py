import numpy as np
import pytest

from vosd import open_store

BACKENDS = ("mem", "oracle", "file", "kv")
KiB = 1 << 10
MiB = 1 << 20


def make_store(kind, tmp_path, chunk_size=16 * KiB, sync=False):
    if kind in ("mem", "oracle"):
        return open_store(kind, chunk_size=chunk_size)
    return open_store(kind, str(tmp_path / kind), chunk_size=chunk_size, sync=sync)


def seeded(n, seed=0):
    return np.random.default_rng(seed).bytes(n)


@pytest.fixture(params=BACKENDS)
def store(request, tmp_path):
    s = make_store(request.param, tmp_path)
    yield s
    s.close()


@pytest.fixture
def backend_factory(tmp_path):
    opened = []

    def factory(kind, chunk_size=16 * KiB, sub=None):
        base = tmp_path / sub if sub else tmp_path
        s = make_store(kind, base, chunk_size)
        opened.append(s)
        return s

    yield factory
    for s in opened:
        s.close()
