# coding: utf-8

# # Version creation and retrieval benchmark
#
# The desk profile is 10 objects x 10 versions x 256 KiB with 4 random
# 16 KiB chunk writes per object per round. Each round snapshots the
# collection (S) and then applies the writes (M) after one initial fill (F).

# In[1]:

import tempfile

from vosd import open_store
from vosd.bench import WorkloadSpec, generate, render, run_creation, run_retrieval

spec = WorkloadSpec.desk(seed=7)
plan = generate(spec)
print(spec.describe(), "->", plan.total_mods(), "chunk writes")


# Run every backend on the same plan. The counters explain the S column:
# copy-on-write snapshots move no payload, full-copy snapshots move all of it.

# In[2]:

root = tempfile.mkdtemp(prefix="vosd-bench-")
creation, retrieval = [], []
for kind in ("mem", "file", "kv"):
    path = None if kind == "mem" else f"{root}/{kind}"
    with open_store(kind, path, chunk_size=spec.mod_size, sync=False) as store:
        rep = run_creation(plan, store)
        creation.append(rep)
        retrieval.append(run_retrieval(plan, store, n_queries=50))
        print(f"{kind:5s} snapshot bytes copied {sum(rep.s_bytes_copied):>10}  chunks {store.stats().chunk_count}")


# In[3]:

print(render(creation))
print(render(retrieval))


# Every retrieval above was checked against a replay of the plan. The TSV
# form is what you would feed a plotting script.

# In[4]:

print(render(creation, "tsv"))
