# coding: utf-8

# # Same API, four backends
#
# `mem` shares chunks between versions. `oracle`, `file` and `kv` keep a full
# copy of every version, which is what makes their snapshots expensive. The
# durable ones survive a restart and a crash.

# In[1]:

import os
import tempfile

from vosd import open_store

root = tempfile.mkdtemp(prefix="vosd-demo-")

def build(store):
    store.create_collection("c")
    store.create_object("c", 1, "a", os.urandom(64 * 1024))
    cv = store.clone_collection("c", 1)
    store.write_range("c", cv, "a", 0, b"changed")
    return store.stats()

for kind in ("mem", "oracle", "file", "kv"):
    path = None if kind in ("mem", "oracle") else os.path.join(root, kind)
    with open_store(kind, path, chunk_size=16 * 1024, sync=False) as s:
        print(f"{kind:7s}", build(s))


# The file backend keeps one payload file per object version and a JSON
# manifest per collection.

# In[2]:

for dirpath, _, files in sorted(os.walk(os.path.join(root, "file"))):
    for f in sorted(files):
        p = os.path.join(dirpath, f)
        print(os.path.relpath(p, root), os.path.getsize(p))


# Reopen and read back.

# In[3]:

with open_store("file", os.path.join(root, "file")) as s:
    print(s.chunk_size, s.get("c", 2, "a")[:7])


# The kv backend is a single append-only log. Chop bytes off the end, as a
# crash halfway through an append would, and the store comes back at the last
# complete batch.

# In[4]:

log = os.path.join(root, "kv", "vosd.log")
size = os.path.getsize(log)
with open(log, "r+b") as f:
    f.truncate(size - 10)
with open_store("kv", os.path.join(root, "kv")) as s:
    print("recovered:", s.kv.recovery)
    print("collection versions:", s.collection_versions("c"))
    print("cv2 reads", s.get("c", 2, "a")[:7], "- the last write was the torn batch")
