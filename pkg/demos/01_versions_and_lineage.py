# coding: utf-8

# # Versions, clones and lineage
#
# An object never changes in place once it has been cloned: cloning freezes
# the source and hands back a writable child. Collections work the same way,
# and a collection version is just a map from object id to object version.

# In[1]:

from vosd import MemStore

store = MemStore(chunk_size=4096)
store.create_collection("photos")
store.create_object("photos", 1, "cat.jpg", b"\x01" * 12288)
store.create_object("photos", 1, "dog.jpg", b"\x02" * 8192)
store.members("photos", 1)


# Snapshot the collection. The new collection version shares every object
# version with its parent until something is written.

# In[2]:

cv2 = store.clone_collection("photos", 1)
print(cv2, store.members("photos", cv2), store.is_frozen("photos", 1))


# Writing through cv2 clones `cat.jpg` on first touch; only the chunk that
# changed gets new storage.

# In[3]:

before = store.stats().chunk_count
store.write_range("photos", cv2, "cat.jpg", 4096, b"\xff" * 100)
print(store.members("photos", cv2))
print("new chunks:", store.stats().chunk_count - before)


# Diff works on chunk granularity and only reports what differs.

# In[4]:

v1 = store.members("photos", 1)["cat.jpg"]
v2 = store.members("photos", cv2)["cat.jpg"]
print(store.diff("photos", "cat.jpg", v1, v2))


# Lineage is a tree per object. Clone the old version again to branch.

# In[5]:

branch = store.clone_version("photos", "cat.jpg", v1)
for vid in store.versions("photos", "cat.jpg"):
    print(vid, "parent", store.parent("photos", "cat.jpg", vid), "children", store.children("photos", "cat.jpg", vid))


# Named pointers move with compare-and-swap. Anything no pointer can reach
# is garbage.

# In[6]:

print(store.pointers("photos"))
store.pointer_cas("photos", "HEAD", 1, cv2)
store.pointer_cas("photos", "HCT", 1, cv2)
store.pointer_cas("photos", "HRC", 1, cv2)
print(store.gc("photos"))
print(store.collection_versions("photos"), store.versions("photos", "cat.jpg"))
