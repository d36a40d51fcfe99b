# coding: utf-8

# # Optimistic transactions and read-atomic checkpoints
#
# Every transaction works on its own writable snapshot of the highest
# committed collection version (HCT). Commit validates the write set against
# whatever committed in the meantime.

# In[1]:

from vosd import MemStore, TxnLayer

store = MemStore(chunk_size=64)
store.create_collection("bank")
store.create_object("bank", 1, "alice", b"100")
store.create_object("bank", 1, "bob", b"050")
tx = TxnLayer(store)


# Two transfers touch alice at the same time. The first to commit wins.

# In[2]:

t1, t2 = tx.tx_begin("bank"), tx.tx_begin("bank")
tx.tx_set(t1, "alice", b"090")
tx.tx_set(t2, "alice", b"080")
print(tx.tx_commit(t1))
print(tx.tx_commit(t2))


# Disjoint writers both commit; the second is rebased on top of the first.

# In[3]:

t3, t4 = tx.tx_begin("bank"), tx.tx_begin("bank")
tx.tx_set(t3, "alice", b"085")
tx.tx_set(t4, "bob", b"055")
print(tx.tx_commit(t3), tx.tx_commit(t4))
head = tx.hct_get("bank")
print({o: store.get("bank", head, o) for o in ("alice", "bob")})


# Checkpoints are for one bulk writer and many readers. Readers resolve the
# highest readable checkpoint (HRC), so they see a checkpoint whole or not
# at all. The two layers use separate pointers, so give them their own
# collection.

# In[4]:

store.create_collection("ledger")
store.create_object("ledger", 1, "alice", b"100")
store.create_object("ledger", 1, "bob", b"050")
h = tx.ckpt_begin("ledger")
tx.ckpt_put(h, "alice", b"000")
print("mid-checkpoint reader:", tx.read_atomic_snapshot("ledger"))
tx.ckpt_put(h, "bob", b"150")
tx.ckpt_commit(h)
print("after commit:", tx.read_atomic_snapshot("ledger"))


# Aborted snapshots are garbage once nothing pins them.

# In[5]:

print(tx.txn_gc("bank"))
print(tx.txn_gc("ledger"))
