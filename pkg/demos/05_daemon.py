# coding: utf-8

# # Talking to the daemon
#
# The server speaks length-prefixed JSON over TCP. `Remote` mirrors the
# library API, so code written against a store runs unchanged over the wire.

# In[1]:

from vosd import MemStore
from vosd.server import Client, Remote, VosdServer

server = VosdServer(MemStore(), addr=("127.0.0.1", 0)).start()
print("listening on", server.address)


# In[2]:

client = Client(server.address)
remote = Remote(client)
remote.create_collection("logs")
remote.create_object("logs", 1, "today", b"boot ok\n")
remote.write_range("logs", 1, "today", 8, b"disk ok\n")
print(remote.get("logs", 1, "today"))


# Errors come back typed.

# In[3]:

try:
    remote.get("logs", 1, "yesterday")
except Exception as e:
    print(type(e).__name__, "-", e)


# Transactions work across connections too.

# In[4]:

h = remote.tx_begin("logs")
remote.tx_write(h, "today", 0, b"BOOT")
print(remote.tx_commit(h), remote.get("logs", remote.hct_get("logs"), "today"))


# Requests can be pipelined; responses come back in order.

# In[5]:

print(client.pipeline([("ping", {})] * 5))
client.close()
server.shutdown()
