"""Retrieval-augmented prompting: chunking, hashing embeddings, top-k search.

Documents chunk with fixed overlap, embed through a deterministic signed
hashing n-gram model (no network, no training), and rank by cosine. The
augment step renders the hits into the context block that prompt building
prepends for the RAG strategy.
"""

from intentnet import VectorStore, ZeroShot, Rag, augment_prompt, build_prompt, search
from intentnet.rag import chunk_document

store = VectorStore()
store.add_document("qos-manual.txt",
                   "To prioritize voice traffic create a class-map VOIP and bind it in a "
                   "policy-map. Priority queues protect call quality under congestion.")
store.add_document("optical-design.md",
                   "Fiber span loss budgets limit reach; add amplifiers every 80 km on "
                   "long-haul optical segments.")
store.add_document("capacity-notes.txt",
                   "Keep peak utilization below 80 percent of total capacity between "
                   "9 AM and 5 PM; size links in 100 Gbps modules.")

for query in ("how do I protect VoIP call quality", "utilization cap during business hours"):
    print(f"query: {query!r}")
    for chunk, score in search(store, query, 2):
        print(f"  {score:.3f}  [{chunk.source}:{chunk.position}] {chunk.text[:60]}...")
    print()

print("augmented context block:")
print(augment_prompt(store, "utilization cap during business hours", 2))

print("\nRAG prompt (system message carries the retrieved context):")
messages = build_prompt(Rag(store=store, top_k=1), "What utilization cap should I enforce?")
for message in messages:
    print(f"  [{message.role}] {message.content[:90]}...")

print("\nchunking a long text:", [len(c) for c in chunk_document("word " * 500, 300, 60)],
      "chars per chunk (60-char overlaps)")
