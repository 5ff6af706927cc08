#!/usr/bin/env python3
"""Walkthrough: tokenization, overlapping chunks, pooling, and the container file.

Shows how a document becomes a sequence of fixed-size chunk vectors, and how
those vectors round-trip through the binary interchange format.
"""

import tempfile
from pathlib import Path

import numpy as np

from schubert import chunk, mean_pool, pseudo_embed, read_embeddings, tokenize, write_embeddings
from schubert.chunks import ChunkEmbeddings, embed_tokens

# --- 1. tokenize and chunk ---------------------------------------------------
text = " ".join(f"word{i}" for i in range(1000))
tokens = tokenize(text, source_id="demo-doc")
print(f"document has {len(tokens)} tokens")

# Chunks of 512 tokens with a 50-token overlap; the final chunk is shorter.
chunks = chunk(tokens, chunk_size=512, overlap=50)
for c in chunks:
    print(f"  chunk [{c.start_index:4d}, {c.end_index:4d})  len={len(c)}")

# --- 2. pooling ---------------------------------------------------------------
# Token vectors inside a chunk are averaged component-wise into one vector.
token_vectors = np.array([[1.0, 3.0, -2.0], [3.0, 5.0, 2.0]])
print("\nmean_pool of two token vectors:", mean_pool(token_vectors))

# --- 3. deterministic pseudo-embeddings ---------------------------------------
# Hash-seeded vectors in [-1, 1): identical tokens give identical vectors,
# on every platform, with no model involved.
v1 = pseudo_embed(chunks[0], dim=6)
v2 = pseudo_embed(chunks[0], dim=6)
print("\npseudo-embedding of chunk 0:", np.round(v1, 4))
assert np.array_equal(v1, v2)

# --- 4. container round trip ---------------------------------------------------
workdir = Path(tempfile.mkdtemp(prefix="schubert-demo-"))
path = workdir / "demo.schb"
item = embed_tokens(tokens, chunk_size=512, overlap=50, dim=6, label=1.375)
write_embeddings(path, [item])
(loaded,) = read_embeddings(path)
print(f"\nwrote and re-read {path.name}: doc_id={loaded.doc_id!r}, "
      f"shape={loaded.vectors.shape}, label={loaded.label}")
assert np.array_equal(loaded.vectors, item.vectors)
print("round trip is bit-exact")
