#!/usr/bin/env python3
"""Walkthrough: dump ingestion, query resolution, and citation-score labels.

Builds a toy corpus dump, ingests it into an indexed store, resolves a
(title, authors) query, and computes the year-windowed log citation score.
"""

import json
import math
import tempfile
from pathlib import Path

from schubert import ArticleQuery, CorpusStore, label_article
from schubert.store import build_store_from_dumps

workdir = Path(tempfile.mkdtemp(prefix="schubert-demo-"))
print(f"working in {workdir}\n")

# --- 1. a small dump: one cited paper and four citing papers ----------------
# Dump files hold one JSON object per line; only the recognized fields matter.
entries = [
    {
        "id": "paper-main",
        "title": "A Method for Measuring Interesting Quantities",
        "authors": [{"name": "Grace Hopper"}, {"name": "Alan Kay"}],
        "year": 2015,
        "inCitations": ["cite-a", "cite-b", "cite-c", "cite-d"],
        "outCitations": [],
    },
    {"id": "cite-a", "title": "early reuse", "authors": [], "year": 2016,
     "inCitations": [], "outCitations": ["paper-main"]},
    {"id": "cite-b", "title": "replication", "authors": [], "year": 2017,
     "inCitations": [], "outCitations": ["paper-main"]},
    {"id": "cite-c", "title": "late survey", "authors": [], "year": 2022,
     "inCitations": [], "outCitations": ["paper-main"]},
    {"id": "cite-d", "title": "undated note", "authors": [], "year": "",
     "inCitations": [], "outCitations": ["paper-main"]},
]
dump = workdir / "dump.jsonl"
dump.write_text("".join(json.dumps(e) + "\n" for e in entries))
print(f"wrote {len(entries)} records to {dump.name}")

# --- 2. ingest into the two-table indexed store ------------------------------
store_path = workdir / "corpus.db"
store, count = build_store_from_dumps([dump], store_path)
print(f"ingested {count} records; author lookup is case-insensitive:")
print("  lookup_by_author('GRACE HOPPER') ->", store.lookup_by_author("GRACE HOPPER"))

# --- 3. resolve a query and label it ------------------------------------------
# One matching author suffices, so the unknown first author is harmless.
query = ArticleQuery(
    title="a method for measuring interesting quantities",
    authors=["nobody in the corpus", "grace hopper"],
)
outcome = label_article(store, query, max_years=3, snapshot_year=2020)
print(f"\nquery resolved to {outcome.article_id!r}, status={outcome.status}")

label = outcome.label
print(f"publication year {label.pub_year}, window {label.max_years} years")
print(f"citations inside the window: {label.windowed_count}")
print("  (2016 and 2017 count; 2022 is outside; the undated citer is excluded)")
print(f"citation score = ln({label.windowed_count} + 1) = {label.citation_score:.6f}")
assert math.isclose(label.citation_score, math.log(3))

# A paper published too recently cannot have a complete citation window.
young = label_article(
    store,
    ArticleQuery(title="early reuse", authors=["grace hopper"]),
    max_years=3,
    snapshot_year=2020,
)
print(f"\na paper with no matching author resolves to status={young.status}")
store.close()
