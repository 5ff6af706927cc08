"""Split assembly, subsampling, chunk capping, and corpus statistics.

Split membership is decided by ordering doc ids under a seeded keyed hash
and cutting the ordered list at largest-remainder quotas, so ratios are met
exactly up to rounding and adding documents perturbs existing assignments
minimally.  Subsampling keeps a hash-order prefix of the train split, which
makes smaller fractions subsets of larger ones under the same seed.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chunks import ChunkEmbeddings
from .errors import InvalidInput

SPLIT_NAMES = ("train", "validation", "test")
DEFAULT_RATIOS = (0.90, 0.05, 0.05)


@dataclass
class DatasetManifest:
    """Doc ids per split plus the provenance needed to rebuild the split."""

    splits: dict[str, list[str]]
    ratios: tuple[float, float, float]
    seed: int
    fraction: float = 1.0
    max_chunks: int | None = None
    mode: str = "full_text"   # or "abstract_only"

    def all_ids(self) -> list[str]:
        out: list[str] = []
        for name in SPLIT_NAMES:
            out.extend(self.splits.get(name, []))
        return out


@dataclass
class CorpusStats:
    """Character-count and chunk-count statistics over a set of examples."""

    example_count: int
    avg_chars: float
    max_chars: int
    avg_chunks: float


def _keyed_hash(doc_id: str, seed: int) -> bytes:
    key = int(seed).to_bytes(8, "little", signed=False)
    return hashlib.blake2b(doc_id.encode("utf-8"), key=key, digest_size=16).digest()


def _hash_order(doc_ids: Sequence[str], seed: int) -> list[str]:
    return sorted(doc_ids, key=lambda doc_id: (_keyed_hash(doc_id, seed), doc_id))


def largest_remainder_counts(n: int, ratios: Sequence[float]) -> list[int]:
    """Integer split sizes summing to n, rounded by largest remainder."""
    quotas = [ratio * n for ratio in ratios]
    counts = [math.floor(q) for q in quotas]
    leftover = n - sum(counts)
    remainders = sorted(
        range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i)
    )
    for i in remainders[:leftover]:
        counts[i] += 1
    return counts


def split(
    doc_ids: Sequence[str],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> DatasetManifest:
    """Partition doc ids into train/validation/test by seeded hash order."""
    if len(ratios) != len(SPLIT_NAMES):
        raise InvalidInput(f"expected {len(SPLIT_NAMES)} ratios, got {len(ratios)}")
    if any(r < 0 for r in ratios):
        raise InvalidInput(f"ratios must be non-negative: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise InvalidInput(f"ratios must sum to 1, got {sum(ratios)}")
    if len(set(doc_ids)) != len(doc_ids):
        raise InvalidInput("duplicate doc ids")

    ordered = _hash_order(doc_ids, seed)
    counts = largest_remainder_counts(len(ordered), ratios)
    splits: dict[str, list[str]] = {}
    cursor = 0
    for name, count in zip(SPLIT_NAMES, counts):
        splits[name] = ordered[cursor : cursor + count]
        cursor += count
    return DatasetManifest(splits=splits, ratios=tuple(ratios), seed=seed)


def subsample(manifest: DatasetManifest, fraction: float, seed: int = 0) -> DatasetManifest:
    """Keep ceil(fraction * n) train docs (hash-order prefix); other splits untouched.

    Prefix selection under the same seed makes subsample(m, f1).train a
    subset of subsample(m, f2).train whenever f1 <= f2.
    """
    if not 0.0 < fraction <= 1.0:
        raise InvalidInput(f"fraction must be in (0, 1], got {fraction}")
    train = manifest.splits.get("train", [])
    keep_count = math.ceil(fraction * len(train))
    keep = set(_hash_order(train, seed)[:keep_count])
    splits = dict(manifest.splits)
    splits["train"] = [doc_id for doc_id in train if doc_id in keep]
    return DatasetManifest(
        splits=splits,
        ratios=manifest.ratios,
        seed=manifest.seed,
        fraction=fraction,
        max_chunks=manifest.max_chunks,
        mode=manifest.mode,
    )


def cap_chunks(item: ChunkEmbeddings, max_chunks: int) -> ChunkEmbeddings:
    """Keep only the first min(n, max_chunks) chunk vectors of an item."""
    if max_chunks < 1:
        raise InvalidInput(f"max_chunks must be >= 1, got {max_chunks}")
    if item.n_chunks <= max_chunks:
        return item
    return ChunkEmbeddings(
        doc_id=item.doc_id,
        vectors=item.vectors[:max_chunks].copy(),
        label=item.label,
    )


def corpus_stats(examples: Sequence[tuple[str, int, int]]) -> CorpusStats:
    """Average/max character count and average chunk count over
    (doc_id, char_count, chunk_count) rows."""
    if not examples:
        raise InvalidInput("corpus_stats requires at least one example")
    chars = np.array([chars for _, chars, _ in examples], dtype=np.float64)
    chunks = np.array([n for _, _, n in examples], dtype=np.float64)
    return CorpusStats(
        example_count=len(examples),
        avg_chars=float(chars.mean()),
        max_chars=int(chars.max()),
        avg_chunks=float(chunks.mean()),
    )


def save_manifest(path, manifest: DatasetManifest) -> None:
    payload = {
        "ratios": list(manifest.ratios),
        "seed": manifest.seed,
        "fraction": manifest.fraction,
        "max_chunks": manifest.max_chunks,
        "mode": manifest.mode,
        "splits": manifest.splits,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> DatasetManifest:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return DatasetManifest(
        splits={name: list(ids) for name, ids in payload["splits"].items()},
        ratios=tuple(payload["ratios"]),
        seed=payload["seed"],
        fraction=payload.get("fraction", 1.0),
        max_chunks=payload.get("max_chunks"),
        mode=payload.get("mode", "full_text"),
    )
