"""Tokenization, overlapping chunking, pooling, and the embedding container format.

Documents are turned into token sequences, split into fixed-size chunks with a
constant overlap between neighbours, and represented as one vector per chunk.
`pseudo_embed` provides a deterministic stand-in for transformer output so the
rest of the pipeline can be exercised without a model.  `write_embeddings` /
`read_embeddings` define the binary interchange file consumed by the trainer.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Sequence

import numpy as np

from .errors import FormatError, InvalidInput

DEFAULT_CHUNK_SIZE = 512
DEFAULT_OVERLAP = 50
DEFAULT_DIM = 768

MAGIC = b"SCHB"
FORMAT_VERSION = 1

_U64 = (1 << 64) - 1

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3

SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
SPLITMIX_MULT1 = 0xBF58476D1CE4E5B9
SPLITMIX_MULT2 = 0x94D049BB133111EB


@dataclass
class TokenSequence:
    """Ordered tokens of one document."""

    tokens: list[str]
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class Chunk:
    """A contiguous token span [start_index, end_index) of a parent sequence."""

    tokens: list[str]
    start_index: int
    end_index: int

    def __len__(self) -> int:
        return self.end_index - self.start_index


@dataclass
class ChunkEmbeddings:
    """One vector per chunk of a document, plus an optional regression label."""

    doc_id: str
    vectors: np.ndarray  # shape (n_chunks, dim), float32
    label: float | None = None

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def n_chunks(self) -> int:
        return int(self.vectors.shape[0])


def tokenize(text: str, source_id: str = "") -> TokenSequence:
    """Lowercase and split on Unicode whitespace; empty text yields no tokens."""
    return TokenSequence(tokens=text.lower().split(), source_id=source_id)


def chunk(
    tokens: TokenSequence | Sequence[str],
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
) -> list[Chunk]:
    """Split tokens into chunks of at most `chunk_size` with a fixed overlap.

    Chunk k spans [k*stride, min(k*stride + chunk_size, n)) where
    stride = chunk_size - overlap.  Emission starts at k = 0 and stops with
    the first chunk whose end reaches n, so an input of exactly `chunk_size`
    tokens yields a single chunk.
    """
    toks = tokens.tokens if isinstance(tokens, TokenSequence) else list(tokens)
    n = len(toks)
    if n == 0:
        raise InvalidInput("cannot chunk an empty token sequence")
    if overlap < 0 or overlap >= chunk_size:
        raise InvalidInput(
            f"overlap must satisfy 0 <= overlap < chunk_size, got overlap={overlap}"
            f" chunk_size={chunk_size}"
        )

    stride = chunk_size - overlap
    chunks: list[Chunk] = []
    start = 0
    while True:
        end = min(start + chunk_size, n)
        chunks.append(Chunk(tokens=toks[start:end], start_index=start, end_index=end))
        if end >= n:
            break
        start += stride
    return chunks


def mean_pool(token_vectors: Sequence[Sequence[float]] | np.ndarray) -> np.ndarray:
    """Component-wise arithmetic mean of a non-empty set of equal-length vectors."""
    if len(token_vectors) == 0:
        raise InvalidInput("mean_pool requires at least one vector")
    lengths = {len(v) for v in token_vectors}
    if len(lengths) != 1:
        raise InvalidInput(f"ragged vector dimensions: {sorted(lengths)}")
    matrix = np.asarray(token_vectors, dtype=np.float64)
    return matrix.mean(axis=0)


def _fnv1a_64(data: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _U64
    return h


def _splitmix64(x: int) -> int:
    z = (x + SPLITMIX_GAMMA) & _U64
    z = ((z ^ (z >> 30)) * SPLITMIX_MULT1) & _U64
    z = ((z ^ (z >> 27)) * SPLITMIX_MULT2) & _U64
    return z ^ (z >> 31)


def pseudo_embed(chunk: Chunk, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Deterministic per-chunk embedding derived from the chunk's token content.

    The seed is the FNV-1a 64-bit hash of the chunk's tokens joined by a
    single newline byte.  Component i maps splitmix64(seed + 1 + i) to
    [-1, 1) via the top 53 bits, then rounds to float32.  Fixed-width
    integer arithmetic makes the output identical on every platform.
    """
    if dim < 1:
        raise InvalidInput(f"dim must be >= 1, got {dim}")
    seed = _fnv1a_64("\n".join(chunk.tokens).encode("utf-8"))
    out = np.empty(dim, dtype=np.float64)
    for i in range(dim):
        u = (_splitmix64((seed + 1 + i) & _U64) >> 11) * 2.0**-53
        out[i] = 2.0 * u - 1.0
    return out.astype(np.float32)


def embed_tokens(
    tokens: TokenSequence,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    overlap: int = DEFAULT_OVERLAP,
    dim: int = DEFAULT_DIM,
    label: float | None = None,
) -> ChunkEmbeddings:
    """Chunk a token sequence and pseudo-embed every chunk."""
    parts = chunk(tokens, chunk_size=chunk_size, overlap=overlap)
    vectors = np.stack([pseudo_embed(c, dim=dim) for c in parts])
    return ChunkEmbeddings(doc_id=tokens.source_id, vectors=vectors, label=label)


# --- container format -------------------------------------------------------
#
# Little-endian layout:
#   header:   magic "SCHB" | u32 version | u64 item count
#   per item: u16 doc_id byte length | doc_id UTF-8 bytes
#             u32 n_chunks | u32 dim | n_chunks*dim float32 (chunk-major)
#             u8 label flag | (float64 label if flag == 1)


def write_embeddings(path, items: Iterable[ChunkEmbeddings]) -> int:
    """Write items to `path`; returns the number of items written."""
    items = list(items)
    for item in items:
        if item.vectors.ndim != 2 or item.n_chunks < 1:
            raise InvalidInput(f"item {item.doc_id!r} has no chunk vectors")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        fh.write(struct.pack("<Q", len(items)))
        for item in items:
            doc_id = item.doc_id.encode("utf-8")
            if len(doc_id) > 0xFFFF:
                raise InvalidInput(f"doc_id too long: {len(doc_id)} bytes")
            fh.write(struct.pack("<H", len(doc_id)))
            fh.write(doc_id)
            fh.write(struct.pack("<II", item.n_chunks, item.dim))
            matrix = np.ascontiguousarray(item.vectors, dtype="<f4")
            fh.write(matrix.tobytes())
            if item.label is None:
                fh.write(struct.pack("<B", 0))
            else:
                fh.write(struct.pack("<B", 1))
                fh.write(struct.pack("<d", float(item.label)))
    return len(items)


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    offset = fh.tell()
    data = fh.read(n)
    if len(data) != n:
        raise FormatError(
            f"truncated file while reading {what}: wanted {n} bytes, got {len(data)}",
            offset=offset,
        )
    return data


def read_embeddings(path) -> list[ChunkEmbeddings]:
    """Read an embedding container; raises FormatError on any corruption."""
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
        (version,) = struct.unpack("<I", _read_exact(fh, 4, "version"))
        if version != FORMAT_VERSION:
            raise FormatError(f"unsupported format version {version}", offset=4)
        (count,) = struct.unpack("<Q", _read_exact(fh, 8, "item count"))

        items: list[ChunkEmbeddings] = []
        for index in range(count):
            (id_len,) = struct.unpack("<H", _read_exact(fh, 2, f"item {index} id length"))
            doc_id = _read_exact(fh, id_len, f"item {index} doc_id").decode("utf-8")
            n_chunks, dim = struct.unpack(
                "<II", _read_exact(fh, 8, f"item {index} shape")
            )
            if n_chunks < 1 or dim < 1:
                raise FormatError(
                    f"item {index} has invalid shape ({n_chunks}, {dim})",
                    offset=fh.tell() - 8,
                )
            raw = _read_exact(fh, 4 * n_chunks * dim, f"item {index} vectors")
            vectors = np.frombuffer(raw, dtype="<f4").reshape(n_chunks, dim).copy()
            (flag,) = struct.unpack("<B", _read_exact(fh, 1, f"item {index} label flag"))
            label: float | None = None
            if flag == 1:
                (label,) = struct.unpack("<d", _read_exact(fh, 8, f"item {index} label"))
            elif flag != 0:
                raise FormatError(
                    f"item {index} has invalid label flag {flag}", offset=fh.tell() - 1
                )
            items.append(ChunkEmbeddings(doc_id=doc_id, vectors=vectors, label=label))

        trailing = fh.read(1)
        if trailing:
            raise FormatError("trailing bytes after last item", offset=fh.tell() - 1)
        return items
