"""Indexed article store built from scholarly-corpus JSON-lines dumps.

A dump file holds one JSON object per line.  `build_store` streams records
into an SQLite database with two tables: `articles` keyed by article_id,
and `authors` holding one (article_id, author_name) row per author with an
index on the lowercased name.  Memory use is bounded regardless of dump
size; after a build the store is read-only and safe for concurrent readers.
"""

from __future__ import annotations

import gzip
import io
import json
import os
import sqlite3
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import MalformedLine, StorageFailure

# SQLite application_id marking this store format ("SCHS" big-endian).
STORE_MAGIC = 0x53434853
STORE_VERSION = 1

YEAR_MIN = 1000
YEAR_MAX = 3000

_SCHEMA = """
CREATE TABLE meta (key TEXT PRIMARY KEY, value TEXT NOT NULL);
CREATE TABLE articles (
    article_id  TEXT PRIMARY KEY,
    title       TEXT NOT NULL,
    title_lower TEXT NOT NULL,
    authors     TEXT NOT NULL,
    year        INTEGER,
    in_citations  TEXT NOT NULL,
    out_citations TEXT NOT NULL,
    journal TEXT,
    volume  TEXT,
    pages   TEXT,
    doi     TEXT
);
CREATE TABLE authors (
    article_id  TEXT NOT NULL,
    author_name TEXT NOT NULL
);
CREATE INDEX idx_authors_article ON authors (article_id);
"""


@dataclass
class ArticleRecord:
    """One corpus paper, normalized: authors lowercased, year sanity-checked."""

    article_id: str
    title: str = ""
    authors: list[str] = field(default_factory=list)
    year: int | None = None
    in_citations: list[str] = field(default_factory=list)
    out_citations: list[str] = field(default_factory=list)
    journal: str | None = None
    volume: str | None = None
    pages: str | None = None
    doi: str | None = None


def _parse_year(value) -> int | None:
    """Accept an int or integer-valued string within sanity bounds; else absent."""
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        year = value
    elif isinstance(value, str):
        try:
            year = int(value.strip())
        except ValueError:
            return None
    else:
        return None
    return year if YEAR_MIN <= year <= YEAR_MAX else None


def _parse_authors(value) -> list[str]:
    """Extract lowercased author names from either {"name": ...} objects or strings."""
    names: list[str] = []
    if not isinstance(value, list):
        return names
    for entry in value:
        if isinstance(entry, dict):
            name = entry.get("name")
        else:
            name = entry
        if isinstance(name, str) and name.strip():
            names.append(name.strip().lower())
    return names


def _parse_id_list(value) -> list[str]:
    """Keep non-empty string ids, dropping duplicates in first-seen order."""
    if not isinstance(value, list):
        return []
    seen: set[str] = set()
    out: list[str] = []
    for entry in value:
        if isinstance(entry, str) and entry and entry not in seen:
            seen.add(entry)
            out.append(entry)
    return out


def _parse_text(value) -> str | None:
    if isinstance(value, str) and value.strip():
        return value
    return None


def parse_record(json_line: str) -> ArticleRecord:
    """Parse one dump line into an ArticleRecord.

    Unrecognized fields are ignored.  Raises MalformedLine when the line is
    not a JSON object or its `id` field is missing or empty.
    """
    try:
        obj = json.loads(json_line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(f"expected a JSON object, got {type(obj).__name__}")
    article_id = obj.get("id")
    if not isinstance(article_id, str) or not article_id:
        raise MalformedLine("missing or empty 'id' field")
    title = obj.get("title")
    return ArticleRecord(
        article_id=article_id,
        title=title if isinstance(title, str) else "",
        authors=_parse_authors(obj.get("authors")),
        year=_parse_year(obj.get("year")),
        in_citations=_parse_id_list(obj.get("inCitations")),
        out_citations=_parse_id_list(obj.get("outCitations")),
        journal=_parse_text(obj.get("journalName")),
        volume=_parse_text(obj.get("journalVolume")),
        pages=_parse_text(obj.get("journalPages")),
        doi=_parse_text(obj.get("doi")),
    )


def open_dump(path) -> io.TextIOBase:
    """Open a dump file as UTF-8 text; transparently handles gzip."""
    path = Path(path)
    raw = open(path, "rb")
    if raw.read(2) == b"\x1f\x8b":
        raw.seek(0)
        return io.TextIOWrapper(gzip.GzipFile(fileobj=raw), encoding="utf-8")
    raw.seek(0)
    return io.TextIOWrapper(raw, encoding="utf-8")


def iter_dump_records(path, on_error=None) -> Iterator[ArticleRecord]:
    """Yield parsed records from a dump file, skipping malformed lines.

    `on_error` receives (line_number, exception) for every skipped line.
    """
    with open_dump(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield parse_record(line)
            except MalformedLine as exc:
                if on_error is not None:
                    on_error(lineno, exc)


class CorpusStore:
    """Read access to a built article store."""

    def __init__(self, path):
        self.path = Path(path)
        if not self.path.exists():
            raise StorageFailure(f"store not found: {self.path}")
        try:
            self._conn = sqlite3.connect(f"file:{self.path}?mode=ro", uri=True)
        except sqlite3.Error as exc:
            raise StorageFailure(f"cannot open store {self.path}: {exc}") from exc
        self._check_format()

    def _check_format(self) -> None:
        try:
            (app_id,) = self._conn.execute("PRAGMA application_id").fetchone()
            if app_id != STORE_MAGIC:
                raise StorageFailure(
                    f"{self.path} is not an article store (bad magic 0x{app_id:08x})"
                )
            (version,) = self._conn.execute("PRAGMA user_version").fetchone()
            if version != STORE_VERSION:
                raise StorageFailure(
                    f"incompatible store version {version}, expected {STORE_VERSION}"
                )
            row = self._conn.execute(
                "SELECT value FROM meta WHERE key = 'complete'"
            ).fetchone()
            if row is None or row[0] != "1":
                raise StorageFailure(f"{self.path} holds an incomplete build")
        except sqlite3.Error as exc:
            raise StorageFailure(f"cannot validate store {self.path}: {exc}") from exc

    def close(self) -> None:
        self._conn.close()

    def __enter__(self) -> "CorpusStore":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def lookup_by_id(self, article_id: str) -> ArticleRecord | None:
        """Exact-match retrieval by article_id; None when absent."""
        row = self._conn.execute(
            "SELECT article_id, title, authors, year, in_citations, out_citations,"
            " journal, volume, pages, doi FROM articles WHERE article_id = ?",
            (article_id,),
        ).fetchone()
        if row is None:
            return None
        return ArticleRecord(
            article_id=row[0],
            title=row[1],
            authors=json.loads(row[2]),
            year=row[3],
            in_citations=json.loads(row[4]),
            out_citations=json.loads(row[5]),
            journal=row[6],
            volume=row[7],
            pages=row[8],
            doi=row[9],
        )

    def lookup_by_author(self, name: str) -> list[str]:
        """Ids of all articles with an author matching `name`, case-insensitively.

        Results are ascending by article_id; unknown authors yield [].
        """
        rows = self._conn.execute(
            "SELECT DISTINCT article_id FROM authors WHERE author_name = ?"
            " ORDER BY article_id",
            (name.strip().lower(),),
        ).fetchall()
        return [row[0] for row in rows]

    def lookup_title_lower(self, article_id: str) -> str | None:
        """Lowercased stored title for an id, or None when absent."""
        row = self._conn.execute(
            "SELECT title_lower FROM articles WHERE article_id = ?", (article_id,)
        ).fetchone()
        return row[0] if row is not None else None

    def count_articles(self) -> int:
        (n,) = self._conn.execute("SELECT COUNT(*) FROM articles").fetchone()
        return n

    def count_author_rows(self) -> int:
        (n,) = self._conn.execute("SELECT COUNT(*) FROM authors").fetchone()
        return n

    def iter_article_ids(self) -> Iterator[str]:
        for (article_id,) in self._conn.execute(
            "SELECT article_id FROM articles ORDER BY article_id"
        ):
            yield article_id


def build_store(
    records: Iterable[ArticleRecord], path, batch_size: int = 2000
) -> CorpusStore:
    """Build a store from a record stream; last write wins on duplicate ids.

    The stream is consumed incrementally and committed in batches, so peak
    memory is bounded by `batch_size` regardless of stream length.  On any
    I/O failure the partial store is marked unusable.
    """
    path = Path(path)
    if path.exists():
        path.unlink()
    try:
        conn = sqlite3.connect(path)
        try:
            conn.execute(f"PRAGMA application_id = {STORE_MAGIC}")
            conn.execute(f"PRAGMA user_version = {STORE_VERSION}")
            conn.execute("PRAGMA journal_mode = OFF")
            conn.execute("PRAGMA synchronous = OFF")
            conn.executescript(_SCHEMA)
            conn.execute(
                "INSERT INTO meta (key, value) VALUES ('complete', '0')"
            )

            # Batch buffers keyed by id so a duplicate inside one batch
            # also resolves to the later record (last write wins).
            article_rows: dict[str, tuple] = {}
            author_rows: dict[str, list[tuple]] = {}

            def flush() -> None:
                if not article_rows:
                    return
                # Drop author rows of any earlier version of these articles.
                conn.executemany(
                    "DELETE FROM authors WHERE article_id = ?",
                    [(aid,) for aid in article_rows],
                )
                conn.executemany(
                    "INSERT OR REPLACE INTO articles"
                    " (article_id, title, title_lower, authors, year,"
                    "  in_citations, out_citations, journal, volume, pages, doi)"
                    " VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    article_rows.values(),
                )
                conn.executemany(
                    "INSERT INTO authors (article_id, author_name) VALUES (?, ?)",
                    [row for rows in author_rows.values() for row in rows],
                )
                conn.commit()
                article_rows.clear()
                author_rows.clear()

            for record in records:
                article_rows[record.article_id] = (
                    record.article_id,
                    record.title,
                    record.title.lower(),
                    json.dumps(record.authors),
                    record.year,
                    json.dumps(record.in_citations),
                    json.dumps(record.out_citations),
                    record.journal,
                    record.volume,
                    record.pages,
                    record.doi,
                )
                author_rows[record.article_id] = [
                    (record.article_id, author)
                    for author in dict.fromkeys(record.authors)
                ]
                if len(article_rows) >= batch_size:
                    flush()
            flush()

            # The author-name index is cheaper to build once, after the load.
            conn.execute("CREATE INDEX idx_authors_name ON authors (author_name)")
            conn.execute("UPDATE meta SET value = '1' WHERE key = 'complete'")
            conn.commit()
        finally:
            conn.close()
    except (sqlite3.Error, OSError) as exc:
        raise StorageFailure(f"failed to build store at {path}: {exc}") from exc
    return CorpusStore(path)


def build_store_from_dumps(
    dump_paths: Iterable[os.PathLike | str],
    path,
    on_error=None,
    workers: int = 1,
) -> tuple[CorpusStore, int]:
    """Ingest dump files in order; returns (store, record count).

    With `workers` > 1, line parsing is spread over a thread pool while the
    single writer consumes results in submission order, so the outcome is
    identical to a sequential run.
    """
    count = 0

    def records() -> Iterator[ArticleRecord]:
        nonlocal count
        for dump_path in dump_paths:
            if workers > 1:
                from concurrent.futures import ThreadPoolExecutor

                with open_dump(dump_path) as fh, ThreadPoolExecutor(workers) as pool:
                    for rec in pool.map(_parse_or_none, fh, chunksize=256):
                        if rec is not None:
                            count += 1
                            yield rec
            else:
                for rec in iter_dump_records(dump_path, on_error=on_error):
                    count += 1
                    yield rec

    store = build_store(records(), path)
    return store, count


def _parse_or_none(line: str) -> ArticleRecord | None:
    if not line.strip():
        return None
    try:
        return parse_record(line)
    except MalformedLine:
        return None
