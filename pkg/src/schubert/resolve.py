"""Resolve (title, authors) queries against the store and compute citation labels.

Resolution walks the query's authors in order; the first stored article by
any of them whose lowercased title equals the lowercased query title is the
match.  Its inbound citations are grouped by citing-paper year, counted
within a window of `max_years` complete calendar years after publication,
and mapped to the regression target ln(count + 1).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .errors import MissingYear
from .store import ArticleRecord, CorpusStore

DEFAULT_MAX_YEARS = 3


@dataclass
class ArticleQuery:
    """A title plus candidate author names; one matching author suffices."""

    title: str
    authors: list[str]


@dataclass
class YearGroupedCitations:
    """Citing article ids bucketed by the citing paper's publication year.

    Ids whose article has no year land in `unknown_year`; ids absent from
    the store are dropped and tallied in `dropped`.
    """

    by_year: dict[int, list[str]] = field(default_factory=dict)
    unknown_year: list[str] = field(default_factory=list)
    dropped: int = 0

    def total(self) -> int:
        return sum(len(ids) for ids in self.by_year.values()) + len(self.unknown_year)


@dataclass
class CitationLabel:
    """Windowed citation count and its log score for one article."""

    windowed_count: int
    citation_score: float
    pub_year: int
    max_years: int
    snapshot_year: int


@dataclass
class ResolveDiagnostics:
    """Counters for data oddities encountered while grouping citations."""

    dropped_missing_from_store: int = 0
    citing_without_year: int = 0
    citing_before_publication: int = 0


def compute_year_grouped_citations(
    store: CorpusStore,
    article: ArticleRecord,
    diagnostics: ResolveDiagnostics | None = None,
) -> YearGroupedCitations:
    """Group an article's inbound citation ids by the citing paper's year."""
    grouped = YearGroupedCitations()
    for citing_id in article.in_citations:
        citing = store.lookup_by_id(citing_id)
        if citing is None:
            grouped.dropped += 1
            if diagnostics is not None:
                diagnostics.dropped_missing_from_store += 1
            continue
        if citing.year is None:
            grouped.unknown_year.append(citing_id)
            if diagnostics is not None:
                diagnostics.citing_without_year += 1
            continue
        grouped.by_year.setdefault(citing.year, []).append(citing_id)
        if (
            diagnostics is not None
            and article.year is not None
            and citing.year < article.year
        ):
            diagnostics.citing_before_publication += 1
    for ids in grouped.by_year.values():
        ids.sort()
    grouped.unknown_year.sort()
    return grouped


def find_citations_for_article(
    store: CorpusStore,
    query: ArticleQuery,
    diagnostics: ResolveDiagnostics | None = None,
) -> tuple[str, YearGroupedCitations] | None:
    """Match a (title, authors) query to a stored article and group its citations.

    Candidates are enumerated per author in query order, ascending by
    article_id; the first whose stored title equals the query title
    (both lowercased) wins.  Returns None when nothing matches.
    """
    title_lower = query.title.lower()
    for author in query.authors:
        for article_id in store.lookup_by_author(author):
            if store.lookup_title_lower(article_id) == title_lower:
                article = store.lookup_by_id(article_id)
                return article_id, compute_year_grouped_citations(
                    store, article, diagnostics
                )
    return None


def windowed_citation_count(
    ygc: YearGroupedCitations, pub_year: int, max_years: int
) -> int:
    """Total citations from years up to pub_year + max_years (unknown years excluded)."""
    limit = pub_year + max_years
    return sum(len(ids) for year, ids in ygc.by_year.items() if year <= limit)


def citation_score(count: int) -> float:
    """Regression target: natural log of (citation count + 1)."""
    return math.log1p(count)


def is_eligible(pub_year: int, max_years: int, snapshot_year: int) -> bool:
    """True when the article has `max_years` complete calendar years of
    citation history before the snapshot year."""
    return pub_year + max_years <= snapshot_year - 1


@dataclass
class LabelOutcome:
    """Result of one labeling attempt, with a machine-readable status."""

    status: str  # "ok" | "not_found" | "ineligible" | "missing_year"
    article_id: str | None = None
    label: CitationLabel | None = None


def label_article(
    store: CorpusStore,
    query: ArticleQuery,
    max_years: int,
    snapshot_year: int,
    diagnostics: ResolveDiagnostics | None = None,
) -> LabelOutcome:
    """Resolve, check eligibility, and compute the citation label for a query.

    Raises MissingYear when the resolved article has no publication year.
    Unresolved or ineligible queries yield an outcome with the reason.
    """
    resolved = find_citations_for_article(store, query, diagnostics)
    if resolved is None:
        return LabelOutcome(status="not_found")
    article_id, grouped = resolved
    article = store.lookup_by_id(article_id)
    if article.year is None:
        raise MissingYear(f"article {article_id} has no publication year")
    if not is_eligible(article.year, max_years, snapshot_year):
        return LabelOutcome(status="ineligible", article_id=article_id)
    count = windowed_citation_count(grouped, article.year, max_years)
    label = CitationLabel(
        windowed_count=count,
        citation_score=citation_score(count),
        pub_year=article.year,
        max_years=max_years,
        snapshot_year=snapshot_year,
    )
    return LabelOutcome(status="ok", article_id=article_id, label=label)


def iter_query_file(path):
    """Yield (index, ArticleQuery) rows from a JSON-lines query file."""
    with open(path, encoding="utf-8") as fh:
        index = 0
        for line in fh:
            if not line.strip():
                continue
            obj = json.loads(line)
            yield index, ArticleQuery(
                title=obj["title"], authors=list(obj["authors"])
            )
            index += 1


def label_query_file(
    store: CorpusStore,
    queries_path,
    output_path,
    max_years: int,
    snapshot_year: int,
) -> ResolveDiagnostics:
    """Batch labeling: query JSON-lines in, label JSON-lines out.

    Each output row carries the query index, resolved article id (when any),
    windowed count, score, and a status of ok / not_found / ineligible /
    missing_year.
    """
    diagnostics = ResolveDiagnostics()
    with open(output_path, "w", encoding="utf-8") as out:
        for index, query in iter_query_file(queries_path):
            try:
                outcome = label_article(
                    store, query, max_years, snapshot_year, diagnostics
                )
                row = {
                    "query_index": index,
                    "article_id": outcome.article_id,
                    "count": outcome.label.windowed_count if outcome.label else None,
                    "score": outcome.label.citation_score if outcome.label else None,
                    "status": outcome.status,
                }
            except MissingYear:
                resolved = find_citations_for_article(store, query)
                row = {
                    "query_index": index,
                    "article_id": resolved[0] if resolved else None,
                    "count": None,
                    "score": None,
                    "status": "missing_year",
                }
            out.write(json.dumps(row) + "\n")
    return diagnostics
