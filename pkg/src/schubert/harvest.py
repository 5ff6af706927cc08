"""Extract paper PDF/bib links from saved anthology HTML listings.

Works on page source only; nothing here touches the network.  A venue index
page yields (url, venue, year) tuples, and each venue listing page yields
one PaperLink per source line that references a PDF, skipping lines for
posters, presentations, supplementary material, and notes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from html.parser import HTMLParser

from .errors import ParseFailure

EXCLUDED_MARKERS = ("poster", "presentation", "supplementary", "notes")

_HREF_RE = re.compile(r"""href\s*=\s*["']([^"']+)["']""", re.IGNORECASE)
_VENUE_YEAR_TEXT_RE = re.compile(r"^\s*(.+?)[\s\-]+(\d{4})\s*$")
_VENUE_YEAR_HREF_RE = re.compile(r"([A-Za-z][A-Za-z*]*)-(\d{4})/?$")


@dataclass
class PaperLink:
    """One paper's PDF link (and bib link when present) with venue metadata."""

    pdf_url: str
    bib_url: str | None
    venue: str
    year: int


class _LinkCollector(HTMLParser):
    """Collects (href, anchor text) pairs and counts elements seen."""

    def __init__(self):
        super().__init__()
        self.links: list[tuple[str, str]] = []
        self.elements = 0
        self._href: str | None = None
        self._text_parts: list[str] = []

    def handle_starttag(self, tag, attrs):
        self.elements += 1
        if tag == "a":
            self._href = dict(attrs).get("href")
            self._text_parts = []

    def handle_data(self, data):
        if self._href is not None:
            self._text_parts.append(data)

    def handle_endtag(self, tag):
        if tag == "a" and self._href is not None:
            self.links.append((self._href, "".join(self._text_parts).strip()))
            self._href = None


def extract_venue_links(index_html: str) -> tuple[list[tuple[str, str, int]], int]:
    """Parse venue listing links out of the anthology index page.

    Returns (links, skipped) where each link is (url, venue, year) and
    `skipped` counts anchors whose venue/year could not be parsed.
    Raises ParseFailure when the input contains no HTML elements at all.
    """
    collector = _LinkCollector()
    collector.feed(index_html)
    if collector.elements == 0:
        raise ParseFailure("input does not look like HTML (no elements found)")

    results: list[tuple[str, str, int]] = []
    skipped = 0
    for href, text in collector.links:
        parsed = _parse_venue_year(href, text)
        if parsed is None:
            skipped += 1
            continue
        venue, year = parsed
        results.append((href, venue, year))
    return results, skipped


def _parse_venue_year(href: str, text: str) -> tuple[str, int] | None:
    """Venue and year from anchor text like "ACL 2015", else from the href."""
    match = _VENUE_YEAR_TEXT_RE.match(text)
    if match and 1000 <= int(match.group(2)) <= 3000:
        return match.group(1).strip(), int(match.group(2))
    match = _VENUE_YEAR_HREF_RE.search(href)
    if match and 1000 <= int(match.group(2)) <= 3000:
        return match.group(1).upper(), int(match.group(2))
    return None


def extract_paper_links(
    venue_html: str, venue: str, year: int
) -> tuple[list[PaperLink], int]:
    """One PaperLink per source line holding a PDF reference, in document order.

    Lines containing any excluded marker (case-insensitive substring) are
    ignored.  A bib href on the same line is paired with the PDF; a PDF line
    with no extractable URL is skipped and tallied.  Returns (links, skipped).
    """
    links: list[PaperLink] = []
    skipped = 0
    for line in venue_html.splitlines():
        lowered = line.lower()
        if "pdf" not in lowered:
            continue
        if any(marker in lowered for marker in EXCLUDED_MARKERS):
            continue
        pdf_url = None
        bib_url = None
        for href in _HREF_RE.findall(line):
            href_lower = href.lower()
            if pdf_url is None and href_lower.endswith(".pdf"):
                pdf_url = href
            elif bib_url is None and href_lower.endswith(".bib"):
                bib_url = href
        if pdf_url is None:
            skipped += 1
            continue
        links.append(PaperLink(pdf_url=pdf_url, bib_url=bib_url, venue=venue, year=year))
    return links, skipped


def write_manifest(path, links: list[PaperLink]) -> int:
    """Write paper links as JSON-lines; returns the number of rows."""
    with open(path, "w", encoding="utf-8") as fh:
        for link in links:
            fh.write(
                json.dumps(
                    {
                        "venue": link.venue,
                        "year": link.year,
                        "pdf_url": link.pdf_url,
                        "bib_url": link.bib_url,
                    }
                )
                + "\n"
            )
    return len(links)
