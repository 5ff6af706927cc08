#!/usr/bin/env python3
"""Walkthrough: extracting paper PDF/bib links from saved anthology pages.

Everything operates on saved HTML text; excluded asset types (posters,
presentations, supplementary material, notes) are filtered out line by line.
"""

from schubert import extract_paper_links, extract_venue_links

INDEX_HTML = """<html><body>
<ul>
  <li><a href="/events/acl-2015/">ACL 2015</a></li>
  <li><a href="/events/emnlp-2016/">EMNLP 2016</a></li>
  <li><a href="/faq/">Frequently asked questions</a></li>
</ul>
</body></html>"""

VENUE_HTML = """<html><body>
<p><a href="/papers/P15-1001.pdf">pdf</a> <a href="/papers/P15-1001.bib">bib</a> A fine paper</p>
<p><a href="/papers/P15-1002.poster.pdf">pdf</a> poster for the fine paper</p>
<p><a href="/papers/P15-1003.pdf">pdf</a> another paper, bib link missing</p>
<p><a href="/papers/P15-1004.pdf">pdf</a> supplementary material archive</p>
</body></html>"""

venues, skipped = extract_venue_links(INDEX_HTML)
print("venue listings found on the index page:")
for url, venue, year in venues:
    print(f"  {venue} {year}  ->  {url}")
print(f"({skipped} link(s) without a parseable venue/year were skipped)\n")

links, skipped = extract_paper_links(VENUE_HTML, venue="ACL", year=2015)
print("paper links extracted from the venue page:")
for link in links:
    bib = link.bib_url or "(no bib)"
    print(f"  {link.pdf_url}  +  {bib}")
print("\nthe poster and supplementary lines were excluded by marker matching")
