"""Immutable indexed corpus: redirects, inverted link index, pageviews, kinds.

Store construction happens once; every query afterwards is read-only, so a
built store may be shared freely between threads.
"""
from __future__ import annotations

import json
import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping
from urllib.parse import unquote

from .titles import canonicalize_title
from .wikitext import ParsedPage, RawPage, parse_wikitext

__all__ = [
    "ENTITY_KINDS",
    "CorpusStore",
    "PageViewRecord",
    "PageviewTally",
    "RedirectCycleError",
    "aggregate_pageviews",
    "build_store",
    "canonicalize_title",
    "load_type_map",
    "mention_count",
    "parse_pages",
    "read_pageview_file",
    "resolve_redirect",
]

log = logging.getLogger(__name__)

ENTITY_KINDS = ("University", "Person", "Journal", "Other")
MAX_REDIRECT_DEPTH = 16
STORE_FORMAT = "wikirank-store/1"


class RedirectCycleError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusStore:
    pages: Mapping[str, ParsedPage] = field(default_factory=dict)
    redirects: Mapping[str, str] = field(default_factory=dict)
    in_links: Mapping[str, frozenset] = field(default_factory=dict)
    views: Mapping[str, int] = field(default_factory=dict)
    kinds: Mapping[str, str] = field(default_factory=dict)

    def kind(self, title: str) -> str:
        return self.kinds.get(title, "Other")

    def titles_of_kind(self, kind: str) -> list[str]:
        return sorted(
            t for t, k in self.kinds.items()
            if k == kind and t in self.pages and not self.pages[t].is_redirect
        )

    def articles(self) -> Iterator[ParsedPage]:
        """Namespace-0 non-redirect pages in title order."""
        for title in sorted(self.pages):
            page = self.pages[title]
            if page.namespace == 0 and not page.is_redirect:
                yield page

    def with_views(self, views: Mapping[str, int]) -> "CorpusStore":
        return replace(self, views=dict(views))

    # persistence: one JSON document, keys sorted so reruns are byte-identical

    def to_json(self) -> str:
        doc = {
            "format": STORE_FORMAT,
            "pages": [self.pages[t].to_dict() for t in sorted(self.pages)],
            "redirects": dict(sorted(self.redirects.items())),
            "in_links": {t: sorted(v) for t, v in sorted(self.in_links.items())},
            "views": dict(sorted(self.views.items())),
            "kinds": dict(sorted(self.kinds.items())),
        }
        return json.dumps(doc, sort_keys=True, ensure_ascii=False, indent=0) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CorpusStore":
        doc = json.loads(text)
        if doc.get("format") != STORE_FORMAT:
            raise ValueError(f"not a store file (format={doc.get('format')!r})")
        pages = {d["title"]: ParsedPage.from_dict(d) for d in doc["pages"]}
        return cls(
            pages=pages,
            redirects=dict(doc["redirects"]),
            in_links={t: frozenset(v) for t, v in doc["in_links"].items()},
            views={t: int(v) for t, v in doc["views"].items()},
            kinds=dict(doc["kinds"]),
        )

    def save(self, path: str | os.PathLike) -> None:
        write_atomic(path, self.to_json())

    @classmethod
    def load(cls, path: str | os.PathLike) -> "CorpusStore":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(f".{path.name}.tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


def resolve_redirect(store: CorpusStore, title: str) -> str:
    """Follow redirects from ``title`` to the first non-redirect title.

    A chain ending on a title that has no page returns that dangling title.
    """
    seen = [title]
    current = title
    while current in store.redirects:
        current = store.redirects[current]
        if current in seen or len(seen) > MAX_REDIRECT_DEPTH:
            raise RedirectCycleError(f"redirect cycle at {title}")
        seen.append(current)
    if current != title and current not in store.pages:
        log.warning("%s: redirect target %r does not exist", title, current)
    return current


def _resolve_quiet(redirects: Mapping[str, str], title: str) -> str | None:
    current = title
    for _ in range(MAX_REDIRECT_DEPTH + 1):
        nxt = redirects.get(current)
        if nxt is None:
            return current
        current = nxt
    return None


def parse_pages(raw_pages: Iterable[RawPage]) -> Iterator[ParsedPage]:
    """Canonicalize titles and parse each raw page."""
    for raw in raw_pages:
        try:
            title = canonicalize_title(raw.title)
        except ValueError:
            log.warning("%r: empty title after normalization, skipped", raw.title)
            continue
        yield parse_wikitext(title, raw.text, raw.namespace)


def load_type_map(path: str | os.PathLike) -> dict[str, str]:
    """Read ``title<TAB>kind`` lines; unknown kinds map to Other."""
    kinds = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            title, _, kind = line.partition("\t")
            kind = kind.strip()
            if kind not in ENTITY_KINDS:
                log.warning("type map line %d: unknown kind %r, using Other", lineno, kind)
                kind = "Other"
            try:
                kinds[canonicalize_title(title)] = kind
            except ValueError:
                log.warning("type map line %d: empty title", lineno)
    return kinds


def build_store(pages: Iterable[ParsedPage], type_map: Mapping[str, str] | None = None) -> CorpusStore:
    """Index parsed pages.

    ``in_links[e]`` holds every non-redirect page with at least one link whose
    redirect-resolved target is ``e``.
    """
    by_title: dict[str, ParsedPage] = {}
    for page in pages:
        if page.title in by_title:
            log.warning("%s: duplicate title, later page replaces earlier", page.title)
        by_title[page.title] = page

    redirects = {
        t: p.redirect_target for t, p in by_title.items() if p.is_redirect
    }

    in_links: dict[str, set] = {}
    for title in sorted(by_title):
        page = by_title[title]
        if page.is_redirect:
            continue
        for target in page.outgoing_links:
            resolved = _resolve_quiet(redirects, target)
            if resolved is None:
                log.warning("%s: link target %r sits on a redirect cycle", title, target)
                continue
            if resolved not in by_title:
                log.debug("%s: dangling link target %r", title, resolved)
            in_links.setdefault(resolved, set()).add(title)

    kinds = {}
    for title, kind in (type_map or {}).items():
        resolved = _resolve_quiet(redirects, title)
        kinds[title] = kind
        if resolved is not None and resolved != title:
            kinds.setdefault(resolved, kind)

    return CorpusStore(
        pages=by_title,
        redirects=redirects,
        in_links={t: frozenset(v) for t, v in in_links.items()},
        views={},
        kinds=kinds,
    )


# --------------------------------------------------------------------------
# pageviews


@dataclass(frozen=True)
class PageViewRecord:
    project: str
    title_urlencoded: str
    count: int
    source_file: str = ""

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("view count must be nonnegative")


@dataclass
class PageviewTally:
    views: dict = field(default_factory=dict)
    accepted: int = 0
    accepted_views: int = 0
    skipped_unknown: int = 0
    skipped_project: int = 0
    skipped_period: int = 0
    malformed: int = 0


_DATE_IN_NAME = re.compile(r"(\d{8})")


def period_from_name(name: str) -> str | None:
    m = _DATE_IN_NAME.search(os.path.basename(name))
    return m.group(1) if m else None


def date_window(start: str | None, end: str | None) -> Callable[[PageViewRecord], bool]:
    """Keep records whose source file name carries a YYYYMMDD date in [start, end].

    Files without a date in their name are always kept.
    """
    def keep(rec: PageViewRecord) -> bool:
        day = period_from_name(rec.source_file)
        if day is None:
            return True
        return (start is None or day >= start) and (end is None or day <= end)
    return keep


def read_pageview_file(path: str | os.PathLike, tally: PageviewTally | None = None) -> Iterator[PageViewRecord]:
    """Parse ``<project> <urlencoded-title> <count> <bytes>`` lines.

    Malformed lines are counted on ``tally`` and skipped.
    """
    source = os.fspath(path)
    with open(path, encoding="utf-8", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            fields = line.split()
            if not fields:
                continue
            if len(fields) < 3 or not fields[2].isdigit():
                log.warning("%s:%d: malformed pageview line", source, lineno)
                if tally is not None:
                    tally.malformed += 1
                continue
            yield PageViewRecord(fields[0], fields[1], int(fields[2]), source)


def aggregate_pageviews(
    store: CorpusStore,
    records: Iterable[PageViewRecord],
    period_filter: Callable[[PageViewRecord], bool] | None = None,
    project: str = "en",
    tally: PageviewTally | None = None,
) -> PageviewTally:
    """Fold view counts onto redirect-resolved titles.

    The returned tally's ``views`` starts from ``store.views``; apply it with
    ``store.with_views(tally.views)``.
    """
    tally = tally if tally is not None else PageviewTally()
    if not tally.views:
        tally.views = dict(store.views)
    views = tally.views
    for rec in records:
        if rec.project != project:
            tally.skipped_project += 1
            continue
        if period_filter is not None and not period_filter(rec):
            tally.skipped_period += 1
            continue
        try:
            title = canonicalize_title(unquote(rec.title_urlencoded))
            resolved = _resolve_quiet(store.redirects, title)
        except ValueError:
            tally.malformed += 1
            continue
        page = store.pages.get(resolved) if resolved is not None else None
        if page is None or page.is_redirect:
            tally.skipped_unknown += 1
            continue
        views[resolved] = views.get(resolved, 0) + rec.count
        tally.accepted += 1
        tally.accepted_views += rec.count
    return tally


# --------------------------------------------------------------------------
# mentions


def _is_word_char(ch: str) -> bool:
    return ch.isalnum()


def contains_term(text: str, term: str) -> bool:
    """Case-sensitive substring test guarded by non-alphanumeric boundaries."""
    start = text.find(term)
    n = len(term)
    while start != -1:
        before = text[start - 1] if start > 0 else ""
        after = text[start + n] if start + n < len(text) else ""
        if not (before and _is_word_char(before)) and not (after and _is_word_char(after)):
            return True
        start = text.find(term, start + 1)
    return False


def mention_count(store: CorpusStore, term: str, own_title: str | None = None) -> int:
    """Number of distinct articles whose plain text mentions ``term``.

    The page titled ``own_title`` (default: ``term`` itself) is excluded.
    """
    if not term:
        raise ValueError("term must be non-empty")
    own = own_title if own_title is not None else term
    return sum(
        1 for page in store.articles()
        if page.title != own and contains_term(page.plain_text, term)
    )
