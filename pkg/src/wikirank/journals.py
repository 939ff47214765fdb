"""Journal ranking from citation templates.

Each journal gets three measures: citations (template instances naming it),
citers (distinct citing pages) and whether it has its own page. Raw names
are folded onto canonical ones by a fixed normalization pipeline followed
by an alias table.
"""
from __future__ import annotations

import csv
import logging
import os
import re
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Mapping

import numpy as np

from . import stats
from .corpus import CorpusStore, _resolve_quiet
from .rankers import format_rank, csv_field

log = logging.getLogger(__name__)

_WS = re.compile(r"\s+")
_LINK = re.compile(r"\[\[([^\[\]|]*)(?:\|[^\[\]]*)?\]\]")
_QUOTES = re.compile(r"'{2,}")


@dataclass(frozen=True)
class JournalStats:
    canonical_name: str
    citations: int = 0
    citers: int = 0
    has_page: bool = False


@dataclass(frozen=True)
class JournalWeightFit:
    coef_citers: float
    coef_citations: float
    coef_haspage: float
    intercept: float = 0.0
    residual_norm: float = 0.0
    excluded: tuple = ()

    def to_tsv(self) -> str:
        rows = [
            ("citers", self.coef_citers),
            ("citations", self.coef_citations),
            ("has_page", self.coef_haspage),
            ("intercept", self.intercept),
            ("residual_norm", self.residual_norm),
        ]
        return "".join(f"{k}\t{v:.10f}\n" for k, v in rows)

    @classmethod
    def from_tsv(cls, text: str) -> "JournalWeightFit":
        vals = {}
        for line in text.splitlines():
            if line.strip() and not line.startswith("#"):
                k, _, v = line.partition("\t")
                vals[k.strip()] = float(v)
        return cls(vals["citers"], vals["citations"], vals["has_page"],
                   vals.get("intercept", 0.0), vals.get("residual_norm", 0.0))


# coefficients fitted against 5-year impact factors of AI journals
DEFAULT_JOURNAL_FIT = JournalWeightFit(coef_citers=4.3848, coef_citations=4.42, coef_haspage=0.8238)


def _normalize_form(raw: str) -> str:
    name = _WS.sub(" ", raw).strip()
    name = _LINK.sub(lambda m: m.group(1), name)
    name = _QUOTES.sub("", name)
    name = _WS.sub(" ", name).strip().upper()
    if name.startswith("THE "):
        name = name[4:].lstrip()
    return name.rstrip(".").rstrip()


def normalize_journal_name(raw: str, alias_table: Mapping[str, str] | None = None) -> str:
    """Fold a cited journal name onto its canonical form.

    Trim and collapse whitespace, keep only the target of wiki links, drop
    italic quotes, upper-case, drop a leading "THE " and trailing periods,
    then map through ``alias_table`` (keyed by already-normalized names).

    >>> normalize_journal_name("[[Journal of Informetrics]]")
    'JOURNAL OF INFORMETRICS'
    """
    name = _normalize_form(raw)
    if not name:
        raise ValueError(f"empty journal name after normalization: {raw!r}")
    if alias_table:
        name = alias_table.get(name, name)
    return name


def load_journal_aliases(path: str | os.PathLike | None = None,
                         include_defaults: bool = True) -> dict[str, str]:
    """Alias table keyed and valued by normalized names, chains resolved."""
    texts = []
    if include_defaults:
        texts.append(resources.files("wikirank").joinpath("data/journal_aliases.tsv").read_text("utf-8"))
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            texts.append(fh.read())
    table: dict[str, str] = {}
    for text in texts:
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            alias, sep, canonical = line.partition("\t")
            a, c = _normalize_form(alias), _normalize_form(canonical)
            if sep and a and c:
                table[a] = c
    for key in list(table):
        seen = {key}
        target = table[key]
        while target in table and table[target] != target and target not in seen:
            seen.add(target)
            target = table[target]
        table[key] = target
    return table


def _page_index(store: CorpusStore, alias_table: Mapping[str, str]) -> set[str]:
    """Canonical journal names reachable as a page title (directly or by redirect)."""
    names = set()
    for title, page in store.pages.items():
        resolved = _resolve_quiet(store.redirects, title) if page.is_redirect else title
        target = store.pages.get(resolved) if resolved is not None else None
        if target is None or target.is_redirect:
            continue
        try:
            names.add(normalize_journal_name(title, alias_table))
        except ValueError:
            continue
    return names


def aggregate_journal_stats(store: CorpusStore, alias_table: Mapping[str, str] | None = None,
                            extra_names: Iterable[str] = ()) -> dict[str, JournalStats]:
    """Per-journal citations, distinct citers and page presence.

    Pages typed Journal and every name in ``extra_names`` appear even when
    never cited.
    """
    alias_table = alias_table or {}
    citations: dict[str, int] = {}
    citers: dict[str, set] = {}
    for title in sorted(store.pages):
        page = store.pages[title]
        if page.is_redirect:
            continue
        for ref in page.citations:
            try:
                name = normalize_journal_name(ref.journal_name_raw, alias_table)
            except ValueError:
                log.warning("%s: %s", title, "empty journal name, citation dropped")
                continue
            citations[name] = citations.get(name, 0) + 1
            citers.setdefault(name, set()).add(ref.citing_title)

    with_page = _page_index(store, alias_table)
    names = set(citations)
    for title in store.titles_of_kind("Journal"):
        names.add(normalize_journal_name(title, alias_table))
    for raw in extra_names:
        try:
            names.add(normalize_journal_name(raw, alias_table))
        except ValueError:
            continue
    return {
        n: JournalStats(n, citations.get(n, 0), len(citers.get(n, ())), n in with_page)
        for n in sorted(names)
    }


def scale_journal_stats(stats_map: Mapping[str, JournalStats],
                        universe: Iterable[str] | None = None) -> dict[str, tuple]:
    """name -> (citers, citations, has_page) with the counts min-max scaled over ``universe``."""
    names = sorted(universe) if universe is not None else sorted(stats_map)
    rows = [stats_map.get(n, JournalStats(n)) for n in names]
    if not rows:
        return {}
    citers = stats.minmax_scale([r.citers for r in rows])
    cites = stats.minmax_scale([r.citations for r in rows])
    return {
        n: (float(a), float(b), float(r.has_page))
        for n, a, b, r in zip(names, citers, cites, rows)
    }


def journal_score(citers: float, citations: float, has_page: float,
                  fit: JournalWeightFit = DEFAULT_JOURNAL_FIT) -> float:
    return (fit.coef_citers * citers + fit.coef_citations * citations
            + fit.coef_haspage * has_page + fit.intercept)


def fit_journal_weights(stats_scaled: Mapping[str, tuple], targets: Mapping[str, float],
                        with_intercept: bool = False) -> JournalWeightFit:
    """Least-squares coefficients of the three measures against impact factors."""
    used = sorted(n for n in stats_scaled if n in targets)
    excluded = tuple(sorted(n for n in stats_scaled if n not in targets))
    if excluded:
        log.info("%d journals without a target excluded", len(excluded))
    if len(used) < 4:
        raise ValueError("insufficient data")
    X = np.array([stats_scaled[n] for n in used], dtype=float)
    y = np.array([targets[n] for n in used], dtype=float)
    res = stats.linear_regression(X, y, with_intercept=with_intercept,
                                  column_names=("citers", "citations", "has_page"))
    c = res.coefficients
    return JournalWeightFit(float(c[0]), float(c[1]), float(c[2]), res.intercept,
                            res.residual_norm, excluded)


def rank_journals(stats_map: Mapping[str, JournalStats], fit: JournalWeightFit = DEFAULT_JOURNAL_FIT,
                  universe: Iterable[str] | None = None) -> list[tuple]:
    """(rank, name, score, stats) rows, best first; ties share the average rank."""
    scaled = scale_journal_stats(stats_map, universe)
    scores = {n: journal_score(*v, fit=fit) for n, v in scaled.items()}
    order = sorted(scores, key=lambda n: (-scores[n], n))
    ranks = stats.fractional_ranks([scores[n] for n in order], descending=True)
    return [(float(r), n, scores[n], stats_map.get(n, JournalStats(n)))
            for r, n in zip(ranks, order)]


def journal_ranking_csv(rows: list[tuple]) -> str:
    lines = ["rank,journal,score,citers,citations,has_page"]
    for rank, name, score, st in rows:
        lines.append(f"{format_rank(rank)},{csv_field(name)},{score:.6f},"
                     f"{st.citers},{st.citations},{int(st.has_page)}")
    return "\n".join(lines) + "\n"


def load_impact_factors(path: str | os.PathLike, alias_table: Mapping[str, str] | None = None) -> dict[str, float]:
    """Read a ``journal,if5`` CSV keyed by canonical journal name."""
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"journal", "if5"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: impact-factor CSV needs a 'journal,if5' header")
        for row in reader:
            try:
                out[normalize_journal_name(row["journal"], alias_table)] = float(row["if5"])
            except (TypeError, ValueError):
                log.warning("%s: bad impact-factor row %r", path, row)
    return out
