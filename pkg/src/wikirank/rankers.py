"""University ranking methods over a built corpus store.

Single-signal rankers (incoming links, in/out ratio, pageviews) score raw
counts. Multi-component rankers (infobox attributes, combinations) min-max
scale each component over the universe first and then take a weighted sum.
"""
from __future__ import annotations

import csv
import itertools
import logging
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import stats
from .corpus import CorpusStore, _resolve_quiet, contains_term, mention_count
from .titles import canonicalize_title
from .wikitext import extract_links

log = logging.getLogger(__name__)

INFOBOX_COMPONENTS = ("faculty", "alumni", "visibility", "other_affiliations")
LINK_COMPONENTS = ("incoming_links", "inout_ratio")
COMBINED_COMPONENTS = ("incoming_links", "pageviews", "infobox")


# --------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class RankEntry:
    entity: str
    score: float
    rank: float


@dataclass(frozen=True)
class RankingList:
    method_id: str
    entries: tuple

    @classmethod
    def from_scores(cls, method_id: str, scores: Mapping[str, float]) -> "RankingList":
        """Order by score descending, title ascending; ties share the average rank."""
        items = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        ranks = stats.fractional_ranks([s for _, s in items], descending=True)
        return cls(method_id, tuple(
            RankEntry(e, float(s), float(r)) for (e, s), r in zip(items, ranks)
        ))

    def scores(self) -> dict[str, float]:
        return {e.entity: e.score for e in self.entries}

    def ranks(self) -> dict[str, float]:
        return {e.entity: e.rank for e in self.entries}

    def order(self) -> list[str]:
        return [e.entity for e in self.entries]

    def to_csv(self) -> str:
        lines = ["rank,entity,score"]
        for e in self.entries:
            lines.append(f"{format_rank(e.rank)},{csv_field(e.entity)},{e.score:.6f}")
        return "\n".join(lines) + "\n"


def format_rank(rank: float) -> str:
    return str(int(rank)) if float(rank).is_integer() else f"{rank:g}"


def csv_field(value: str) -> str:
    if any(c in value for c in ',"\n'):
        return '"' + value.replace('"', '""') + '"'
    return value


@dataclass(frozen=True)
class BenchmarkRanking:
    name: str
    positions: Mapping[str, float]


@dataclass(frozen=True)
class WeightVector:
    """Nonnegative component weights, normalized to sum to one."""

    weights: Mapping[str, float]

    def __post_init__(self):
        w = dict(self.weights)
        if not w:
            raise ValueError("weight vector is empty")
        if any(not math.isfinite(v) or v < 0 for v in w.values()):
            raise ValueError("weights must be finite and nonnegative")
        total = sum(w.values())
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "weights", {k: v / total for k, v in w.items()})

    @property
    def components(self) -> tuple:
        return tuple(self.weights)

    def __getitem__(self, key: str) -> float:
        return self.weights[key]

    def to_tsv(self) -> str:
        return "".join(f"{k}\t{v:.12g}\n" for k, v in self.weights.items())


DEFAULT_INFOBOX_WEIGHTS = WeightVector(
    {"faculty": 0.5, "alumni": 0.3, "visibility": 0.1, "other_affiliations": 0.1}
)


@dataclass(frozen=True)
class AttributeGroup:
    group_id: str
    keys: frozenset


@dataclass(frozen=True)
class Universe:
    entities: frozenset
    unmatched: Mapping[str, tuple] = field(default_factory=dict)


@dataclass(frozen=True)
class WeightFit:
    weights: WeightVector
    tau: float
    n: int


# --------------------------------------------------------------------------
# file loaders


def load_aliases(path: str | os.PathLike | None) -> dict[str, str]:
    """``alias<TAB>canonical`` lines, both sides title-canonicalized."""
    aliases: dict[str, str] = {}
    if path is None:
        return aliases
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            alias, sep, canonical = line.rstrip("\n").partition("\t")
            if not sep:
                log.warning("%s:%d: expected alias<TAB>canonical", path, lineno)
                continue
            try:
                aliases[canonicalize_title(alias)] = canonicalize_title(canonical)
            except ValueError:
                log.warning("%s:%d: empty alias or canonical name", path, lineno)
    return aliases


def load_benchmark(path: str | os.PathLike, aliases: Mapping[str, str] | None = None,
                   name: str | None = None) -> BenchmarkRanking:
    """Read a ``rank,name`` CSV. Duplicate names keep their best rank."""
    aliases = aliases or {}
    positions: dict[str, float] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"rank", "name"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: benchmark CSV needs a 'rank,name' header")
        for row in reader:
            try:
                rank = float(row["rank"])
                title = canonicalize_title(row["name"])
            except (TypeError, ValueError):
                log.warning("%s: bad benchmark row %r", path, row)
                continue
            if rank <= 0:
                log.warning("%s: nonpositive rank for %r", path, row["name"])
                continue
            title = aliases.get(title, title)
            positions[title] = min(rank, positions.get(title, math.inf))
    return BenchmarkRanking(name or os.path.splitext(os.path.basename(path))[0], positions)


def load_attribute_groups(path: str | os.PathLike | None = None) -> tuple[AttributeGroup, ...]:
    """``group_id<TAB>key`` lines; without a path, the packaged defaults."""
    if path is None:
        text = resources.files("wikirank").joinpath("data/attribute_groups.tsv").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    groups: dict[str, set] = {}
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        gid, _, key = line.partition("\t")
        groups.setdefault(gid.strip(), set()).add(key.strip().lower().replace(" ", "_"))
    return tuple(AttributeGroup(g, frozenset(k)) for g, k in groups.items())


def load_weights(path: str | os.PathLike) -> WeightVector:
    weights = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            comp, _, value = line.rstrip("\n").partition("\t")
            weights[comp.strip()] = float(value)
    return WeightVector(weights)


# --------------------------------------------------------------------------
# single-signal rankers


def _checked(store: CorpusStore, universe: Iterable[str]) -> list[str]:
    out = []
    for e in sorted(universe):
        if e not in store.pages:
            log.warning("%s: not in corpus, scored 0", e)
        out.append(e)
    return out


def incoming_link_counts(store: CorpusStore, universe: Iterable[str]) -> dict[str, float]:
    return {e: float(len(store.in_links.get(e, ()))) for e in _checked(store, universe)}


def rank_incoming_links(store: CorpusStore, universe: Iterable[str]) -> RankingList:
    """Score = number of distinct pages linking to the entity."""
    return RankingList.from_scores("links", incoming_link_counts(store, universe))


def inout_ratios(store: CorpusStore, universe: Iterable[str]) -> dict[str, float]:
    scores = {}
    for e in _checked(store, universe):
        incoming = len(store.in_links.get(e, ()))
        page = store.pages.get(e)
        outgoing = len(page.outgoing_links) if page is not None else 0
        scores[e] = incoming / max(1, outgoing)
    return scores


def rank_inout_ratio(store: CorpusStore, universe: Iterable[str]) -> RankingList:
    return RankingList.from_scores("ratio", inout_ratios(store, universe))


def pageview_counts(store: CorpusStore, universe: Iterable[str]) -> dict[str, float]:
    return {e: float(store.views.get(e, 0)) for e in sorted(universe)}


def rank_pageviews(store: CorpusStore, universe: Iterable[str]) -> RankingList:
    return RankingList.from_scores("views", pageview_counts(store, universe))


# --------------------------------------------------------------------------
# infobox attributes


def _value_refers_to(store: CorpusStore, value: str, university: str) -> bool:
    for target in extract_links(value):
        if _resolve_quiet(store.redirects, target) == university:
            return True
    return contains_term(value, university)


def _persons(store: CorpusStore):
    for title in store.titles_of_kind("Person"):
        yield store.pages[title]


def count_attribute_group(store: CorpusStore, university: str, group: AttributeGroup) -> int:
    """Distinct Person pages with at least one ``group`` key referring to ``university``."""
    if store.kind(university) != "University":
        log.warning("%s: not typed as University", university)
    count = 0
    for page in _persons(store):
        if any(
            key in group.keys and _value_refers_to(store, value, university)
            for box in page.infoboxes
            for key, value in box.attributes.items()
        ):
            count += 1
    return count


def attribute_counts(store: CorpusStore, universities: Iterable[str],
                     groups: Sequence[AttributeGroup]) -> dict[str, dict[str, int]]:
    """Batch form of :func:`count_attribute_group`: group_id -> university -> count."""
    unis = sorted(universities)
    uni_set = set(unis)
    counts = {g.group_id: {u: 0 for u in unis} for g in groups}
    for page in _persons(store):
        for group in groups:
            hits: set = set()
            for box in page.infoboxes:
                for key, value in box.attributes.items():
                    if key not in group.keys:
                        continue
                    for target in extract_links(value):
                        resolved = _resolve_quiet(store.redirects, target)
                        if resolved in uni_set:
                            hits.add(resolved)
                    hits.update(u for u in unis if u not in hits and contains_term(value, u))
            for u in hits:
                counts[group.group_id][u] += 1
    return counts


def infobox_components(store: CorpusStore, universe: Iterable[str],
                       groups: Sequence[AttributeGroup] | None = None) -> dict[str, dict[str, float]]:
    """Raw faculty / alumni / visibility / other-affiliation values per university."""
    groups = groups if groups is not None else load_attribute_groups()
    unis = sorted(universe)
    counts = attribute_counts(store, unis, groups)
    comps = {c: {u: float(counts.get(c, {}).get(u, 0)) for u in unis}
             for c in ("faculty", "alumni", "other_affiliations")}
    comps["visibility"] = {u: float(mention_count(store, u)) for u in unis}
    return {c: comps[c] for c in INFOBOX_COMPONENTS}


def infobox_score(faculty: float, alumni: float, visibility: float, other: float,
                  weights: WeightVector = DEFAULT_INFOBOX_WEIGHTS) -> float:
    """Weighted sum of the four (already scaled) infobox components."""
    values = {"faculty": faculty, "alumni": alumni, "visibility": visibility,
              "other_affiliations": other}
    if any(v < 0 for v in values.values()):
        raise ValueError("infobox components must be nonnegative")
    return sum(weights.weights.get(k, 0.0) * v for k, v in values.items())


def scale_components(components: Mapping[str, Mapping[str, float]],
                     universe: Iterable[str] | None = None) -> dict[str, dict[str, float]]:
    """Min-max scale every component over the same universe (missing entities count 0)."""
    if universe is None:
        universe = set().union(*(set(c) for c in components.values()))
    unis = sorted(universe)
    scaled = {}
    for name, comp in components.items():
        missing = [u for u in unis if u not in comp]
        if missing:
            log.warning("component %s lacks %d entities, treated as 0", name, len(missing))
        values = stats.minmax_scale([comp.get(u, 0.0) for u in unis]) if unis else []
        scaled[name] = dict(zip(unis, map(float, values)))
    return scaled


def rank_infobox(store: CorpusStore, universe: Iterable[str],
                 weights: WeightVector = DEFAULT_INFOBOX_WEIGHTS,
                 groups: Sequence[AttributeGroup] | None = None) -> RankingList:
    unis = sorted(universe)
    scaled = scale_components(infobox_components(store, unis, groups), unis)
    scores = {
        u: infobox_score(scaled["faculty"][u], scaled["alumni"][u],
                         scaled["visibility"][u], scaled["other_affiliations"][u], weights)
        for u in unis
    }
    return RankingList.from_scores("infobox", scores)


# --------------------------------------------------------------------------
# universe, combination, fitting


def resolve_benchmark(store: CorpusStore, bench: BenchmarkRanking) -> tuple[dict, list]:
    """Map benchmark names onto redirect-resolved corpus titles.

    Returns (title -> rank, unmatched names).
    """
    matched: dict[str, float] = {}
    unmatched = []
    for name, rank in sorted(bench.positions.items()):
        resolved = _resolve_quiet(store.redirects, name)
        page = store.pages.get(resolved) if resolved is not None else None
        if page is None or page.is_redirect:
            unmatched.append(name)
            continue
        matched[resolved] = min(rank, matched.get(resolved, math.inf))
    return matched, unmatched


def filter_universe(store: CorpusStore, benchmarks: Sequence[BenchmarkRanking],
                    min_appearances: int = 2) -> Universe:
    """Universities present in the corpus and in at least ``min_appearances`` benchmarks."""
    if min_appearances < 1:
        raise ValueError("min_appearances must be >= 1")
    seen: dict[str, int] = {}
    unmatched = {}
    for bench in benchmarks:
        matched, missing = resolve_benchmark(store, bench)
        if missing:
            unmatched[bench.name] = tuple(missing)
            log.info("%s: %d names unmatched in corpus", bench.name, len(missing))
        for title in matched:
            seen[title] = seen.get(title, 0) + 1
    kept = frozenset(
        t for t, k in seen.items()
        if k >= min_appearances and store.kind(t) == "University"
    )
    return Universe(kept, unmatched)


def combine_rankings(components: Mapping[str, Mapping[str, float]], weights: WeightVector,
                     method_id: str = "combined") -> RankingList:
    """Weighted sum of already-scaled component maps."""
    universe = sorted(set().union(*(set(components[c]) for c in weights.components)))
    for name in weights.components:
        comp = components[name]
        missing = [u for u in universe if u not in comp]
        if missing:
            log.warning("component %s lacks %d entities, treated as 0", name, len(missing))
    raw = [sum(w * components[c].get(u, 0.0) for c, w in weights.weights.items())
           for u in universe]
    scores = dict(zip(universe, map(float, snap_ties(raw)))) if universe else {}
    return RankingList.from_scores(method_id, scores)


def _softmax(z: np.ndarray) -> np.ndarray:
    full = np.append(z, 0.0)
    full = np.exp(full - full.max())
    return full / full.sum()


TIE_TOL = 1e-12


def snap_ties(values, tol: float = TIE_TOL) -> np.ndarray:
    """Collapse runs of sorted values closer than ``tol`` onto the run's first value.

    A 2-d input is snapped row by row.
    """
    v = np.asarray(values, dtype=float)
    if v.shape[-1] < 2:
        return v.copy()
    if v.ndim == 1:
        gaps = np.diff(np.sort(v))
        if not np.any((gaps > 0) & (gaps <= tol)):
            return v.copy()
    rows = np.atleast_2d(v)
    order = np.argsort(rows, axis=1, kind="stable")
    sv = np.take_along_axis(rows, order, axis=1)
    gaps = np.diff(sv, axis=1)
    if not np.any((gaps > 0) & (gaps <= tol)):
        return v.copy()
    idx = np.broadcast_to(np.arange(sv.shape[1]), sv.shape)
    starts = np.concatenate([np.ones((len(sv), 1), bool), gaps > tol], axis=1)
    first = np.maximum.accumulate(np.where(starts, idx, 0), axis=1)
    out = np.empty_like(rows)
    np.put_along_axis(out, order, np.take_along_axis(sv, first, axis=1), axis=1)
    return out.reshape(v.shape)


class _PairTau:
    """Kendall tau-b of many candidate score vectors against one fixed target.

    Scores are passed through :func:`snap_ties` first, so ties agree with
    the final evaluation of a fitted weight vector.
    """

    def __init__(self, target: np.ndarray):
        n = len(target)
        self.i, self.j = np.triu_indices(n, 1)
        self.target_sign = np.sign(target[self.j] - target[self.i])
        self.n0 = len(self.i)
        self.n2 = int(np.sum(self.target_sign == 0))

    def pair_signs(self, scores: np.ndarray) -> np.ndarray:
        scores = snap_ties(scores)
        return np.sign(scores[self.j] - scores[self.i])

    def __call__(self, scores: np.ndarray) -> float:
        sc = self.pair_signs(scores)
        den = (self.n0 - np.count_nonzero(sc == 0)) * float(self.n0 - self.n2)
        return float(sc @ self.target_sign / math.sqrt(den)) if den > 0 else 0.0

    def batch(self, scores: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
        """tau-b for each row of ``scores``."""
        out = np.empty(len(scores))
        rows = max(1, chunk // max(1, self.n0))
        for start in range(0, len(scores), rows):
            block = snap_ties(scores[start:start + rows])
            sc = np.sign(block[:, self.j] - block[:, self.i])
            n1 = np.sum(sc == 0, axis=1)
            den = (self.n0 - n1) * float(self.n0 - self.n2)
            num = sc @ self.target_sign
            out[start:start + rows] = np.where(den > 0, num / np.sqrt(np.where(den > 0, den, 1.0)), 0.0)
        return out


_POLISH_NEAREST = {2: None, 3: 32}
# beyond this many entity pairs the polish and the exhaustive search shrink
_LARGE_PAIRS = 2000


def _tie_polish(mat: np.ndarray, w: np.ndarray, tau_of: _PairTau) -> tuple[np.ndarray, float]:
    """Best point among ``w`` and nearby tie sets of the pairwise hyperplanes.

    Tying a discordant pair raises tau-b, so optima over the closed simplex
    often sit on the sets where pair scores coincide rather than inside a
    constant region. Candidates are the projections of ``w`` onto the nearest
    distinct tie hyperplanes (all of them on a two-component face) and onto
    every intersection of up to dim-1 of them, kept when they stay inside the
    simplex.
    """
    k = mat.shape[1]
    best_w, best_t = w, tau_of(mat @ w)
    dirs = mat[tau_of.j] - mat[tau_of.i]
    norms = np.linalg.norm(dirs, axis=1)
    keep = norms > 1e-12
    dirs = dirs[keep] / norms[keep, None]
    if len(dirs) == 0:
        return best_w, best_t
    # a hyperplane and its negation are the same tie set
    sign = np.sign(dirs[np.arange(len(dirs)), np.argmax(np.abs(dirs) > 1e-12, axis=1)])
    dirs = np.unique(np.round(dirs * sign[:, None], 12), axis=0)
    dist = np.abs(dirs @ w)
    nearest = _POLISH_NEAREST.get(k, 12)
    if tau_of.n0 > _LARGE_PAIRS:
        nearest = 64 if nearest is None else min(nearest, 12)
    near = dirs[np.argsort(dist, kind="stable")[:nearest]]
    for size in range(1, k):
        combos = np.array(list(itertools.combinations(range(len(near)), size)), dtype=int)
        if combos.size == 0:
            continue
        # min-norm move of w onto {v : a.v = 0 for each chosen a, sum(v) = 1}
        a = np.concatenate([near[combos], np.ones((len(combos), 1, k))], axis=1)
        gram = a @ a.transpose(0, 2, 1)
        ok = np.abs(np.linalg.det(gram)) > 1e-12
        if not ok.any():
            continue
        a, gram = a[ok], gram[ok]
        rhs = np.zeros(a.shape[1])
        rhs[-1] = 1.0
        resid = a @ w - rhs
        lam = np.linalg.solve(gram, resid[..., None])[..., 0]
        v = w - np.einsum("mrk,mr->mk", a, lam)
        v = v[np.all(v >= -1e-12, axis=1)]
        if len(v) == 0:
            continue
        v = np.clip(v, 0.0, None)
        taus = tau_of.batch(v @ mat.T)
        top = int(np.argmax(taus))
        if taus[top] > best_t + 1e-12:
            best_w, best_t = v[top], float(taus[top])
    return best_w, best_t


# cap on (candidate points x entity pairs) for the exact arrangement search
_ARRANGEMENT_BUDGET = 3e8
_CELL_STEP = 1e-7


def _unique_lines(coef: np.ndarray) -> np.ndarray:
    """Drop degenerate rows, scale by the normal's length, merge duplicates."""
    norm = np.linalg.norm(coef[:, :-1], axis=1)
    coef = coef[norm > 1e-12] / norm[norm > 1e-12, None]
    if len(coef) == 0:
        return coef
    lead = coef[np.arange(len(coef)), np.argmax(np.abs(coef[:, :-1]) > 1e-12, axis=1)]
    return np.unique(np.round(coef * np.sign(lead)[:, None], 12), axis=0)


def _arrangement_points(mat: np.ndarray, tau_of: _PairTau) -> np.ndarray | None:
    """Weights touching every cell, edge and vertex of the tie arrangement.

    On a face of two or three components the tau-b objective is constant on
    each piece of the arrangement cut out by the pairwise tie sets, so one
    point per piece finds the exact maximum over the closed face. Returns
    None when the universe or the arrangement is too large to enumerate.
    """
    k = mat.shape[1]
    if tau_of.n0 > _LARGE_PAIRS:
        return None
    a = mat[tau_of.j] - mat[tau_of.i]
    if k == 2:
        # w = (x, 1 - x): tie where (a0 - a1) x + a1 = 0
        d = a[:, 0] - a[:, 1]
        ok = np.abs(d) > 1e-12
        xs = np.unique(np.concatenate([[0.0, 1.0], -a[ok, 1] / d[ok]]))
        xs = xs[(xs >= 0.0) & (xs <= 1.0)]
        xs = np.concatenate([xs, (xs[1:] + xs[:-1]) / 2.0])
        return np.column_stack([xs, 1.0 - xs])
    if k != 3:
        return None
    # w = (x, y, 1 - x - y): tie where p x + q y + r = 0
    coef = np.column_stack([a[:, 0] - a[:, 2], a[:, 1] - a[:, 2], a[:, 2]])
    coef = np.vstack([coef, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, -1.0]]])
    lines = _unique_lines(coef)
    m = len(lines)
    if m * m * 4.5 * max(1, tau_of.n0) > _ARRANGEMENT_BUDGET:
        return None
    i, j = np.triu_indices(m, 1)
    det = lines[i, 0] * lines[j, 1] - lines[i, 1] * lines[j, 0]
    ok = np.abs(det) > 1e-12
    i, j, det = i[ok], j[ok], det[ok]
    x = (lines[i, 1] * lines[j, 2] - lines[j, 1] * lines[i, 2]) / det
    y = (lines[j, 0] * lines[i, 2] - lines[i, 0] * lines[j, 2]) / det
    inside = (x >= -1e-12) & (y >= -1e-12) & (x + y <= 1.0 + 1e-12)
    x, y, i, j = x[inside], y[inside], i[inside], j[inside]
    # step off each vertex along both lines and into the four sectors between them
    di = np.column_stack([-lines[i, 1], lines[i, 0]])
    dj = np.column_stack([-lines[j, 1], lines[j, 0]])
    v = np.column_stack([x, y])
    pts = [v]
    for si, sj in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)):
        pts.append(v + _CELL_STEP * (si * di + sj * dj))
    xy = np.vstack(pts)
    xy = xy[(xy[:, 0] >= -1e-15) & (xy[:, 1] >= -1e-15) & (xy.sum(axis=1) <= 1.0 + 1e-15)]
    w = np.column_stack([xy[:, 0], xy[:, 1], 1.0 - xy[:, 0] - xy[:, 1]])
    w = np.clip(w, 0.0, None)
    return np.unique(w / w.sum(axis=1, keepdims=True), axis=0)


def _lattice_starts(dim: int, budget: int) -> list[np.ndarray]:
    """Interior points of a regular lattice on the (dim-1)-simplex, as softmax logits."""
    if dim < 2:
        return []
    res = dim
    while math.comb(res, dim - 1) <= budget and res < 64:
        res += 1
    starts = []

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(1, total - parts + 2):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    for comp in compositions(res, dim):
        w = np.array(comp, dtype=float)
        starts.append(np.log(w[:-1] / w[-1]))
    return starts


def _faces(k: int, max_full: int = 4) -> list[tuple]:
    """Component subsets searched separately so exact zero weights are reachable."""
    if k <= max_full:
        return [c for r in range(1, k + 1) for c in itertools.combinations(range(k), r)]
    return [(i,) for i in range(k)] + [tuple(range(k))]


def fit_component_weights(components: Mapping[str, Mapping[str, float]],
                          target: BenchmarkRanking | Mapping[str, float],
                          config: stats.SimplexConfig | None = None,
                          starts_per_face: int = 36, polish_top: int = 8) -> WeightFit:
    """Nonnegative weights maximizing Kendall tau-b against ``target`` ranks.

    Weights on each face of the simplex (every component subset, for up to
    four components) are parameterized by a softmax of free coordinates.
    Nelder-Mead runs from a regular lattice of interior starts plus
    ``config.restarts`` seeded random starts on every face. The objective is
    piecewise constant, so the initial simplex uses a unit step in logit space
    rather than a relative perturbation. Best tau wins; ties go to the
    earliest candidate.
    """
    names = list(components)
    if len(names) < 2:
        raise ValueError("need at least two components")
    positions = target.positions if isinstance(target, BenchmarkRanking) else target
    common = sorted(set(positions).intersection(*(set(components[c]) for c in names)))
    if len(common) < 3:
        raise ValueError("insufficient overlap")
    config = config or stats.SimplexConfig()

    mat = np.column_stack([stats.minmax_scale([components[c][u] for u in common]) for c in names])
    # higher strength = better, so a perfect fit has tau = +1
    strength = -np.array([positions[u] for u in common], dtype=float)
    if len(common) <= 2000:
        tau_of = _PairTau(strength)
    else:
        def tau_of(scores):
            if np.all(scores == scores[0]):
                return 0.0
            return stats.kendall_tau(scores, strength).coefficient

    local = replace(config, tol_x=1e-4, max_iter=min(config.max_iter, 400),
                    restarts=1, absolute_step=1.0)
    rng = np.random.default_rng(config.seed)
    k = len(names)
    best_w, best_tau = None, -math.inf
    for face in _faces(k):
        sub = mat[:, face]
        if len(face) == 1:
            candidates = [np.ones(1)]
        else:
            budget = starts_per_face if len(face) > 2 else max(4, starts_per_face // 3)
            starts = _lattice_starts(len(face), budget)
            starts += [rng.normal(0.0, 2.0, len(face) - 1) for _ in range(config.restarts)]
            candidates = []
            for z0 in starts:
                res = stats.nelder_mead(lambda z: -tau_of(sub @ _softmax(z)), z0, local)
                candidates.append(_softmax(res.x))
        scored = sorted(((tau_of(sub @ w), i) for i, w in enumerate(candidates)),
                        key=lambda ti: (-ti[0], ti[1]))
        face_w, face_t = candidates[scored[0][1]], scored[0][0]
        if isinstance(tau_of, _PairTau) and len(face) > 1:
            seen_orders = set()
            for _, i in scored:
                signature = tau_of.pair_signs(sub @ candidates[i]).tobytes()
                if signature in seen_orders:
                    continue
                seen_orders.add(signature)
                w, t = _tie_polish(sub, candidates[i], tau_of)
                if t > face_t + 1e-12:
                    face_w, face_t = w, t
                if len(seen_orders) >= polish_top:
                    break
        if isinstance(tau_of, _PairTau) and len(face) in (2, 3):
            pts = _arrangement_points(sub, tau_of)
            if pts is not None and len(pts):
                taus = tau_of.batch(pts @ sub.T)
                top = int(np.argmax(taus))
                if taus[top] > face_t + 1e-12:
                    face_w, face_t = pts[top], float(taus[top])
        if face_t > best_tau + 1e-12:
            best_tau = face_t
            best_w = np.zeros(k)
            best_w[list(face)] = face_w
    weights = WeightVector(dict(zip(names, map(float, best_w))))
    combined = snap_ties(mat @ best_w)
    achieved = 0.0 if np.all(combined == combined[0]) else \
        stats.kendall_tau(combined, strength).coefficient
    return WeightFit(weights, achieved, len(common))
