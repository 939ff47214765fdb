"""Command-line driver: ingest, rank, fit, correlate, report.

Exit codes: 0 success, 2 usage or unreadable input, 3 a data condition
(empty universe, insufficient overlap, degenerate scores). Diagnostics go to
stderr; primary outputs go to --out (or stdout) and are written atomically.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import corpus, journals, rankers, stats
from .titles import canonicalize_title
from .wikitext import DumpFormatError, parse_dump

log = logging.getLogger("wikirank")

METHODS = ("links", "ratio", "views", "infobox", "combined", "journals")
FIT_METHODS = ("links", "infobox", "combined", "journals")
DEFAULT_COMBINED_WEIGHTS = {c: 1.0 for c in rankers.COMBINED_COMPONENTS}


class UsageError(Exception):
    """Bad flags or unreadable input (exit 2)."""


class DataError(Exception):
    """Inputs were readable but the data cannot support the request (exit 3)."""


@dataclass
class RunConfig:
    subcommand: str
    store: str | None = None
    out: str | None = None
    seed: int = 42
    quiet: bool = False
    dump: str | None = None
    pageviews: list = field(default_factory=list)
    project: str = "en"
    period_start: str | None = None
    period_end: str | None = None
    type_map: str | None = None
    benchmarks: list = field(default_factory=list)
    aliases: str | None = None
    min_appearances: int = 2
    attribute_groups: str | None = None
    method: str | None = None
    weights: str | None = None
    weight_overrides: str | None = None
    journal_aliases: str | None = None
    impact_factors: str | None = None
    journal_fit: str | None = None
    target: str | None = None
    intercept: bool = False
    inputs: list = field(default_factory=list)
    coefficient: str = "kendall"
    subset: str | None = None
    journals: bool = False
    ranking: str | None = None
    benchmark: str | None = None
    bins: int = 10

    def input_paths(self) -> list[str]:
        single = [self.dump, self.type_map, self.aliases, self.attribute_groups, self.weights,
                  self.journal_aliases, self.impact_factors, self.journal_fit, self.target,
                  self.subset, self.ranking, self.benchmark]
        if self.subcommand != "ingest":
            single.append(self.store)
        return [p for p in single if p] + list(self.pageviews) + list(self.benchmarks) + list(self.inputs)

    def validate(self) -> None:
        for path in self.input_paths():
            if not os.path.exists(path):
                raise UsageError(f"no such file: {path}")


# --------------------------------------------------------------------------
# shared helpers


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        corpus.write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


def _load_store(cfg: RunConfig) -> corpus.CorpusStore:
    if not cfg.store:
        raise UsageError("--store is required")
    try:
        return corpus.CorpusStore.load(cfg.store)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"{cfg.store}: unreadable store ({exc})") from exc


def _university_universe(cfg: RunConfig, store: corpus.CorpusStore) -> list[str]:
    if cfg.benchmarks:
        aliases = rankers.load_aliases(cfg.aliases)
        benches = [rankers.load_benchmark(p, aliases) for p in cfg.benchmarks]
        universe = rankers.filter_universe(store, benches, cfg.min_appearances)
        for name, missing in sorted(universe.unmatched.items()):
            log.info("%s: unmatched %s", name, ", ".join(missing))
        entities = sorted(universe.entities)
    else:
        entities = store.titles_of_kind("University")
    if not entities:
        raise DataError("empty universe after filtering")
    return entities


def _override_weights(cfg: RunConfig, components: Sequence[str],
                      default: rankers.WeightVector) -> rankers.WeightVector:
    if cfg.weights and cfg.weight_overrides:
        raise UsageError("--weights and --weight-overrides are exclusive")
    if cfg.weights:
        w = rankers.load_weights(cfg.weights)
        if set(w.components) != set(components):
            raise UsageError(f"{cfg.weights}: expected components {', '.join(components)}")
        return w
    if cfg.weight_overrides:
        try:
            values = [float(v) for v in cfg.weight_overrides.split(",")]
        except ValueError as exc:
            raise UsageError(f"bad --weight-overrides: {cfg.weight_overrides}") from exc
        if len(values) != len(components):
            raise UsageError(f"--weight-overrides needs {len(components)} values "
                             f"({', '.join(components)})")
        try:
            return rankers.WeightVector(dict(zip(components, values)))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    return default


def _combined_components(store, universe, groups) -> dict[str, dict[str, float]]:
    infobox = rankers.rank_infobox(store, universe, groups=groups).scores()
    raw = {
        "incoming_links": rankers.incoming_link_counts(store, universe),
        "pageviews": rankers.pageview_counts(store, universe),
        "infobox": infobox,
    }
    return rankers.scale_components(raw, universe)


def _method_components(method, store, universe, groups) -> dict[str, dict[str, float]]:
    if method == "links":
        return rankers.scale_components({
            "incoming_links": rankers.incoming_link_counts(store, universe),
            "inout_ratio": rankers.inout_ratios(store, universe),
        }, universe)
    if method == "infobox":
        return rankers.scale_components(rankers.infobox_components(store, universe, groups), universe)
    return _combined_components(store, universe, groups)


def _journal_context(cfg: RunConfig, store):
    aliases = journals.load_journal_aliases(cfg.journal_aliases)
    targets = journals.load_impact_factors(cfg.impact_factors or cfg.target, aliases) \
        if (cfg.impact_factors or cfg.target) else None
    stats_map = journals.aggregate_journal_stats(store, aliases, extra_names=targets or ())
    return aliases, targets, stats_map


# --------------------------------------------------------------------------
# subcommands


def _pageview_files(paths: Sequence[str]) -> list[Path]:
    files = []
    for p in map(Path, paths):
        if p.is_dir():
            files.extend(sorted(f for f in p.iterdir() if f.is_file() and not f.name.startswith(".")))
        else:
            files.append(p)
    return files


def cmd_ingest(cfg: RunConfig) -> int:
    if not cfg.dump:
        raise UsageError("--dump is required")
    out = cfg.out or cfg.store
    if not out:
        raise UsageError("--out (or --store) is required")
    type_map = corpus.load_type_map(cfg.type_map) if cfg.type_map else {}
    try:
        with open(cfg.dump, "rb") as fh:
            store = corpus.build_store(corpus.parse_pages(parse_dump(fh)), type_map)
    except DumpFormatError as exc:
        raise UsageError(f"{cfg.dump}: {exc}") from exc

    tally = corpus.PageviewTally()
    if cfg.pageviews:
        window = corpus.date_window(cfg.period_start, cfg.period_end) \
            if (cfg.period_start or cfg.period_end) else None
        for path in _pageview_files(cfg.pageviews):
            corpus.aggregate_pageviews(store, corpus.read_pageview_file(path, tally),
                                       period_filter=window, project=cfg.project, tally=tally)
        store = store.with_views(tally.views)
    store.save(out)

    pages = list(store.pages.values())
    summary = {
        "pages": len(pages),
        "redirects": len(store.redirects),
        "links": sum(len(p.outgoing_links) for p in pages if not p.is_redirect),
        "citations": sum(len(p.citations) for p in pages if not p.is_redirect),
        "pageviews_accepted": tally.accepted,
        "pageviews_skipped": tally.skipped_unknown + tally.skipped_project
        + tally.skipped_period + tally.malformed,
    }
    if not cfg.quiet:
        print(" ".join(f"{k}={v}" for k, v in summary.items()), file=sys.stderr)
    return 0


def cmd_rank(cfg: RunConfig) -> int:
    store = _load_store(cfg)
    if cfg.method == "journals":
        _, targets, stats_map = _journal_context(cfg, store)
        fit = journals.DEFAULT_JOURNAL_FIT
        if cfg.journal_fit:
            fit = journals.JournalWeightFit.from_tsv(Path(cfg.journal_fit).read_text("utf-8"))
        universe = sorted(targets) if targets is not None else sorted(stats_map)
        if not universe:
            raise DataError("empty universe after filtering")
        _emit(cfg, journals.journal_ranking_csv(journals.rank_journals(stats_map, fit, universe)))
        return 0

    universe = _university_universe(cfg, store)
    groups = rankers.load_attribute_groups(cfg.attribute_groups)
    if cfg.method == "links":
        ranking = rankers.rank_incoming_links(store, universe)
    elif cfg.method == "ratio":
        ranking = rankers.rank_inout_ratio(store, universe)
    elif cfg.method == "views":
        ranking = rankers.rank_pageviews(store, universe)
    elif cfg.method == "infobox":
        weights = _override_weights(cfg, rankers.INFOBOX_COMPONENTS, rankers.DEFAULT_INFOBOX_WEIGHTS)
        ranking = rankers.rank_infobox(store, universe, weights, groups)
    else:
        weights = _override_weights(cfg, rankers.COMBINED_COMPONENTS,
                                    rankers.WeightVector(DEFAULT_COMBINED_WEIGHTS))
        comps = _combined_components(store, universe, groups)
        ranking = rankers.combine_rankings(comps, weights)
    _emit(cfg, ranking.to_csv())
    return 0


def cmd_fit(cfg: RunConfig) -> int:
    if not cfg.target:
        raise UsageError("--target is required")
    store = _load_store(cfg)
    if cfg.method == "journals":
        _, targets, stats_map = _journal_context(cfg, store)
        universe = sorted(n for n in stats_map if n in targets)
        scaled = journals.scale_journal_stats(stats_map, universe)
        try:
            fit = journals.fit_journal_weights(scaled, targets, with_intercept=cfg.intercept)
        except stats.RankDeficientError as exc:
            raise DataError(str(exc)) from exc
        except ValueError as exc:
            raise DataError(str(exc)) from exc
        if not cfg.quiet:
            print(f"residual_norm={fit.residual_norm:.6g} n={len(universe)}", file=sys.stderr)
        _emit(cfg, fit.to_tsv())
        return 0

    universe = _university_universe(cfg, store)
    groups = rankers.load_attribute_groups(cfg.attribute_groups)
    aliases = rankers.load_aliases(cfg.aliases)
    target, unmatched = rankers.resolve_benchmark(store, rankers.load_benchmark(cfg.target, aliases))
    if unmatched:
        log.info("%s: %d target names unmatched", cfg.target, len(unmatched))
    comps = _method_components(cfg.method, store, universe, groups)
    config = stats.SimplexConfig(seed=cfg.seed)
    try:
        fit = rankers.fit_component_weights(comps, target, config)
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    if not cfg.quiet:
        print(f"tau={fit.tau:.6f} n={fit.n}", file=sys.stderr)
    _emit(cfg, fit.weights.to_tsv())
    return 0


def _read_scores(path: str, key_fn, prefer=("rank", "score", "if5"),
                 negate_rank: bool = True) -> dict[str, float]:
    """Entity -> value from a ranking, benchmark or impact-factor CSV.

    The first column of ``prefer`` present is read; a rank column is negated
    by default so that higher always means better.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        key = next((c for c in ("entity", "name", "journal") if c in cols), None)
        value = next((c for c in prefer if c in cols), None)
        if key is None or value is None:
            raise UsageError(f"{path}: needs an entity/name/journal column and rank/score/if5")
        out: dict[str, float] = {}
        for row in reader:
            try:
                name = key_fn(row[key])
                v = float(row[value])
            except (TypeError, ValueError):
                log.warning("%s: bad row %r", path, row)
                continue
            if value == "rank" and negate_rank:
                v = -v
            out[name] = max(v, out.get(name, -math.inf)) if name in out else v
    return out


def _source_timestamp() -> str | None:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if not epoch:
        return None
    from datetime import datetime, timezone
    return datetime.fromtimestamp(int(epoch), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _finite(x: float) -> float | None:
    return float(x) if math.isfinite(x) else None


def cmd_correlate(cfg: RunConfig) -> int:
    if len(cfg.inputs) < 2:
        raise UsageError("correlate needs at least two input CSVs")
    if cfg.journals:
        table = journals.load_journal_aliases(cfg.journal_aliases)
        key_fn = lambda raw: journals.normalize_journal_name(raw, table)  # noqa: E731
    else:
        aliases = rankers.load_aliases(cfg.aliases)

        def key_fn(raw):
            t = canonicalize_title(raw)
            return aliases.get(t, t)
    columns = [(Path(p).stem, _read_scores(p, key_fn)) for p in cfg.inputs]
    filter_desc = "none"
    if cfg.subset:
        keep = set()
        for line in Path(cfg.subset).read_text("utf-8").splitlines():
            if line.strip() and not line.startswith("#"):
                keep.add(key_fn(line.strip()))
        columns = [(n, {e: v for e, v in col.items() if e in keep}) for n, col in columns]
        filter_desc = f"subset {Path(cfg.subset).name} ({len(keep)} entities)"

    corr = stats.CORRELATIONS[cfg.coefficient]
    pairs = []
    for i in range(len(columns)):
        for j in range(i + 1, len(columns)):
            (na, a), (nb, b) = columns[i], columns[j]
            common = sorted(set(a) & set(b))
            cell = {"a": na, "b": nb, "method": cfg.coefficient, "coefficient": None,
                    "n": len(common), "p_value": None}
            if len(common) < 3:
                cell["reason"] = "insufficient overlap"
            else:
                try:
                    r = corr([a[e] for e in common], [b[e] for e in common])
                    cell["coefficient"] = _finite(r.coefficient)
                    cell["p_value"] = _finite(r.p_value)
                except ValueError as exc:
                    cell["reason"] = str(exc)
            pairs.append(cell)
    doc = {
        "pairs": pairs,
        "universe_size": len(set().union(*(set(c) for _, c in columns))),
        "filter": filter_desc,
        "config": {
            "coefficient": cfg.coefficient,
            "inputs": [Path(p).name for p in cfg.inputs],
            "journals": cfg.journals,
            "seed": cfg.seed,
            "subset": Path(cfg.subset).name if cfg.subset else None,
        },
        "generated": _source_timestamp(),
    }
    _emit(cfg, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return 0


def _g(x: float) -> str:
    return f"{x:.10g}"


def cmd_report(cfg: RunConfig) -> int:
    if not cfg.ranking:
        raise UsageError("--ranking is required")
    if not cfg.out:
        raise UsageError("--out DIR is required")
    with open(cfg.ranking, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    key = "entity" if rows and "entity" in rows[0] else "journal"
    if not rows or "score" not in rows[0]:
        raise UsageError(f"{cfg.ranking}: needs a score column")
    scores = {r[key]: float(r["score"]) for r in rows}
    try:
        gof = stats.lognormal_gof(list(scores.values()), bin_count=cfg.bins)
    except ValueError as exc:
        raise DataError(str(exc)) from exc

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    buf.write("bin_low,bin_high,observed,expected_lognormal\n")
    for k in range(len(gof.observed)):
        buf.write(f"{_g(gof.edges[k])},{_g(gof.edges[k + 1])},{int(gof.observed[k])},"
                  f"{_g(gof.expected[k])}\n")
    corpus.write_atomic(out / "histogram.csv", buf.getvalue())
    summary = f"chi2={_g(gof.statistic)} df={gof.df} p={_g(gof.p_value)}\n"
    corpus.write_atomic(out / "gof.txt", summary)
    sys.stdout.write(summary)

    if cfg.benchmark:
        other = _read_scores(cfg.benchmark, canonicalize_title,
                             prefer=("score", "if5", "rank"), negate_rank=False)
        buf = io.StringIO()
        buf.write("entity,score_a,score_b,ln_score_a\n")
        log_x, log_y = [], []
        for e in sorted(scores):
            t = canonicalize_title(e) if key == "entity" else e
            if t not in other:
                continue
            a, b = scores[e], other[t]
            ln_a = _g(math.log(a)) if a > 0 else ""
            if a > 0:
                log_x.append(math.log(a))
                log_y.append(b)
            buf.write(f"{rankers.csv_field(e)},{_g(a)},{_g(b)},{ln_a}\n")
        corpus.write_atomic(out / "scatter.csv", buf.getvalue())
        # Pearson of ln(score) against the benchmark value
        try:
            fit = stats.pearson_r(log_x, log_y)
            line = f"log_fit r={_g(fit.coefficient)} n={fit.n} p={_g(fit.p_value)}\n"
        except ValueError as exc:
            line = f"log_fit r=null n={len(log_x)} reason={exc}\n"
        corpus.write_atomic(out / "logfit.txt", line)
        sys.stdout.write(line)
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "rank": cmd_rank,
    "fit": cmd_fit,
    "correlate": cmd_correlate,
    "report": cmd_report,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--store", help="corpus store file")
    shared.add_argument("--out", help="output path (stdout when omitted)")
    shared.add_argument("--seed", type=int, default=42)
    shared.add_argument("--quiet", action="store_true", help="only errors on stderr")

    parser = argparse.ArgumentParser(prog="wikirank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("ingest", parents=[shared], help="parse a dump into a store file")
    p.add_argument("--dump", required=True)
    p.add_argument("--pageviews", action="append", default=[], help="pageview file or directory")
    p.add_argument("--project", default="en")
    p.add_argument("--period-start", help="YYYYMMDD")
    p.add_argument("--period-end", help="YYYYMMDD")
    p.add_argument("--type-map")

    def universe_flags(p):
        p.add_argument("--benchmark", dest="benchmarks", action="append", default=[])
        p.add_argument("--aliases")
        p.add_argument("--min-appearances", type=int, default=2)
        p.add_argument("--attribute-groups")
        p.add_argument("--journal-aliases")
        p.add_argument("--impact-factors")

    p = sub.add_parser("rank", parents=[shared], help="rank universities or journals")
    p.add_argument("--method", required=True, choices=METHODS)
    universe_flags(p)
    p.add_argument("--weights", help="component<TAB>weight file")
    p.add_argument("--weight-overrides", help="comma-separated weights in component order")
    p.add_argument("--journal-fit", help="coefficient TSV from 'fit --method journals'")

    p = sub.add_parser("fit", parents=[shared], help="fit component weights")
    p.add_argument("--method", required=True, choices=FIT_METHODS)
    p.add_argument("--target", help="benchmark CSV, or impact-factor CSV for journals")
    p.add_argument("--intercept", action="store_true")
    universe_flags(p)

    p = sub.add_parser("correlate", parents=[shared], help="pairwise correlation matrix")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--coefficient", choices=sorted(stats.CORRELATIONS), default="kendall")
    p.add_argument("--subset")
    p.add_argument("--aliases")
    p.add_argument("--journals", action="store_true", help="match names as journal titles")
    p.add_argument("--journal-aliases")

    p = sub.add_parser("report", parents=[shared], help="distribution and scatter data")
    p.add_argument("--ranking")
    p.add_argument("--benchmark")
    p.add_argument("--bins", type=int, default=10)
    return parser


def _setup_logging(quiet: bool) -> None:
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname).4s %(message)s"))
    root = logging.getLogger("wikirank")
    root.handlers[:] = [handler]
    root.setLevel(logging.ERROR if quiet else logging.INFO)
    root.propagate = False


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    known = {f for f in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in known})
    _setup_logging(cfg.quiet)
    try:
        cfg.validate()
        return COMMANDS[cfg.subcommand](cfg)
    except UsageError as exc:
        print(f"wikirank {cfg.subcommand}: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"wikirank {cfg.subcommand}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"wikirank {cfg.subcommand}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
