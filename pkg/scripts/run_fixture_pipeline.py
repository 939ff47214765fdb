"""Run ingest -> rank -> fit -> correlate -> report over a fixture corpus.

    python scripts/run_fixture_pipeline.py [--corpus fixtures/synth] [--out runs/synth] [--seed 42]

Every step goes through the installed command line, so this doubles as a
smoke test of the CLI. Prints the correlation matrix and GOF summary.
"""
from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
RANK_METHODS = ("links", "ratio", "views", "infobox", "combined")


def _wikirank(*args: str) -> None:
    subprocess.run([sys.executable, "-m", "wikirank", *args, "--quiet"], check=True)


def run_pipeline(corpus: Path, out: Path, seed: int = 42) -> list[Path]:
    """Run every stage; return the primary output files in a fixed order."""
    out.mkdir(parents=True, exist_ok=True)
    store = out / "store.json"
    dump = corpus / "dump.jsonl" if (corpus / "dump.jsonl").exists() else corpus / "dump.xml"
    benches = sorted(p for p in corpus.glob("*.csv") if p.name != "impact_factors.csv")
    bench_flags = [f for b in benches for f in ("--benchmark", str(b))]
    aliases = ["--aliases", str(corpus / "aliases.tsv")] if (corpus / "aliases.tsv").exists() else []
    s = ["--seed", str(seed)]

    _wikirank("ingest", "--dump", str(dump), "--type-map", str(corpus / "type_map.tsv"),
              "--pageviews", str(corpus / "pageviews"), "--out", str(store), *s)
    outputs = [store]
    for m in RANK_METHODS:
        path = out / f"rank_{m}.csv"
        _wikirank("rank", "--store", str(store), "--method", m, *bench_flags, *aliases,
                  "--out", str(path), *s)
        outputs.append(path)
    target = corpus / "arwu.csv"
    weights = out / "weights_combined.tsv"
    _wikirank("fit", "--store", str(store), "--method", "combined", "--target", str(target),
              *bench_flags, *aliases, "--out", str(weights), *s)
    fitted = out / "rank_fitted.csv"
    _wikirank("rank", "--store", str(store), "--method", "combined", "--weights", str(weights),
              *bench_flags, *aliases, "--out", str(fitted), *s)
    journals = out / "rank_journals.csv"
    ifs = corpus / "impact_factors.csv"
    _wikirank("rank", "--store", str(store), "--method", "journals", "--impact-factors", str(ifs),
              "--out", str(journals), *s)
    jfit = out / "weights_journals.tsv"
    _wikirank("fit", "--store", str(store), "--method", "journals", "--target", str(ifs),
              "--out", str(jfit), *s)
    outputs += [weights, fitted, journals, jfit]

    corr = out / "correlations.json"
    ranks = [str(out / f"rank_{m}.csv") for m in RANK_METHODS] + [str(fitted)]
    _wikirank("correlate", *ranks, *map(str, benches), *aliases, "--out", str(corr), *s)
    corr_na = out / "correlations_subset.json"
    _wikirank("correlate", *ranks, *map(str, benches), *aliases,
              "--subset", str(corpus / "north_america.txt"), "--out", str(corr_na), *s)
    corr_j = out / "correlations_journals.json"
    _wikirank("correlate", str(journals), str(ifs), "--journals", "--coefficient", "spearman",
              "--out", str(corr_j), *s)
    report = out / "report"
    subprocess.run([sys.executable, "-m", "wikirank", "report", "--ranking", str(out / "rank_links.csv"),
                    "--benchmark", str(target), "--out", str(report), "--quiet", *s],
                   check=True, stdout=subprocess.DEVNULL)
    outputs += [corr, corr_na, corr_j, report / "histogram.csv", report / "gof.txt",
                report / "scatter.csv", report / "logfit.txt"]
    return outputs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(ROOT / "fixtures" / "synth"))
    ap.add_argument("--out", default=str(ROOT / "runs" / "synth"))
    ap.add_argument("--seed", type=int, default=42)
    args = ap.parse_args()
    t0 = time.perf_counter()
    outputs = run_pipeline(Path(args.corpus), Path(args.out), args.seed)
    elapsed = time.perf_counter() - t0
    doc = json.loads(outputs[[p.name for p in outputs].index("correlations.json")].read_text())
    for pair in doc["pairs"]:
        c = pair["coefficient"]
        print(f"{pair['a']:>16} {pair['b']:<16} n={pair['n']:<4} "
              f"{'null' if c is None else f'{c:+.3f}'}")
    print((Path(args.out) / "report" / "gof.txt").read_text().strip())
    print((Path(args.out) / "report" / "logfit.txt").read_text().strip())
    print(f"{len(outputs)} outputs in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
