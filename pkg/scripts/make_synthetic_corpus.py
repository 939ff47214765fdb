"""Generate the seeded synthetic corpus under fixtures/synth/.

Each university has a latent log-normal strength. People are affiliated
with universities in proportion to strength; link counts, pageviews and
benchmark ranks are all noisy functions of it, so the rankers should agree
with the benchmarks without agreeing perfectly.

    python scripts/make_synthetic_corpus.py [--out fixtures/synth] [--seed 7]
"""
from __future__ import annotations

import argparse
import json
from pathlib import Path

import numpy as np

FACULTY_KEYS = ("workplaces", "employer", "work_institution")
ALUMNI_KEYS = ("alma_mater", "education")
OTHER_KEYS = ("visitor_school", "college")
JOURNALS = [
    "Nature", "Science", "Cell", "The Lancet", "Physical Review Letters",
    "Journal of Machine Learning Research", "Machine Learning", "Artificial Intelligence",
    "IEEE Transactions on Pattern Analysis and Machine Intelligence",
    "Journal of Artificial Intelligence Research", "Neural Computation",
    "Pattern Recognition", "Computer Vision and Image Understanding",
    "International Journal of Computer Vision", "Data Mining and Knowledge Discovery",
    "Knowledge and Information Systems", "Information Sciences", "Neural Networks",
    "Expert Systems with Applications", "Applied Intelligence",
]
SYLLABLES = ["ka", "lo", "mi", "ren", "sa", "tor", "vel", "dan", "ori", "bel", "nus", "quar"]


def _word(rng, parts: int) -> str:
    return "".join(rng.choice(SYLLABLES, size=parts)).capitalize()


def _unique(rng, used: set, make) -> str:
    while True:
        name = make(rng)
        if name not in used:
            used.add(name)
            return name


def build(seed: int, n_uni: int = 150, n_person: int = 800, n_filler: int = 100):
    rng = np.random.default_rng(seed)
    used: set = set()
    unis = [_unique(rng, used, lambda r: f"University of {_word(r, 3)}") for _ in range(n_uni)]
    strength = rng.lognormal(0.0, 1.0, n_uni)
    p = strength / strength.sum()
    persons = [_unique(rng, used, lambda r: f"{_word(r, 2)} {_word(r, 3)}") for _ in range(n_person)]
    fillers = [_unique(rng, used, lambda r: f"{_word(r, 3)} River") for _ in range(n_filler)]
    journal_quality = rng.lognormal(0.0, 0.8, len(JOURNALS))
    jp = journal_quality / journal_quality.sum()

    pages = []
    for u, s in zip(unis, strength):
        k = int(rng.poisson(2 + 2 * np.log1p(s)))
        links = rng.choice(n_uni, size=k, p=p)
        body = " ".join(f"It cooperates with [[{unis[i]}]]." for i in links)
        pages.append({"title": u, "ns": 0,
                      "text": f"{{{{Infobox university | name = {u} }}}}\n'''{u}''' is a university. {body}"})
    for person in persons:
        fields = []
        for keys, prob in ((FACULTY_KEYS, 0.8), (ALUMNI_KEYS, 0.9), (OTHER_KEYS, 0.25)):
            if rng.random() < prob:
                key = keys[int(rng.integers(len(keys)))]
                target = unis[int(rng.choice(n_uni, p=p))]
                value = f"[[{target}]]" if rng.random() < 0.8 else target
                fields.append(f"| {key} = {value}")
        mentioned = unis[int(rng.choice(n_uni, p=p))]
        cites = rng.choice(len(JOURNALS), size=int(rng.integers(0, 4)), p=jp)
        refs = "".join(f"<ref>{{{{cite journal |journal={JOURNALS[j]} |title=T{n}}}}}</ref>"
                       for n, j in enumerate(cites))
        text = ("{{Infobox scientist\n| name = " + person + "\n" + "\n".join(fields) + "\n}}\n"
                f"'''{person}''' once visited {mentioned}.{refs}")
        pages.append({"title": person, "ns": 0, "text": text})
    for f in fillers:
        pages.append({"title": f, "ns": 0, "text": f"The '''{f}''' flows past [[{unis[int(rng.integers(n_uni))]}]]."})
    for j in JOURNALS[:12]:
        pages.append({"title": j, "ns": 0, "text": f"{{{{Infobox journal | title = {j} }}}}\n'''{j}''' is a journal."})
    for u in unis[:20]:
        pages.append({"title": u.replace("University of ", "") + " University", "ns": 0,
                      "text": f"#REDIRECT [[{u}]]"})

    order = rng.permutation(len(pages))
    pages = [pages[i] for i in order]

    views_a, views_b = [], []
    for u, s in zip(unis, strength):
        total = int(rng.poisson(200 * s) + 1)
        views_a.append(f"en {u.replace(' ', '_')} {total // 2} {total * 10}")
        views_b.append(f"en {u.replace(' ', '_')} {total - total // 2} {total * 10}")
        views_b.append(f"de {u.replace(' ', '_')} {int(rng.integers(1, 50))} 100")
    for u in unis[:20]:
        alias = u.replace("University of ", "") + " University"
        views_a.append(f"en {alias.replace(' ', '_')} {int(rng.integers(1, 30))} 100")

    def benchmark(noise):
        score = np.log(strength) + rng.normal(0, noise, n_uni)
        order = np.argsort(-score, kind="stable")
        keep = order[: int(n_uni * 0.8)]
        return [(r + 1, unis[i]) for r, i in enumerate(keep)]

    impact = {j: round(float(q * 5 + rng.normal(0, 0.5)), 3) for j, q in zip(JOURNALS, journal_quality)}
    north_america = sorted(rng.choice(unis, size=n_uni // 3, replace=False))
    return {
        "pages": pages,
        "type_map": [(u, "University") for u in unis] + [(pn, "Person") for pn in persons]
        + [(j, "Journal") for j in JOURNALS[:12]],
        "views": {"pagecounts-20131201-000000": views_a, "pagecounts-20131202-000000": views_b},
        "benchmarks": {"arwu": benchmark(0.4), "the": benchmark(0.5), "webometrics": benchmark(0.6)},
        "impact": impact,
        "north_america": north_america,
    }


def write(data: dict, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / "pageviews").mkdir(exist_ok=True)
    with open(out / "dump.jsonl", "w", encoding="utf-8", newline="\n") as fh:
        for page in data["pages"]:
            fh.write(json.dumps(page, ensure_ascii=False, sort_keys=True) + "\n")
    (out / "type_map.tsv").write_text("".join(f"{t}\t{k}\n" for t, k in data["type_map"]), "utf-8")
    for name, lines in data["views"].items():
        (out / "pageviews" / name).write_text("\n".join(lines) + "\n", "utf-8")
    for name, rows in data["benchmarks"].items():
        (out / f"{name}.csv").write_text(
            "rank,name\n" + "".join(f"{r},{n}\n" for r, n in rows), "utf-8")
    (out / "impact_factors.csv").write_text(
        "journal,if5\n" + "".join(f"{j},{v}\n" for j, v in data["impact"].items()), "utf-8")
    (out / "north_america.txt").write_text("\n".join(data["north_america"]) + "\n", "utf-8")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "fixtures" / "synth"))
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    write(build(args.seed), Path(args.out))
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
