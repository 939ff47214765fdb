import csv
import io
import json
import shutil

import numpy as np
import pytest

from conftest import TINY, UNIVERSITIES
from wikirank import stats
from wikirank.cli import main

H, M, S, T, Y = UNIVERSITIES
BENCH = [f for n in ("arwu", "the", "webometrics") for f in ("--benchmark", str(TINY / f"{n}.csv"))]
ALIASES = ["--aliases", str(TINY / "aliases.tsv")]


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "store.json"
    assert main(["ingest", "--dump", str(TINY / "dump.xml"), "--type-map", str(TINY / "type_map.tsv"),
                 "--pageviews", str(TINY / "pageviews"), "--out", str(path), "--quiet"]) == 0
    return path


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_ingest_summary(tmp_path, capsys):
    code, out, err = run(capsys, "ingest", "--dump", str(TINY / "dump.xml"), "--type-map",
                         str(TINY / "type_map.tsv"), "--pageviews", str(TINY / "pageviews"),
                         "--out", str(tmp_path / "s.json"))
    assert code == 0 and out == ""
    assert "pages=12 redirects=1 links=23 citations=24 pageviews_accepted=11 pageviews_skipped=4" in err


def test_ingest_byte_identical(store, tmp_path):
    again = tmp_path / "again.json"
    main(["ingest", "--dump", str(TINY / "dump.xml"), "--type-map", str(TINY / "type_map.tsv"),
          "--pageviews", str(TINY / "pageviews"), "--out", str(again), "--quiet"])
    assert again.read_bytes() == store.read_bytes()


def test_output_parent_created(store, tmp_path, capsys):
    out = tmp_path / "new" / "dir" / "links.csv"
    code, _, _ = run(capsys, "rank", "--store", str(store), "--method", "links", *BENCH, *ALIASES,
                     "--out", str(out))
    assert code == 0 and out.read_text().startswith("rank,entity,score\n")


def test_ingest_missing_dump(tmp_path, capsys):
    code, out, err = run(capsys, "ingest", "--dump", str(tmp_path / "nope.xml"), "--out", str(tmp_path / "s"))
    assert code == 2 and "nope.xml" in err and out == ""


def test_ingest_truncated_dump(tmp_path, capsys):
    bad = tmp_path / "bad.xml"
    bad.write_bytes((TINY / "dump.xml").read_bytes()[:900])
    code, _, err = run(capsys, "ingest", "--dump", str(bad), "--out", str(tmp_path / "s"))
    assert code == 2 and "last complete page index" in err


def test_unknown_method_is_usage_error(store):
    with pytest.raises(SystemExit) as exc:
        main(["rank", "--store", str(store), "--method", "pagerank"])
    assert exc.value.code == 2


def test_rank_links_csv(store, capsys):
    code, out, _ = run(capsys, "rank", "--store", str(store), "--method", "links", *BENCH, *ALIASES)
    assert code == 0
    assert out == ("rank,entity,score\n"
                   f"1,{H},7.000000\n2,{M},4.000000\n3.5,{S},3.000000\n3.5,{Y},3.000000\n5,{T},1.000000\n")


def test_rank_infobox_faculty_projection(store, capsys):
    code, out, _ = run(capsys, "rank", "--store", str(store), "--method", "infobox",
                       "--weight-overrides", "1,0,0,0", *BENCH, *ALIASES)
    assert code == 0
    assert [(r["rank"], r["entity"]) for r in rows(out)] == [
        ("1.5", H), ("1.5", M), ("3", S), ("4.5", T), ("4.5", Y)]


def test_rank_combined_deterministic(store, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["rank", "--store", str(store), "--method", "combined", *BENCH, *ALIASES,
                     "--out", str(p), "--quiet"]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_rank_empty_universe(store, capsys):
    code, _, err = run(capsys, "rank", "--store", str(store), "--method", "links",
                       "--benchmark", str(TINY / "arwu.csv"))
    assert code == 3 and "empty universe after filtering" in err


def test_rank_journals(store, capsys):
    code, out, _ = run(capsys, "rank", "--store", str(store), "--method", "journals",
                       "--impact-factors", str(TINY / "impact_factors.csv"))
    assert code == 0
    table = rows(out)
    assert len(table) == 6
    assert table[0]["journal"] == "IEEE TRANSACTIONS ON PATTERN ANALYSIS AND MACHINE INTELLIGENCE"
    assert (table[0]["citers"], table[0]["citations"], table[0]["has_page"]) == ("4", "14", "1")


def test_fit_identity_target(store, tmp_path, capsys):
    target = tmp_path / "target.csv"
    target.write_text("rank,name\n1,Harvard University\n2,Massachusetts Institute of Technology\n"
                      "3,Stanford University\n3,Yale University\n5,University of Toronto\n")
    code, out, err = run(capsys, "fit", "--store", str(store), "--method", "combined",
                         "--target", str(target), *BENCH, *ALIASES)
    assert code == 0 and "tau=1.000000 n=5" in err
    assert [line.split("\t")[0] for line in out.splitlines()] == ["incoming_links", "pageviews", "infobox"]


def test_fit_missing_target(store, tmp_path, capsys):
    code, _, _ = run(capsys, "fit", "--store", str(store), "--method", "combined",
                     "--target", str(tmp_path / "missing.csv"))
    assert code == 2


def test_fit_insufficient_overlap(store, tmp_path, capsys):
    target = tmp_path / "t.csv"
    target.write_text("rank,name\n1,Harvard University\n2,Yale University\n")
    code, _, err = run(capsys, "fit", "--store", str(store), "--method", "links",
                       "--target", str(target), *BENCH, *ALIASES)
    assert code == 3 and "insufficient overlap" in err


def test_fit_journals_recovers_coefficients(tmp_path, capsys):
    rng = np.random.default_rng(4)
    pages, ifs = [], []
    for j in range(10):
        name = f"Journal {j}"
        citers = int(rng.integers(1, 6))
        per = [int(rng.integers(1, 4)) for _ in range(citers)]
        for c, k in enumerate(per):
            pages.append((f"P{j}_{c}", "".join(f"{{{{cite journal|journal={name}}}}}" for _ in range(k))))
        if j % 2 == 0:
            pages.append((name, "{{Infobox journal}}"))
        ifs.append((name, citers, sum(per), j % 2 == 0))
    dump = tmp_path / "d.jsonl"
    dump.write_text("\n".join(json.dumps({"title": t, "ns": 0, "text": x}) for t, x in pages))
    lo_a, hi_a = min(r[1] for r in ifs), max(r[1] for r in ifs)
    lo_b, hi_b = min(r[2] for r in ifs), max(r[2] for r in ifs)
    target = tmp_path / "if.csv"
    lines = ["journal,if5"]
    for name, a, b, h in ifs:
        y = 4.3848 * (a - lo_a) / (hi_a - lo_a) + 4.42 * (b - lo_b) / (hi_b - lo_b) + 0.8238 * h
        lines.append(f"{name},{y!r}")
    target.write_text("\n".join(lines) + "\n")
    store = tmp_path / "s.json"
    assert main(["ingest", "--dump", str(dump), "--out", str(store), "--quiet"]) == 0
    code, out, _ = run(capsys, "fit", "--store", str(store), "--method", "journals", "--target", str(target))
    assert code == 0
    coef = {k: float(v) for k, v in (line.split("\t") for line in out.splitlines())}
    assert abs(coef["citers"] - 4.3848) <= 1e-6
    assert abs(coef["citations"] - 4.42) <= 1e-6
    assert abs(coef["has_page"] - 0.8238) <= 1e-6


def test_correlate_identity_and_oracle(store, tmp_path, capsys):
    paths = {}
    for m in ("links", "views", "infobox"):
        paths[m] = tmp_path / f"rank_{m}.csv"
        main(["rank", "--store", str(store), "--method", m, *BENCH, *ALIASES, "--out", str(paths[m]), "--quiet"])
    dup = tmp_path / "copy.csv"
    shutil.copy(paths["links"], dup)
    code, out, _ = run(capsys, "correlate", str(paths["links"]), str(dup))
    assert code == 0
    doc = json.loads(out)
    assert doc["pairs"][0]["coefficient"] == 1.0 and doc["pairs"][0]["n"] == 5
    assert set(doc) >= {"pairs", "universe_size", "filter", "config"}

    code, out, _ = run(capsys, "correlate", *map(str, paths.values()), "--coefficient", "spearman")
    doc = json.loads(out)
    cols = {m: {r["entity"]: float(r["rank"]) for r in rows(p.read_text())} for m, p in paths.items()}
    for cell in doc["pairs"]:
        a, b = cols[cell["a"][5:]], cols[cell["b"][5:]]
        ents = sorted(a)
        ref = stats.spearman_rho([-a[e] for e in ents], [-b[e] for e in ents])
        assert cell["coefficient"] == pytest.approx(ref.coefficient, abs=1e-12)
        assert cell["p_value"] == pytest.approx(ref.p_value, abs=1e-12)
    assert len(doc["pairs"]) == 3


def test_correlate_subset_null_cell(store, tmp_path, capsys):
    ranking = tmp_path / "r.csv"
    main(["rank", "--store", str(store), "--method", "links", *BENCH, *ALIASES, "--out", str(ranking), "--quiet"])
    subset = tmp_path / "subset.txt"
    subset.write_text("Harvard University\nYale University\n")
    code, out, _ = run(capsys, "correlate", str(ranking), str(TINY / "arwu.csv"), "--subset", str(subset))
    assert code == 0
    cell = json.loads(out)["pairs"][0]
    assert cell["coefficient"] is None and cell["reason"] == "insufficient overlap" and cell["n"] == 2


def test_correlate_aliases_match_benchmarks(store, tmp_path, capsys):
    ranking = tmp_path / "r.csv"
    main(["rank", "--store", str(store), "--method", "links", *BENCH, *ALIASES, "--out", str(ranking), "--quiet"])
    code, out, _ = run(capsys, "correlate", str(ranking), str(TINY / "webometrics.csv"), *ALIASES)
    assert json.loads(out)["pairs"][0]["n"] == 3


def test_correlate_needs_two_inputs(tmp_path, capsys):
    f = tmp_path / "a.csv"
    f.write_text("rank,entity,score\n1,A,1\n")
    assert run(capsys, "correlate", str(f))[0] == 2


def test_report_outputs(store, tmp_path, capsys):
    rng = np.random.default_rng(8)
    ranking = tmp_path / "r.csv"
    ranking.write_text("rank,entity,score\n" + "".join(
        f"{i + 1},E{i},{v:.6f}\n" for i, v in enumerate(sorted(rng.lognormal(1, 0.5, 2000), reverse=True))))
    out_dir = tmp_path / "rep"
    code, out, _ = run(capsys, "report", "--ranking", str(ranking), "--benchmark", str(ranking),
                       "--out", str(out_dir), "--bins", "20")
    assert code == 0
    gof_line, logfit_line = out.splitlines(keepends=True)
    assert gof_line == (out_dir / "gof.txt").read_text()
    assert float(gof_line.split("p=")[1]) > 0.05
    # ln(score) against the same score is monotone but not linear
    assert logfit_line == (out_dir / "logfit.txt").read_text()
    assert 0.9 < float(logfit_line.split("r=")[1].split()[0]) < 1.0
    hist = rows((out_dir / "histogram.csv").read_text())
    assert sum(int(r["observed"]) for r in hist) == 2000
    scatter = rows((out_dir / "scatter.csv").read_text())
    assert len(scatter) == 2000 and all(r["score_a"] == r["score_b"] for r in scatter)


@pytest.mark.parametrize("value, message", [("0", "positive support"), ("3.5", "zero variance")])
def test_report_constant_scores(tmp_path, capsys, value, message):
    ranking = tmp_path / "r.csv"
    ranking.write_text("rank,entity,score\n" + "".join(f"3,E{i},{value}\n" for i in range(30)))
    code, _, err = run(capsys, "report", "--ranking", str(ranking), "--out", str(tmp_path / "o"))
    assert code == 3 and message in err


def test_quiet_suppresses_info(store, capsys):
    code, _, err = run(capsys, "rank", "--store", str(store), "--method", "links", *BENCH, *ALIASES, "--quiet")
    assert code == 0 and err == ""
