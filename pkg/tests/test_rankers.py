import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import TINY, UNIVERSITIES
from wikirank import stats
from wikirank.corpus import build_store
from wikirank.rankers import (
    DEFAULT_INFOBOX_WEIGHTS,
    BenchmarkRanking,
    RankingList,
    WeightVector,
    combine_rankings,
    count_attribute_group,
    filter_universe,
    fit_component_weights,
    incoming_link_counts,
    infobox_components,
    infobox_score,
    inout_ratios,
    load_aliases,
    load_attribute_groups,
    load_benchmark,
    rank_incoming_links,
    rank_infobox,
    rank_inout_ratio,
    rank_pageviews,
    scale_components,
    snap_ties,
)
from wikirank.wikitext import parse_wikitext

H, M, S, T, Y = UNIVERSITIES

# hand-enumerated from fixtures/tiny/dump.xml
IN_LINKS = {H: 7, M: 4, Y: 3, S: 3, T: 1}
RATIO = {H: 7 / 3, M: 4 / 3, Y: 3.0, S: 1.5, T: 1.0}
VIEWS = {H: 200, M: 105, Y: 50, S: 100, T: 25}
FACULTY = {H: 2, M: 2, Y: 0, S: 1, T: 0}
ALUMNI = {H: 2, M: 0, Y: 1, S: 0, T: 1}
OTHER = {H: 0, M: 0, Y: 1, S: 1, T: 0}
VISIBILITY = {H: 5, M: 2, Y: 2, S: 2, T: 0}
INFOBOX = {H: 0.9, M: 0.54, Y: 0.29, S: 0.39, T: 0.15}


def store_of(pages: dict, kinds=None):
    return build_store([parse_wikitext(t, x) for t, x in pages.items()], kinds or {})


def test_tiny_link_counts(tiny_store):
    assert incoming_link_counts(tiny_store, UNIVERSITIES) == IN_LINKS
    ranking = rank_incoming_links(tiny_store, UNIVERSITIES)
    assert ranking.order() == [H, M, S, Y, T]
    assert ranking.ranks() == {H: 1, M: 2, S: 3.5, Y: 3.5, T: 5}


def test_tiny_ratio_and_views(tiny_store):
    ratios = inout_ratios(tiny_store, UNIVERSITIES)
    assert all(ratios[u] == pytest.approx(v, abs=1e-15) for u, v in RATIO.items())
    assert rank_pageviews(tiny_store, UNIVERSITIES).scores() == VIEWS


def test_tiny_infobox_components(tiny_store):
    comps = infobox_components(tiny_store, UNIVERSITIES)
    assert comps["faculty"] == FACULTY and comps["alumni"] == ALUMNI
    assert comps["other_affiliations"] == OTHER and comps["visibility"] == VISIBILITY
    scores = rank_infobox(tiny_store, UNIVERSITIES).scores()
    for u, v in INFOBOX.items():
        assert abs(scores[u] - v) <= 1e-12


def test_tiny_faculty_only_weights(tiny_store):
    ranking = rank_infobox(tiny_store, UNIVERSITIES,
                           WeightVector({"faculty": 1, "alumni": 0, "visibility": 0, "other_affiliations": 0}))
    assert ranking.ranks() == {H: 1.5, M: 1.5, S: 3, T: 4.5, Y: 4.5}


def test_missing_entity_scores_zero(tiny_store, caplog):
    assert incoming_link_counts(tiny_store, ["Nowhere University"]) == {"Nowhere University": 0.0}
    assert "not in corpus" in caplog.text


def test_link_rules():
    s = store_of({"A": "[[C]] [[C]] [[C]]", "B": "[[R]]", "R": "#REDIRECT [[C]]", "C": "x", "D": "y"})
    assert incoming_link_counts(s, ["C", "D"]) == {"C": 2.0, "D": 0.0}


def test_ratio_rules():
    pages = {f"S{i}": "[[E]]" for i in range(6)}
    pages["E"] = "[[X]] [[Y]] [[Z]] [[X]]"
    pages["F"] = "no links"
    pages.update({f"G{i}": "[[F]]" for i in range(4)})
    pages["Z0"] = "[[X]]"
    r = inout_ratios(store_of(pages), ["E", "F", "Z0"])
    assert r == {"E": 2.0, "F": 4.0, "Z0": 0.0}


def test_pageview_ordering():
    s = store_of({"A": "", "B": "", "C": ""}).with_views({"A": 100, "B": 90})
    ranking = rank_pageviews(s, ["A", "B", "C"])
    assert ranking.ranks() == {"A": 1, "B": 2, "C": 3}
    assert ranking.scores()["C"] == 0


def test_ranking_csv_format():
    csv_text = RankingList.from_scores("x", {"b, inc": 1.0, "a": 1.0, "c": 0.5}).to_csv()
    assert csv_text == 'rank,entity,score\n1.5,a,1.000000\n1.5,"b, inc",1.000000\n3,c,0.500000\n'


@pytest.mark.parametrize("args, expected", [
    ((1, 1, 1, 1), 1.0),
    ((1, 0, 0, 0), 0.5),
    ((0, 1, 0.5, 0.5), 0.40),
])
def test_infobox_score_examples(args, expected):
    assert infobox_score(*args) == pytest.approx(expected, abs=1e-15)


def test_infobox_score_negative():
    with pytest.raises(ValueError):
        infobox_score(-0.1, 0, 0, 0)


def test_attribute_membership_not_multiplicity():
    kinds = {"MIT": "University", "Yale University": "University", "P": "Person"}
    s = store_of({"MIT": "x", "Yale University": "y",
                  "P": "{{Infobox person|employer=[[MIT]]|workplaces=[[MIT]]|alma_mater=[[Yale University]]}}"},
                 kinds)
    groups = {g.group_id: g for g in load_attribute_groups()}
    assert count_attribute_group(s, "MIT", groups["faculty"]) == 1
    assert count_attribute_group(s, "Yale University", groups["alumni"]) == 1
    assert count_attribute_group(s, "Yale University", groups["faculty"]) == 0


def test_attribute_plain_text_values():
    kinds = {"Harvard University": "University"}
    pages = {"Harvard University": "x"}
    for i in range(3):
        pages[f"P{i}"] = "{{Infobox person|education=Harvard University}}"
        kinds[f"P{i}"] = "Person"
    s = store_of(pages, kinds)
    alumni = {g.group_id: g for g in load_attribute_groups()}["alumni"]
    assert count_attribute_group(s, "Harvard University", alumni) == 3


def test_default_groups_disjoint():
    groups = load_attribute_groups()
    assert {g.group_id for g in groups} == {"faculty", "alumni", "other_affiliations"}
    for a, b in itertools.combinations(groups, 2):
        assert not a.keys & b.keys


def test_benchmarks_and_universe(tiny_store):
    aliases = load_aliases(TINY / "aliases.tsv")
    benches = [load_benchmark(TINY / f"{n}.csv", aliases) for n in ("arwu", "the", "webometrics")]
    assert benches[2].positions["University of Toronto"] == 4
    uni = filter_universe(tiny_store, benches, min_appearances=2)
    assert uni.entities == frozenset(UNIVERSITIES)
    assert uni.unmatched == {"arwu": ("Atlantis University",)}
    only_two = filter_universe(tiny_store, benches[:1], min_appearances=2)
    assert only_two.entities == frozenset()
    with pytest.raises(ValueError):
        filter_universe(tiny_store, benches, min_appearances=0)


def test_universe_min_rule():
    kinds = {u: "University" for u in "ABC"}
    s = store_of({"A": "", "B": "", "C": ""}, kinds)
    arwu = BenchmarkRanking("arwu", {"A": 1, "B": 2})
    the = BenchmarkRanking("the", {"A": 1})
    web = BenchmarkRanking("web", {"C": 1})
    assert filter_universe(s, [arwu, the, web], 2).entities == {"A"}


def test_weight_vector():
    w = WeightVector({"a": 2, "b": 6})
    assert w.weights == {"a": 0.25, "b": 0.75}
    for bad in ({}, {"a": -1, "b": 2}, {"a": 0, "b": 0}, {"a": math.nan}):
        with pytest.raises(ValueError):
            WeightVector(bad)
    assert DEFAULT_INFOBOX_WEIGHTS.components == ("faculty", "alumni", "visibility", "other_affiliations")


def test_combine_examples():
    comps = {"c1": {"X": 1.0, "Y": 0.0, "Z": 0.5}, "c2": {"X": 0.0, "Y": 1.0, "Z": 0.2},
             "c3": {"X": 0.3, "Y": 0.3, "Z": 0.9}}
    proj = combine_rankings(comps, WeightVector({"c1": 1, "c2": 0, "c3": 0}))
    assert proj.order() == ["X", "Z", "Y"]
    half = combine_rankings({"a": {"X": 1.0, "Y": 0.0}, "b": {"X": 0.0, "Y": 1.0}},
                            WeightVector({"a": 0.5, "b": 0.5}))
    assert half.scores() == {"X": 0.5, "Y": 0.5} and half.order() == ["X", "Y"]
    same = {"a": {u: 0.4 for u in "PQRS"}, "b": {u: 0.4 for u in "PQRS"}}
    ranks = combine_rankings(same, WeightVector({"a": 0.3, "b": 0.7})).ranks()
    assert set(ranks.values()) == {2.5}


def test_combine_missing_entity_warns(caplog):
    ranking = combine_rankings({"a": {"X": 1.0, "Y": 0.5}, "b": {"X": 1.0}},
                               WeightVector({"a": 0.5, "b": 0.5}))
    assert ranking.scores() == {"X": 1.0, "Y": 0.25}
    assert "lacks 1 entities" in caplog.text


def test_snap_ties():
    v = np.array([0.3, 0.1 + 0.2, 0.5])
    assert v[0] != v[1]
    snapped = snap_ties(v)
    assert snapped[0] == snapped[1] and snapped[2] == 0.5
    rows = snap_ties(np.vstack([v, v[::-1]]))
    assert rows[0, 0] == rows[0, 1] and rows[1, 1] == rows[1, 2]


# ---------------------------------------------------------------- weight fitting

def _random_components(seed, n=25, k=3, ties=False):
    rng = np.random.default_rng(seed)
    ents = [f"e{i:02d}" for i in range(n)]
    comps = {}
    for c in range(k):
        vals = rng.integers(0, 6, n) if ties else rng.random(n)
        comps[f"c{c}"] = dict(zip(ents, map(float, vals)))
    target = dict(zip(ents, map(float, stats.fractional_ranks(rng.random(n)))))
    return comps, target


def test_fit_identity_target():
    comps, _ = _random_components(3)
    target = RankingList.from_scores("t", comps["c1"]).ranks()
    fit = fit_component_weights(comps, BenchmarkRanking("t", target))
    assert fit.tau == 1.0 and fit.n == 25
    assert fit.weights["c1"] > 0


def test_fit_common_order_any_weights():
    ents = [f"e{i}" for i in range(10)]
    comps = {"a": {e: float(i) for i, e in enumerate(ents)}, "b": {e: float(i * i) for i, e in enumerate(ents)}}
    target = {e: float(10 - i) for i, e in enumerate(ents)}
    assert fit_component_weights(comps, target).tau == 1.0


@pytest.mark.parametrize("seed", range(6))
def test_fit_dominates_single_components(seed):
    comps, target = _random_components(seed, ties=seed % 2 == 1)
    fit = fit_component_weights(comps, target)
    strength = [-target[e] for e in sorted(target)]
    for c in comps.values():
        single = stats.kendall_tau([c[e] for e in sorted(target)], strength).coefficient
        assert fit.tau >= single - 1e-9
    assert sum(fit.weights.weights.values()) == pytest.approx(1.0)
    assert min(fit.weights.weights.values()) >= 0


def test_fit_reported_tau_is_reproducible():
    comps, target = _random_components(11)
    fit = fit_component_weights(comps, target)
    combined = combine_rankings(scale_components(comps), fit.weights)
    strength = [-target[e] for e in sorted(target)]
    scores = combined.scores()
    assert stats.kendall_tau([scores[e] for e in sorted(target)], strength).coefficient == \
        pytest.approx(fit.tau, abs=1e-12)


def test_fit_deterministic():
    comps, target = _random_components(5)
    assert fit_component_weights(comps, target) == fit_component_weights(comps, target)


def test_fit_errors():
    comps, target = _random_components(1)
    with pytest.raises(ValueError, match="insufficient overlap"):
        fit_component_weights(comps, {"e00": 1.0, "e01": 2.0})
    with pytest.raises(ValueError):
        fit_component_weights({"c0": comps["c0"]}, target)


# ---------------------------------------------------------------- properties

@settings(max_examples=100, deadline=None)
@given(st.dictionaries(st.sampled_from("ABCDEFGH"), st.floats(0, 1e6, allow_nan=False), min_size=1),
       st.floats(1e-3, 1e3))
def test_order_invariant_under_scaling(scores, c):
    a = RankingList.from_scores("m", scores)
    b = RankingList.from_scores("m", {k: v * c for k, v in scores.items()})
    assert a.order() == b.order()


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("ABCDE"), st.sampled_from("ABCDE")), max_size=20),
       st.sampled_from("ABCDE"))
def test_new_citer_never_decreases_score(edges, target):
    pages = {t: " ".join(f"[[{b}]]" for a, b in edges if a == t) for t in "ABCDE"}
    before = incoming_link_counts(store_of(pages), [target])[target]
    pages["Newcomer"] = f"[[{target}]]"
    after = incoming_link_counts(store_of(pages), [target])[target]
    assert after == before + 1


@settings(max_examples=50, deadline=None)
@given(st.permutations(list(range(8))))
def test_permutation_independence(order):
    kinds = {"U1": "University", "U2": "University"}
    pages = [("U1", "[[U2]]"), ("U2", "[[U1]]"), ("P1", "{{Infobox person|employer=[[U1]]}}"),
             ("P2", "{{Infobox person|alma_mater=U2}} [[U1]]"), ("R", "#REDIRECT [[U2]]"),
             ("P3", "[[R]] U1"), ("X", "U2 and U1"), ("Y", "[[U1]]")]
    for t in ("P1", "P2", "P3"):
        kinds[t] = "Person"
    shuffled = build_store([parse_wikitext(*pages[i]) for i in order], kinds)
    base = build_store([parse_wikitext(*p) for p in pages], kinds)
    for fn in (rank_incoming_links, rank_inout_ratio, rank_infobox):
        assert fn(shuffled, ["U1", "U2"]) == fn(base, ["U1", "U2"])
