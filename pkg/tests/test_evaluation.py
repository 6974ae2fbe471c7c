import math
import random

import pytest
from hypothesis import given, strategies as st

from iecache.datasets import GoldTable
from iecache.evaluation import (MetricReport, dumps_report, exact_match, extraction_quality, lcs_length, linearize,
                                normalize_answer, pct, report_text, rouge_l, rouge_n, score_item)
from iecache.extraction import RecordRow, RecordSet
from iecache.schema import ExtractionSchema, SchemaSlot

from oracles import brute_lcs, brute_rouge_l, brute_rouge_n, random_tokens


@pytest.mark.parametrize("raw,norm", [('  Yes. ', "yes"), ("Monday,  10am", "monday, 10am"),
                                      ('"Carol."', "carol"), ("...", ""), ("'quoted' !", "quoted")])
def test_normalize_examples(raw, norm):
    assert normalize_answer(raw) == norm


@given(st.text())
def test_normalize_idempotent(s):
    assert normalize_answer(normalize_answer(s)) == normalize_answer(s)


def test_exact_match_examples():
    assert exact_match("Yes.", ["yes"]) == 1
    assert exact_match("42", ["43"]) == 0
    assert exact_match("b", ["a", "B"]) == 1
    with pytest.raises(ValueError):
        exact_match("a", [])


def test_rouge_examples():
    assert rouge_n("the cat sat", ["the cat sat"])[2] == 1.0
    assert rouge_n("a b", ["c d"])[2] == 0.0
    p, r, f = rouge_n("the cat", ["the cat sat"], 1)
    assert p == 1.0 and r == 2 / 3 and f == pytest.approx(0.8, abs=1e-15)
    assert lcs_length("a b c d".split(), "a c b d".split()) == 3
    assert rouge_l("a b c d", ["a c b d"])[2] == 0.75
    assert rouge_l("same text", ["same text"])[2] == 1.0
    assert rouge_l("", ["x"]) == (0.0, 0.0, 0.0)
    assert rouge_l("", [""]) == (1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        rouge_n("a", ["a"], 0)


def test_max_over_references():
    assert rouge_n("a b", ["c d", "a b"])[2] == 1.0
    assert rouge_l("a b", ["x", "a"])[2] == pytest.approx(2 / 3)


def test_oracle_agreement_randomized():
    rng = random.Random(7)
    vocab = list("abcde")
    for _ in range(300):
        pred, ref = random_tokens(rng, vocab), random_tokens(rng, vocab)
        for n in (1, 2):
            got = rouge_n(" ".join(pred), [" ".join(ref)], n)
            assert all(math.isclose(g, e, abs_tol=1e-9) for g, e in zip(got, brute_rouge_n(pred, ref, n)))
        got = rouge_l(" ".join(pred), [" ".join(ref)])
        assert all(math.isclose(g, e, abs_tol=1e-9) for g, e in zip(got, brute_rouge_l(pred, ref)))
        assert lcs_length(pred, ref) == brute_lcs(pred, ref)


toks = st.lists(st.sampled_from("abcde"), max_size=8).map(" ".join)


@given(toks, toks, st.integers(1, 3))
def test_rouge_f1_symmetric(a, b, n):
    pa, ra, fa = rouge_n(a, [b], n)
    pb, rb, fb = rouge_n(b, [a], n)
    assert (pa, ra) == (rb, pb) and math.isclose(fa, fb)
    assert 0 <= fa <= 1


@given(toks, toks)
def test_rouge_l_in_range(a, b):
    assert all(0 <= v <= 1 for v in rouge_l(a, [b]))


def test_extraction_quality():
    schema = ExtractionSchema((SchemaSlot("who"), SchemaSlot("day")))
    rows = [RecordRow.build(schema, {"who": "Alice", "day": "Monday"}),
            RecordRow.build(schema, {"who": "Bob", "day": None})]
    gold = GoldTable(("who", "day"), (("Alice", "Monday"), ("Bob", None)))
    assert extraction_quality(RecordSet(schema, rows), gold) == (1.0, 1.0)
    assert extraction_quality(RecordSet(schema, []), gold) == (0.0, 0.0)
    assert extraction_quality(RecordSet(schema, rows), None) == (None, None)
    reordered = GoldTable(("who", "day"), (("Bob", None), ("Alice", "Monday")))
    r1, rl = extraction_quality(RecordSet(schema, rows), reordered)
    assert rl < 1.0 and r1 < 1.0  # linearizations differ, so order matters
    assert linearize(["who", "day"], [{"who": "Bob", "day": None}]) == "who: Bob; day: "


def test_metric_report_aggregates():
    items = [score_item("a", "yes", ["yes"]), score_item("b", "no", ["yes"]), score_item("c", None, ["x"], "boom")]
    rep = MetricReport(items)
    assert rep.n == 3
    assert rep.aggregates["em"] == 0.5
    assert rep.aggregates["x_rouge1_f"] is None
    assert MetricReport.from_json(rep.to_json()).to_json() == rep.to_json()
    assert pct(0.71774) == "71.77" and pct(None) == "-"
    assert "MEAN" in report_text(rep)
    assert dumps_report({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'


@given(st.lists(st.tuples(toks, toks), min_size=1, max_size=6))
def test_aggregates_are_means(pairs):
    items = [score_item(str(i), p, [g]) for i, (p, g) in enumerate(pairs)]
    agg = MetricReport(items).aggregates
    for m in ("em", "rouge1_f", "rougeL_f"):
        assert abs(agg[m] - sum(getattr(it, m) for it in items) / len(items)) < 1e-12
