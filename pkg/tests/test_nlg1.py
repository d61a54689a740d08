import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfgen.corpus import Template, parse_template_line
from surfgen.errors import SurfgenError
from surfgen.nlg1 import FrequencyTable, nlg1_generate, nlg1_ranked, train_nlg1


def T(text):
    return parse_template_line(text)


def test_counts_direct():
    table = train_nlg1([T("a $x"), T("a $x"), T("the $x")])
    assert table.counts == {frozenset({"$x"}): Counter({T("a $x"): 2, T("the $x"): 1})}
    assert table.total == 3


def test_single_template():
    table = train_nlg1([T("flights")])
    assert table.counts == {frozenset(): Counter({T("flights"): 1})}


def test_empty_corpus_rejected():
    with pytest.raises(SurfgenError):
        train_nlg1([])


def test_argmax_and_novel_set():
    table = train_nlg1([T("a $x"), T("a $x"), T("the $x")])
    assert nlg1_generate(table, {"$x"}) == T("a $x")
    assert nlg1_generate(table, {"$y"}) is None
    assert nlg1_generate(table, {"$x", "$y"}) is None


def test_tie_broken_by_text():
    table = train_nlg1([T("b $x"), T("a $x")])
    assert nlg1_generate(table, {"$x"}) == T("a $x")
    assert [t.text for t, _ in nlg1_ranked(table, {"$x"})] == ["a $x", "b $x"]


words = st.sampled_from(["a", "b", "flights", "to", "$x", "$y", "$z"])
templates = st.lists(words, min_size=1, max_size=5).filter(
    lambda ws: len([w for w in ws if w.startswith("$")]) == len({w for w in ws if w.startswith("$")}))


@settings(max_examples=100, deadline=None)
@given(st.lists(templates, min_size=1, max_size=40), st.randoms(use_true_random=False))
def test_matches_brute_force_tally(corpus, rnd):
    corpus = [Template.of(ws) for ws in corpus]
    table = train_nlg1(corpus)
    shuffled = list(corpus)
    rnd.shuffle(shuffled)
    assert train_nlg1(shuffled).counts == table.counts
    assert table.total == len(corpus)
    for attrs in {t.attributes for t in corpus}:
        tally = Counter(t for t in corpus if t.attributes == attrs)
        best = max(tally.values())
        expect = min(t.text for t, c in tally.items() if c == best)
        out = nlg1_generate(table, attrs)
        assert out.text == expect
        assert out in corpus


def test_save_load(tmp_path):
    rng = random.Random(1)
    corpus = [T(rng.choice(["a $x", "the $x to $y", "flights", "$y b"])) for _ in range(50)]
    table = train_nlg1(corpus)
    path = tmp_path / "t.nlg1"
    table.save(path)
    assert FrequencyTable.load(path).counts == table.counts
