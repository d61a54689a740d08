import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from surfgen.corpus import Template, parse_template_line, read_templates
from surfgen.errors import DuplicateJudgment, EvaluationError, MissingJudgment
from surfgen.evalkit import (
    Judgment,
    Rank,
    dedupe_attribute_sets,
    error_reduction,
    exact_match_judgments,
    format_judgments,
    parse_judgments,
    read_judgments,
    score_report,
)

FIXTURES = Path(__file__).parent / "fixtures"


def fs(*names):
    return frozenset(names)


def test_dedupe_counts_multiplicity():
    test = [parse_template_line("flights from $city-fr to $city-to")] * 741 + \
           [parse_template_line("from $city-fr to $city-to"), parse_template_line("flights to $city-to")]
    counts = dict(dedupe_attribute_sets(test))
    assert counts[fs("$city-fr", "$city-to")] == 742
    assert counts[fs("$city-to")] == 1
    assert sum(counts.values()) == len(test)


def test_dedupe_all_distinct():
    test = [Template.of([f"$a{i}"]) for i in range(5)]
    assert [c for _, c in dedupe_attribute_sets(test)] == [1] * 5


def test_error_reduction_formula():
    assert error_reduction(0.899, 0.849) == pytest.approx(33.11, abs=0.01)
    assert error_reduction(0.849, 0.849) == 0.0


def test_published_weighted_rates_give_33():
    counts = dedupe_attribute_sets(read_templates(FIXTURES / "weighted_test.txt"))
    report = score_report(read_judgments(FIXTURES / "weighted_judgments.tsv"), counts)
    w = report.weighted
    assert w["nlg1"][Rank.CORRECT] == pytest.approx(84.9)
    assert w["nlg3"][Rank.CORRECT] == pytest.approx(89.9)
    assert [w["nlg3"][r] for r in Rank] == pytest.approx([89.9, 4.4, 5.5, 0.2])
    assert abs(report.error_reduction["weighted"]["nlg3"] - 33) <= 1
    assert round(report.error_reduction["weighted"]["nlg2"]) == 22


def test_three_set_fixture_by_hand():
    counts = {fs("$a"): 5, fs("$b"): 3, fs("$a", "$b"): 2}
    judgments = [
        Judgment(fs("$a"), "nlg1", Rank.CORRECT), Judgment(fs("$b"), "nlg1", Rank.BAD),
        Judgment(fs("$a", "$b"), "nlg1", Rank.NO_OUTPUT),
        Judgment(fs("$a"), "nlg2", Rank.CORRECT), Judgment(fs("$b"), "nlg2", Rank.OK),
        Judgment(fs("$a", "$b"), "nlg2", Rank.CORRECT),
    ]
    r = score_report(judgments, counts)
    # weighted: nlg1 5/10 correct, 3/10 bad, 2/10 no output; nlg2 7/10 correct, 3/10 ok
    assert [r.weighted["nlg1"][k] for k in Rank] == pytest.approx([50, 0, 30, 20])
    assert [r.weighted["nlg2"][k] for k in Rank] == pytest.approx([70, 30, 0, 0])
    assert [r.unweighted["nlg1"][k] for k in Rank] == pytest.approx([100 / 3, 0, 100 / 3, 100 / 3])
    assert [r.unweighted["nlg2"][k] for k in Rank] == pytest.approx([200 / 3, 100 / 3, 0, 0])
    assert r.error_reduction["weighted"]["nlg2"] == pytest.approx(40.0)
    assert r.error_reduction["unweighted"]["nlg2"] == pytest.approx(50.0)
    assert r.error_reduction["weighted"]["nlg1"] is None


def test_all_correct():
    counts = {fs("$a"): 4, fs("$b"): 1}
    r = score_report([Judgment(a, "nlg1", Rank.CORRECT) for a in counts], counts)
    assert [r.weighted["nlg1"][k] for k in Rank] == [100.0, 0.0, 0.0, 0.0]


def test_missing_and_duplicate_judgments():
    counts = {fs("$a"): 1, fs("$b"): 1}
    with pytest.raises(MissingJudgment) as err:
        score_report([Judgment(fs("$a"), "nlg1", Rank.OK)], counts)
    assert "$b" in str(err.value)
    with pytest.raises(DuplicateJudgment):
        score_report([Judgment(fs("$a"), "nlg1", Rank.OK)] * 2
                     + [Judgment(fs("$b"), "nlg1", Rank.OK)], counts)
    with pytest.raises(EvaluationError):
        score_report([Judgment(fs("$c"), "nlg1", Rank.OK)], counts)
    with pytest.raises(EvaluationError):
        score_report([Judgment(a, "nlg3", Rank.OK) for a in counts], counts, baseline="nlg1")


ranks = st.sampled_from(list(Rank))


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 50), ranks, ranks), min_size=1, max_size=20),
       st.randoms(use_true_random=False))
def test_report_invariants(rows, rnd):
    counts = {fs(f"$s{i}"): c for i, (c, _, _) in enumerate(rows)}
    judgments = [Judgment(fs(f"$s{i}"), "nlg1", r1) for i, (_, r1, _) in enumerate(rows)] + \
                [Judgment(fs(f"$s{i}"), "nlg3", r3) for i, (_, _, r3) in enumerate(rows)]
    r = score_report(judgments, counts)
    for s in ("nlg1", "nlg3"):
        assert sum(r.weighted[s].values()) == pytest.approx(100.0, abs=0.1)
        assert sum(r.unweighted[s].values()) == pytest.approx(100.0, abs=0.1)
    shuffled = list(judgments)
    rnd.shuffle(shuffled)
    r2 = score_report(shuffled, counts)
    assert r2.weighted == r.weighted and r2.unweighted == r.unweighted
    ones = score_report(judgments, {a: 1 for a in counts})
    assert ones.weighted == ones.unweighted


def test_judgment_file_round_trip():
    js = [Judgment(fs("$b", "$a"), "nlg2", Rank.OK), Judgment(fs("$c"), "nlg3", Rank.NO_OUTPUT)]
    text = format_judgments(js)
    assert text == "nlg2\t$a,$b\tOK\nnlg3\t$c\tNoOutput\n"
    assert parse_judgments(text.splitlines()) == js


def test_bad_judgment_lines():
    with pytest.raises(EvaluationError):
        parse_judgments(["nlg1\t$a"])
    with pytest.raises(EvaluationError):
        parse_judgments(["nlg1\t$a\tGreat"])


def test_exact_match_judging():
    outputs = {fs("$a"): Template.of(["to", "$a"]), fs("$b"): None, fs("$c"): Template.of(["x", "$c"])}
    accepts = {("to", "$a")}.__contains__
    js = {j.attribute_set: j.rank for j in
          exact_match_judgments("nlg2", outputs, lambda t: accepts(t.tokens))}
    assert js == {fs("$a"): Rank.CORRECT, fs("$b"): Rank.NO_OUTPUT, fs("$c"): Rank.BAD}


def test_report_format_columns():
    counts = {fs("$a"): 2}
    text = score_report([Judgment(fs("$a"), "nlg1", Rank.CORRECT),
                         Judgment(fs("$a"), "nlg3", Rank.BAD)], counts).format()
    assert "% Correct" in text and "% No output" in text and "% error reduction" in text
    assert "Weighted evaluation" in text and "Unweighted evaluation" in text
