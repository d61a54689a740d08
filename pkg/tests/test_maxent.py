import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_feature_counts, direct_prob
from surfgen.errors import SurfgenError
from surfgen.maxent import (
    ATTRS,
    STOP,
    Event,
    Feature,
    MaxentModel,
    Pattern,
    Vocabulary,
    conditional_prob,
    feature_counts,
    instantiate_features,
    log_likelihood,
    train_iis,
)

CTX = Pattern("ctx", ("c",))
PATTERNS = [
    Pattern("none", (), "empty"),
    Pattern("prev", ("p",), "member"),
    Pattern("pair", ("p", "q"), "member"),
    Pattern("plain", ("q",)),
]
WORDS = ["a", "b", "c", "$x", "$y"]


def three_of_four():
    return [Event({"c": "x"}, "a", 3), Event({"c": "x"}, "b", 1)]


def random_events(rng, n):
    events = []
    for _ in range(n):
        attrs = frozenset(a for a in ("$x", "$y") if rng.random() < 0.5)
        h = {"p": rng.choice(WORDS), "q": rng.choice(WORDS), ATTRS: attrs}
        events.append(Event(h, rng.choice(WORDS + [STOP]), rng.randint(1, 3)))
    return events


def random_model(rng):
    events = random_events(rng, rng.randint(1, 30))
    feats = instantiate_features(events, PATTERNS, 1)
    lw = [rng.uniform(-30, 30) for _ in feats]
    return MaxentModel(Vocabulary(WORDS), feats, lw, patterns=PATTERNS), events


# -- probabilities ------------------------------------------------------------------

def test_no_features_gives_uniform():
    m = MaxentModel(Vocabulary(["a", "b", "c"]), [])
    d = conditional_prob(m, {})
    assert set(d) == {"a", "b", "c", STOP}
    assert all(v == pytest.approx(0.25, abs=1e-15) for v in d.values())


def test_single_feature_with_weight_two():
    always = Pattern("always")
    f = Feature(always, (), "a")
    m = MaxentModel(Vocabulary(["a", "b"]), [f], [math.log(2.0)], patterns=[always])
    d = conditional_prob(m, {})
    assert d["a"] == pytest.approx(0.5, abs=1e-15)
    assert d["b"] == pytest.approx(0.25, abs=1e-15)
    assert d[STOP] == pytest.approx(0.25, abs=1e-15)
    assert m.features[0].weight == pytest.approx(2.0)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_distribution_normalised(seed):
    rng = random.Random(seed)
    m, _ = random_model(rng)
    for ev in random_events(rng, 3):
        p = np.exp(m.log_probs(ev.history))
        assert abs(p.sum() - 1.0) <= 1e-9
        assert np.all(p > 0) and np.all(p <= 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_prob_matches_definition(seed):
    rng = random.Random(seed)
    events = random_events(rng, 8)
    feats = instantiate_features(events, PATTERNS, 1)
    lw = [rng.uniform(-3, 3) for _ in feats]
    m = MaxentModel(Vocabulary(WORDS), feats, lw, patterns=PATTERNS)
    for ev in random_events(rng, 2) + events[:2]:
        for w in m.vocabulary.outcomes:
            expect = direct_prob(feats, lw, m.vocabulary, w, ev.history)
            assert m.prob(w, ev.history) == pytest.approx(expect, rel=1e-12)


def test_vocabulary_rejects_stop_word():
    with pytest.raises(SurfgenError):
        Vocabulary(["a", STOP])


def test_vocabulary_indexing():
    v = Vocabulary(["b", "a", "b"])
    assert v.outcomes == ("a", "b", STOP)
    assert [v.index[w] for w in v.outcomes] == [0, 1, 2]
    assert v.stop_index == 2 and len(v) == 2


# -- features ------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_instantiation_matches_brute_force(seed, cutoff):
    events = random_events(random.Random(seed), 10)
    feats = instantiate_features(events, PATTERNS, cutoff)
    expected = {k for k, c in brute_force_feature_counts(events, PATTERNS).items() if c >= cutoff}
    assert {(f.pattern.name, f.values, f.outcome) for f in feats} == expected
    assert len(feats) == len(expected)
    assert np.all(feature_counts(feats, events) >= cutoff)


def test_bigram_feature_instance():
    events = [Event({"p": "flight", "q": "*bos*", ATTRS: frozenset({"$city-fr"})}, "from")] * 3
    feats = instantiate_features(events, PATTERNS, 3)
    assert any(f.pattern.name == "prev" and f.values == ("flight", "$city-fr") and f.outcome == "from"
               for f in feats)


def test_cutoff_above_corpus_size_gives_nothing():
    events = random_events(random.Random(0), 10)
    assert instantiate_features(events, PATTERNS, 1000) == []


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_features_are_binary(seed):
    rng = random.Random(seed)
    events = random_events(rng, 6)
    for f in instantiate_features(events, PATTERNS, 1):
        for ev in random_events(rng, 4) + events:
            for w in WORDS + [STOP]:
                assert f.fires(w, ev.history) in (0, 1)


# -- training ----------------------------------------------------------------------

def test_three_of_four_converges_to_three_quarters():
    f = Feature(CTX, ("x",), "a")
    m = train_iis(three_of_four(), [f], patterns=[CTX], vocabulary=Vocabulary(["a", "b"]))
    assert m.diagnostics.converged
    assert m.prob("a", {"c": "x"}) == pytest.approx(0.75, abs=1e-4)
    ll = m.diagnostics.loglik
    assert all(b >= a - 1e-10 for a, b in zip(ll, ll[1:]))


def test_zero_iterations_leave_weights_at_one():
    f = Feature(CTX, ("x",), "a")
    m = train_iis(three_of_four(), [f], max_iters=0, patterns=[CTX])
    assert m.features[0].weight == 1.0
    assert m.prob("a", {"c": "x"}) == pytest.approx(1 / 3)
    assert m.diagnostics.iterations == 0 and not m.diagnostics.converged


def test_feature_that_never_fires_is_rejected():
    f = Feature(CTX, ("y",), "a")
    with pytest.raises(SurfgenError):
        train_iis(three_of_four(), [f], patterns=[CTX])


def full_support_events(rng, n_histories):
    """Every history is seen with every outcome, so the likelihood has a finite maximiser."""
    events = []
    for _ in range(n_histories):
        attrs = frozenset(a for a in ("$x", "$y") if rng.random() < 0.5)
        h = {"p": rng.choice(WORDS), "q": rng.choice(WORDS), ATTRS: attrs}
        events += [Event(h, w, rng.randint(1, 4)) for w in WORDS + [STOP]]
    return events


def expected_counts(m, feats, events):
    out = np.zeros(len(feats))
    for ev in events:
        for j, f in enumerate(feats):
            for w in m.vocabulary.outcomes:
                if f.fires(w, ev.history):
                    out[j] += ev.count * m.prob(w, ev.history)
    return out


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_iis_matches_moments_at_convergence(seed):
    events = full_support_events(random.Random(seed), 4)
    feats = instantiate_features(events, PATTERNS, 2)
    m = train_iis(events, feats, max_iters=2000, tol=1e-6, patterns=PATTERNS)
    assert m.diagnostics.converged
    emp = feature_counts(feats, events)
    assert np.all(np.abs(expected_counts(m, feats, events) - emp) <= 1e-4 * emp)
    ll = m.diagnostics.loglik
    assert all(b >= a - 1e-10 for a, b in zip(ll, ll[1:]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_iis_likelihood_monotone_without_finite_optimum(seed):
    # sparse corpora usually push some weights to infinity; the fit still only improves
    events = random_events(random.Random(seed), 25)
    feats = instantiate_features(events, PATTERNS, 2)
    m = train_iis(events, feats, max_iters=200, patterns=PATTERNS)
    ll = m.diagnostics.loglik
    assert all(b >= a - 1e-10 for a, b in zip(ll, ll[1:]))
    assert ll[-1] == pytest.approx(log_likelihood(m, events), rel=1e-9, abs=1e-9)
    gaps = m.diagnostics.gaps
    assert gaps[-1] < gaps[0]


def test_log_likelihood_uniform_case():
    m = MaxentModel(Vocabulary(["a", "b", "c"]), [])
    assert log_likelihood(m, [Event({}, "a")]) == pytest.approx(math.log(0.25))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_log_likelihood_never_positive(seed):
    m, events = random_model(random.Random(seed))
    assert log_likelihood(m, events) <= 0.0


@pytest.mark.parametrize("workers", [2, 3, 8])
def test_worker_count_does_not_change_the_fit(workers):
    events = random_events(random.Random(11), 200)
    feats = instantiate_features(events, PATTERNS, 2)
    one = train_iis(events, feats, max_iters=30, patterns=PATTERNS)
    many = train_iis(events, feats, max_iters=30, patterns=PATTERNS, workers=workers)
    np.testing.assert_allclose(many.log_weights, one.log_weights, rtol=1e-9, atol=1e-12)
    again = train_iis(events, feats, max_iters=30, patterns=PATTERNS, workers=workers)
    assert np.array_equal(again.log_weights, many.log_weights)


# -- persistence ---------------------------------------------------------------------

@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_save_load_bit_exact(tmp_path_factory, seed):
    rng = random.Random(seed)
    m, events = random_model(rng)
    path = tmp_path_factory.mktemp("m") / "model.txt"
    m.save(path)
    back = MaxentModel.load(path)
    assert back.vocabulary == m.vocabulary
    assert [(f.pattern, f.values, f.outcome) for f in back.features] == \
        [(f.pattern, f.values, f.outcome) for f in m.features]
    assert back.log_weights.tobytes() == m.log_weights.tobytes()
    for ev in events[:5]:
        assert back.log_probs(ev.history).tobytes() == m.log_probs(ev.history).tobytes()


def test_load_rejects_foreign_file(tmp_path):
    path = tmp_path / "x"
    path.write_text("not a model\n")
    with pytest.raises(SurfgenError):
        MaxentModel.load(path)
