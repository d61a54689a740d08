"""Maxent n-gram generator with an attribute-constrained beam search.

Each word is predicted from the two previous words and the set of
attributes still to be mentioned.  The search keeps the ``N`` best
sequences of each length and collects the ones ending in the stop symbol.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Template, is_attribute
from .errors import EmptyAttributeSet, SurfgenError, UnknownAttribute
from .maxent import ATTRS, STOP, Event, MaxentModel, Pattern, instantiate_features, train_iis

BOUNDARY = "*bos*"
PREV, PREV2 = "w-1", "w-2"

SYSTEM = "nlg2"


@dataclass(frozen=True)
class Nlg2Config:
    beam: int = 10
    max_len: int = 30
    cutoff: int = 3

    def __post_init__(self):
        if self.beam < 1 or self.max_len < 1 or self.cutoff < 1:
            raise ValueError("beam, max_len and cutoff must all be >= 1")


@dataclass(frozen=True)
class SequenceCandidate:
    words: tuple[str, ...]
    remaining: frozenset
    log_prob: float
    complete: bool = False


def history(prev: str, prev2: str, remaining: frozenset) -> dict:
    return {PREV: prev, PREV2: prev2, ATTRS: remaining}


def nlg2_patterns() -> list[Pattern]:
    return [
        Pattern("noattr", (), "empty"),
        Pattern("bigram", (PREV,), "member"),
        Pattern("trigram", (PREV, PREV2), "member"),
    ]


def nlg2_events(corpus: Iterable[Template]) -> list[Event]:
    events = []
    for t in corpus:
        remaining = set(t.attributes)
        prev, prev2 = BOUNDARY, BOUNDARY
        for tok in t.tokens + (STOP,):
            events.append(Event(history(prev, prev2, frozenset(remaining)), tok))
            remaining.discard(tok)
            prev, prev2 = tok, prev
    return events


def train_nlg2(corpus: Sequence[Template], cutoff: int = 3, max_iters: int = 100,
               tol: float = 1e-4, workers: int = 1, callback=None) -> MaxentModel:
    if not corpus:
        raise SurfgenError("cannot train on an empty corpus")
    for t in corpus:
        if BOUNDARY in t.tokens:
            raise SurfgenError(f"{BOUNDARY} is reserved and cannot be a corpus word")
    events = nlg2_events(corpus)
    features = instantiate_features(events, nlg2_patterns(), cutoff)
    return train_iis(events, features, max_iters=max_iters, tol=tol,
                     patterns=nlg2_patterns(), cutoff=cutoff,
                     meta={"system": SYSTEM}, workers=workers, callback=callback)


def check_request(model: MaxentModel, attrs) -> frozenset:
    attrs = frozenset(attrs)
    if not attrs:
        raise EmptyAttributeSet("cannot generate from an empty attribute set")
    unknown = [a for a in attrs if a not in model.vocabulary]
    if unknown:
        raise UnknownAttribute(unknown)
    return attrs


def nlg2_search(model: MaxentModel, attrs, cfg: Nlg2Config = Nlg2Config()
                ) -> list[tuple[Template, float]]:
    """Ranked ``(template, probability)`` pairs, best first, at most ``cfg.beam``.

    A sequence ``w_1 .. w_n`` counts the final stop symbol in its length
    ``n <= max_len``; the reported probability is ``1/max_len`` times the
    product of the per-word conditional probabilities.
    """
    attrs = check_request(model, attrs)
    n_keep, max_len = cfg.beam, cfg.max_len
    outcomes = model.vocabulary.outcomes
    attr_flags = [is_attribute(w) for w in outcomes]
    stop = model.vocabulary.stop_index
    cache: dict[tuple, list[float]] = {}

    def log_probs(prev, prev2, remaining):
        key = (prev, prev2, remaining)
        hit = cache.get(key)
        if hit is None:
            hit = cache[key] = model.log_probs(history(prev, prev2, remaining)).tolist()
        return hit

    beam = [SequenceCandidate((), attrs, 0.0)]
    completed: list[SequenceCandidate] = []
    for length in range(1, max_len + 1):
        expansions = []
        for cand in beam:
            prev = cand.words[-1] if cand.words else BOUNDARY
            prev2 = cand.words[-2] if len(cand.words) > 1 else BOUNDARY
            lp = log_probs(prev, prev2, cand.remaining)
            base = cand.log_prob
            # same order as the global cut below, so keeping this candidate's
            # best n_keep extensions cannot lose a global top-n entry
            order = sorted(range(len(lp)), key=lambda o: (-(base + lp[o]), outcomes[o]))
            taken = 0
            for o in order:
                if o == stop:
                    # the first position draws from the vocabulary only
                    if length == 1 or cand.remaining:
                        continue
                    new = SequenceCandidate(cand.words + (STOP,), cand.remaining,
                                            base + lp[o], True)
                else:
                    word = outcomes[o]
                    remaining = cand.remaining
                    if attr_flags[o]:
                        if word not in remaining:
                            continue
                        remaining = remaining - {word}
                    # room for the rest of the attributes plus the stop symbol
                    if len(remaining) + 1 > max_len - length:
                        continue
                    new = SequenceCandidate(cand.words + (word,), remaining,
                                            base + lp[o])
                expansions.append(new)
                taken += 1
                if taken == n_keep:
                    break
        top = heapq.nsmallest(n_keep, expansions, key=lambda c: (-c.log_prob, c.words))
        completed.extend(c for c in top if c.complete)
        beam = [c for c in top if not c.complete]
        if len(completed) >= n_keep or not beam:
            break

    log_prior = -math.log(max_len)
    completed.sort(key=lambda c: (-c.log_prob, c.words))
    return [(Template(c.words[:-1]), math.exp(log_prior + c.log_prob))
            for c in completed[:n_keep]]


def nlg2_generate(model: MaxentModel, attrs, cfg: Nlg2Config = Nlg2Config()) -> Template | None:
    ranked = nlg2_search(model, attrs, cfg)
    return ranked[0][0] if ranked else None
