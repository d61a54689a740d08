"""Seeded synthetic air-travel corpus with gold dependency trees.

A phrase is ``PRE* HEAD POST*``: optional single-token pre-modifiers in a
fixed order, a head noun, and one post-modifier fragment per remaining
attribute.  Post fragments are ordered by a per-attribute rank plus Gaussian
noise, so the canonical order dominates but other orders occur.  The
grammar's language for an attribute set is every phrase of that shape with
the post fragments in *any* order; :meth:`SynthGrammar.accepts` decides it.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import NamedTuple

from .corpus import DependencyTree, Template, TreeNode, canonical


@dataclass(frozen=True)
class Fragment:
    """Tokens of one attribute realization with local heads (-1 = attaches to the phrase head)."""

    tokens: tuple[str, ...]
    heads: tuple[int, ...]
    weight: float = 1.0

    def subtree(self) -> TreeNode:
        (root,) = [i for i, h in enumerate(self.heads) if h == -1]

        def build(i):
            kids = [k for k, h in enumerate(self.heads) if h == i]
            return TreeNode(self.tokens[i],
                            tuple(build(k) for k in sorted((k for k in kids if k < i), reverse=True)),
                            tuple(build(k) for k in kids if k > i))
        return build(root)


def _frag(text: str, heads, weight=1.0) -> Fragment:
    return Fragment(tuple(text.split()), tuple(heads), weight)


@dataclass(frozen=True)
class SynthGrammar:
    # attribute -> inclusion probability
    attributes: dict[str, float]
    # attribute -> post-head fragments
    post: dict[str, tuple[Fragment, ...]]
    # attribute -> probability of realizing it as a pre-modifier instead
    pre: dict[str, float]
    # post-fragment ordering rank; noise scale decides how often orders swap
    order: dict[str, float]
    heads: tuple[tuple[str, float], ...] = (("flights", 0.85), ("flight", 0.15))
    order_noise: float = 0.35
    pre_order: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for a in self.attributes:
            if a not in self.post and a not in self.pre:
                raise ValueError(f"attribute {a} has no realization")
            if self.pre.get(a, 0.0) < 1.0 and a not in self.post:
                raise ValueError(f"attribute {a} needs a post fragment")

    @classmethod
    def default(cls) -> "SynthGrammar":
        """Ten flight attributes; $city-fr and $city-to dominate as in real queries."""
        return cls(
            attributes={
                "$city-fr": 0.9, "$city-to": 0.9, "$time-dep": 0.3, "$date-dep": 0.3,
                "$air": 0.25, "$trip": 0.1, "$time-arr": 0.1, "$city-stop": 0.08,
                "$price": 0.08, "$fltnum": 0.05,
            },
            post={
                "$city-fr": (_frag("from $city-fr", [-1, 0], 0.8), _frag("leaving $city-fr", [-1, 0], 0.2)),
                "$city-to": (_frag("to $city-to", [-1, 0], 0.85), _frag("going to $city-to", [-1, 0, 1], 0.15)),
                "$time-dep": (_frag("leaving at $time-dep", [-1, 0, 1], 0.6), _frag("at $time-dep", [-1, 0], 0.4)),
                "$date-dep": (_frag("on $date-dep", [-1, 0]),),
                "$time-arr": (_frag("arriving at $time-arr", [-1, 0, 1], 0.7),
                              _frag("arriving by $time-arr", [-1, 0, 1], 0.3)),
                "$city-stop": (_frag("stopping in $city-stop", [-1, 0, 1], 0.6),
                               _frag("with a stop in $city-stop", [-1, 2, 0, 2, 3], 0.4)),
                "$price": (_frag("under $price", [-1, 0], 0.7), _frag("for less than $price", [-1, 0, 1, 2], 0.3)),
                "$fltnum": (_frag("number $fltnum", [-1, 0]),),
                "$air": (_frag("on $air", [-1, 0]),),
            },
            pre={"$trip": 1.0, "$air": 0.7, "$time-dep": 0.3},
            order={"$city-fr": 1, "$city-to": 2, "$air": 3, "$time-dep": 4, "$date-dep": 5,
                   "$time-arr": 6, "$city-stop": 7, "$price": 8, "$fltnum": 9},
            pre_order=("$trip", "$time-dep", "$air"),
        )

    # -- sampling ----------------------------------------------------------

    def sample_attributes(self, rng: random.Random) -> frozenset:
        while True:
            attrs = frozenset(a for a, p in self.attributes.items() if rng.random() < p)
            if attrs:
                return attrs

    def realize(self, attrs: frozenset, rng: random.Random) -> DependencyTree:
        pre = [a for a in self.pre_order if a in attrs and rng.random() < self.pre.get(a, 0.0)]
        post = [a for a in sorted(attrs) if a not in pre]
        keys = {a: self.order[a] + rng.gauss(0.0, self.order_noise) for a in post}
        post.sort(key=lambda a: (keys[a], a))
        head = _weighted(rng, [(h, w) for h, w in self.heads])
        right = tuple(_weighted(rng, [(f, f.weight) for f in self.post[a]]).subtree() for a in post)
        left = tuple(TreeNode(a) for a in reversed(pre))
        return DependencyTree(TreeNode(head, left, right))

    # -- membership ----------------------------------------------------------

    def accepts(self, template: Template) -> bool:
        tokens = template.tokens
        attrs = template.attributes
        if not attrs <= set(self.attributes):
            return False
        head_words = {h for h, _ in self.heads}
        for i, tok in enumerate(tokens):
            if tok not in head_words:
                continue
            pre = list(tokens[:i])
            if pre != [a for a in self.pre_order if a in pre] or any(a not in self.pre for a in pre):
                continue
            if self._match_post(tokens[i + 1:], attrs - set(pre)):
                return True
        return False

    def _match_post(self, tokens: tuple, todo: frozenset) -> bool:
        if not tokens:
            return not todo
        for a in todo:
            for f in self.post.get(a, ()):
                n = len(f.tokens)
                if tokens[:n] == f.tokens and self._match_post(tokens[n:], todo - {a}):
                    return True
        return False


def _weighted(rng: random.Random, items):
    total = sum(w for _, w in items)
    x = rng.random() * total
    for item, w in items:
        x -= w
        if x < 0:
            return item
    return items[-1][0]


class SynthCorpus(NamedTuple):
    train: list[Template]
    treebank: list[DependencyTree]
    test: list[Template]
    held_out: frozenset  # attribute sets withheld from training


def synth_corpus(grammar: SynthGrammar, seed: int, n: int, n_test: int | None = None,
                 n_held_out: int = 12, held_out_share: float = 0.1) -> SynthCorpus:
    """Sample ``n`` training trees (and their templates) and ``n_test`` test templates.

    ``n_held_out`` attribute sets of size >= 3 never occur in training; they
    make up about ``held_out_share`` of the test data, the rest being drawn
    like the training data (so rare combinations can be novel as well).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n_test is None:
        n_test = max(1, n // 4)
    rng = random.Random(seed)
    held: list[frozenset] = []
    seen: set = set()
    for _ in range(10_000):
        if len(held) >= n_held_out:
            break
        attrs = grammar.sample_attributes(rng)
        if len(attrs) >= 3 and attrs not in seen:
            seen.add(attrs)
            held.append(attrs)
    held.sort(key=canonical)
    held_set = frozenset(held)

    treebank = []
    while len(treebank) < n:
        attrs = grammar.sample_attributes(rng)
        if attrs in held_set:
            continue
        treebank.append(grammar.realize(attrs, rng))
    train = [t.linearize() for t in treebank]

    test = []
    for _ in range(n_test):
        if held and rng.random() < held_out_share:
            attrs = held[rng.randrange(len(held))]
        else:
            attrs = grammar.sample_attributes(rng)
        test.append(grammar.realize(attrs, rng).linearize())
    return SynthCorpus(train, treebank, test, held_set)
