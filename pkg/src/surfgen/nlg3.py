"""Maxent dependency-tree generator.

Trees grow top-down from a dummy ROOT that emits the top word.  Every head
predicts its left children (closest first) until stop, expanding each child
fully before predicting the next one, and then its right children the same
way.  Each prediction conditions on the head, its parent, the two previous
siblings on that side, the direction and the attributes still to generate.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import DependencyTree, TreeNode, is_attribute
from .errors import AttributeMismatch, SurfgenError
from .maxent import ATTRS, STOP, Event, Feature, MaxentModel, Pattern, instantiate_features, train_iis
from .nlg2 import check_request

ROOT = "*root*"
NO_PARENT = "*none*"
BOUNDARY = "*bos*"
LEFT, RIGHT = "left", "right"
HEAD, SIB1, SIB2, PARENT, DIR = "head", "ch-1", "ch-2", "par", "dir"

SYSTEM = "nlg3"
RESERVED = (ROOT, NO_PARENT, BOUNDARY)


@dataclass(frozen=True)
class Nlg3Config:
    beam: int = 5
    max_len: int = 30
    cutoff: int = 10
    max_children: int = 10

    def __post_init__(self):
        if min(self.beam, self.max_len, self.cutoff, self.max_children) < 1:
            raise ValueError("beam, max_len, cutoff and max_children must all be >= 1")

    @property
    def log_child_prior(self) -> float:
        # uniform over 0..max_children children on one side of a head
        return -math.log(self.max_children + 1)


def history(head, sibs, parent, direction, remaining) -> dict:
    return {
        HEAD: head,
        SIB1: sibs[-1] if sibs else BOUNDARY,
        SIB2: sibs[-2] if len(sibs) > 1 else BOUNDARY,
        PARENT: parent,
        DIR: direction,
        ATTRS: remaining,
    }


def nlg3_patterns() -> list[Pattern]:
    return [
        Pattern("siblings", (SIB1, SIB2, DIR), "member"),
        Pattern("parent_sibling", (SIB1, HEAD, DIR), "member"),
        Pattern("parent_grandparent", (HEAD, PARENT, DIR), "member"),
    ]


def generation_steps(tree: DependencyTree):
    """Yield ``(history, outcome, node)`` in generation order.

    ``node`` is the generated child, or ``None`` for a stop prediction.  The
    final yield of each side is its stop; ROOT emits exactly one child and
    no stop.
    """
    remaining = set(tree.attributes)

    def expand(node: TreeNode, parent: str):
        for direction, kids in ((LEFT, node.left), (RIGHT, node.right)):
            sibs: list[str] = []
            for child in kids:
                yield history(node.token, sibs, parent, direction, frozenset(remaining)), child.token, child
                remaining.discard(child.token)
                yield from expand(child, node.token)
                sibs.append(child.token)
            yield history(node.token, sibs, parent, direction, frozenset(remaining)), STOP, None

    yield history(ROOT, [], NO_PARENT, RIGHT, frozenset(remaining)), tree.root.token, tree.root
    remaining.discard(tree.root.token)
    yield from expand(tree.root, ROOT)


def nlg3_events(treebank: Iterable[DependencyTree]) -> list[Event]:
    return [Event(h, outcome) for tree in treebank for h, outcome, _ in generation_steps(tree)]


def descendant_table(treebank: Iterable[DependencyTree]) -> dict[str, set[str]]:
    """Word -> attributes found in the subtree of some occurrence of that word
    (the word itself included)."""
    table: dict[str, set[str]] = {}

    def visit(node: TreeNode) -> set[str]:
        found = {node.token} if is_attribute(node.token) else set()
        for child in node.left + node.right:
            found |= visit(child)
        table.setdefault(node.token, set()).update(found)
        return found

    for tree in treebank:
        visit(tree.root)
    return table


def descendant_filter(features: Sequence[Feature], treebank: Iterable[DependencyTree]) -> list[Feature]:
    """Drop word features whose attribute never occurs below that word in training.

    Stop-outcome features are kept: stop is not a word and has no subtree.
    """
    table = descendant_table(treebank)
    out = []
    for f in features:
        if f.outcome != STOP and f.pattern.attrs == "member":
            if f.values[-1] not in table.get(f.outcome, ()):
                continue
        out.append(f)
    return out


def train_nlg3(treebank: Sequence[DependencyTree], cutoff: int = 10, max_iters: int = 300,
               tol: float = 1e-4, workers: int = 1, callback=None) -> MaxentModel:
    if not treebank:
        raise SurfgenError("cannot train on an empty treebank")
    for tree in treebank:
        for node in tree.nodes():
            if node.token in RESERVED:
                raise SurfgenError(f"{node.token} is reserved and cannot be a corpus word")
    events = nlg3_events(treebank)
    features = descendant_filter(instantiate_features(events, nlg3_patterns(), cutoff), treebank)
    return train_iis(events, features, max_iters=max_iters, tol=tol,
                     patterns=nlg3_patterns(), cutoff=cutoff,
                     meta={"system": SYSTEM}, workers=workers, callback=callback)


def tree_log_probability(model: MaxentModel, tree: DependencyTree, attrs,
                         cfg: Nlg3Config = Nlg3Config()) -> float:
    if tree.attributes != frozenset(attrs):
        raise AttributeMismatch(
            f"tree mentions {sorted(tree.attributes)} but the request is {sorted(attrs)}")
    for node in tree.nodes():
        if len(node.left) > cfg.max_children or len(node.right) > cfg.max_children:
            return -math.inf
    index = model.vocabulary.index
    total = 0.0
    for h, outcome, node in generation_steps(tree):
        if outcome not in index:
            return -math.inf
        total += float(model.log_probs(h)[index[outcome]])
        if node is not None:
            total += 2 * cfg.log_child_prior
    return total


def tree_probability(model: MaxentModel, tree: DependencyTree, attrs,
                     cfg: Nlg3Config = Nlg3Config()) -> float:
    return math.exp(tree_log_probability(model, tree, attrs, cfg))


# -- search -----------------------------------------------------------------

@dataclass(frozen=True)
class TreeCandidate:
    """A partial tree plus the stack of (node, side) positions still to expand.

    Node ``i`` has token ``tokens[i]`` and parent ``parents[i]`` (-1 for the
    top word).  The top of ``stack`` is the single active prediction site;
    node ``-1`` stands for ROOT.
    """

    tokens: tuple[str, ...]
    parents: tuple[int, ...]
    left: tuple[tuple[int, ...], ...]
    right: tuple[tuple[int, ...], ...]
    stack: tuple[tuple[int, str], ...]
    remaining: frozenset
    log_prob: float
    steps: tuple[str, ...] = ()

    @property
    def complete(self) -> bool:
        return not self.stack

    @property
    def size(self) -> int:
        return len(self.tokens)

    def to_tree(self) -> DependencyTree:
        def build(i):
            return TreeNode(self.tokens[i], tuple(build(c) for c in self.left[i]),
                            tuple(build(c) for c in self.right[i]))
        return DependencyTree(build(0))


def _root_candidate(attrs: frozenset) -> TreeCandidate:
    return TreeCandidate((), (), (), (), ((-1, RIGHT),), attrs, 0.0)


def _site(cand: TreeCandidate):
    node, direction = cand.stack[-1]
    if node < 0:
        return ROOT, (), NO_PARENT, RIGHT
    kids = cand.left[node] if direction == LEFT else cand.right[node]
    parent = cand.parents[node]
    return (cand.tokens[node], [cand.tokens[k] for k in kids],
            ROOT if parent < 0 else cand.tokens[parent], direction)


def _extend(cand: TreeCandidate, word: str | None, log_prob: float,
            remaining: frozenset) -> TreeCandidate:
    node, direction = cand.stack[-1]
    rest = cand.stack[:-1]
    if word is None:
        stack = rest + ((node, RIGHT),) if direction == LEFT else rest
        return TreeCandidate(cand.tokens, cand.parents, cand.left, cand.right, stack,
                             remaining, log_prob, cand.steps + (STOP,))
    new = len(cand.tokens)
    left, right = list(cand.left) + [()], list(cand.right) + [()]
    if node >= 0:
        if direction == LEFT:
            left[node] = left[node] + (new,)
        else:
            right[node] = right[node] + (new,)
        stack = cand.stack + ((new, LEFT),)
    else:
        stack = rest + ((new, LEFT),)
    return TreeCandidate(cand.tokens + (word,), cand.parents + (node,), tuple(left), tuple(right),
                         stack, remaining, log_prob, cand.steps + (word,))


def nlg3_search(model: MaxentModel, attrs, cfg: Nlg3Config = Nlg3Config()
                ) -> list[tuple[DependencyTree, float]]:
    """Ranked ``(tree, probability)`` pairs, best first, at most ``cfg.beam``.

    Every round advances each of the ``N`` best partial trees by one
    prediction.  Trees that mention an attribute twice (or one not
    requested), or finish without all requested attributes, are dropped.
    A tree holding ``max_len`` words may only predict stops, so it still
    completes.  The search ends with ``N`` completed trees or an empty beam.
    """
    attrs = check_request(model, attrs)
    n_keep = cfg.beam
    outcomes = model.vocabulary.outcomes
    attr_flags = [is_attribute(w) for w in outcomes]
    stop = model.vocabulary.stop_index
    # every new node carries the child-count prior of both its sides
    bonus = [2 * cfg.log_child_prior] * len(outcomes)
    bonus[stop] = 0.0
    cache: dict[tuple, list[float]] = {}

    beam = [_root_candidate(attrs)]
    completed: list[TreeCandidate] = []
    while beam:
        expansions = []
        for cand in beam:
            head, sibs, parent, direction = _site(cand)
            key = (head, tuple(sibs[-2:]), parent, direction, cand.remaining)
            lp = cache.get(key)
            if lp is None:
                lp = cache[key] = model.log_probs(
                    history(head, sibs, parent, direction, cand.remaining)).tolist()
            base = cand.log_prob
            at_root = head == ROOT
            full_side = len(sibs) >= cfg.max_children
            scores = [base + lp[o] + bonus[o] for o in range(len(lp))]
            order = sorted(range(len(lp)), key=lambda o: (-scores[o], outcomes[o]))
            taken = 0
            for o in order:
                if o == stop:
                    if at_root:
                        continue
                    new = _extend(cand, None, scores[o], cand.remaining)
                    if new.complete and new.remaining:
                        continue
                else:
                    if full_side or cand.size >= cfg.max_len:
                        continue
                    word = outcomes[o]
                    remaining = cand.remaining
                    if attr_flags[o]:
                        if word not in remaining:
                            continue
                        remaining = remaining - {word}
                    if len(remaining) > cfg.max_len - cand.size - 1:
                        continue
                    new = _extend(cand, word, scores[o], remaining)
                expansions.append(new)
                taken += 1
                if taken == n_keep:
                    break
        top = heapq.nsmallest(n_keep, expansions, key=lambda c: (-c.log_prob, c.steps))
        completed.extend(c for c in top if c.complete)
        beam = [c for c in top if not c.complete]
        if len(completed) >= n_keep:
            break

    results = []
    for c in completed:
        tree = c.to_tree()
        results.append((c.log_prob, tree.root.surface(), tree.root.bracketed(), tree))
    results.sort(key=lambda r: (-r[0], r[1], r[2]))
    return [(tree, math.exp(lp)) for lp, _, _, tree in results[:n_keep]]


def nlg3_generate(model: MaxentModel, attrs, cfg: Nlg3Config = Nlg3Config()):
    ranked = nlg3_search(model, attrs, cfg)
    return ranked[0][0].linearize() if ranked else None
