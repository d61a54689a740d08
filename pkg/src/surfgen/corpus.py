"""Templates, attribute sets, dependency trees and the slot-filling step.

A template is a pre-tokenized phrase in which every token starting with
``$`` names an attribute, e.g.::

    $trip flights from $city-fr to $city-to

Treebank records are JSON objects with a ``tokens`` array in surface order
and a ``heads`` array holding the index of each token's parent (``-1`` for
the root).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import (
    Cycle,
    CorpusError,
    DuplicateAttribute,
    EmptyLine,
    IndexOutOfRange,
    MissingBinding,
    MultipleRoots,
    NonProjective,
)

ATTRIBUTE_PREFIX = "$"

AttributeSet = frozenset  # frozenset[str] of `$`-prefixed names


def is_attribute(token: str) -> bool:
    return token.startswith(ATTRIBUTE_PREFIX)


def _check_token(token: str) -> None:
    if not token or any(ch.isspace() for ch in token):
        raise CorpusError(f"invalid token {token!r}")


def make_attribute_set(names: Iterable[str]) -> frozenset[str]:
    attrs = frozenset(names)
    for name in attrs:
        _check_token(name)
        if not is_attribute(name):
            raise CorpusError(f"attribute names must start with '$': {name!r}")
    return attrs


def canonical(attrs: Iterable[str]) -> str:
    """Sorted, comma-joined form used as a key in files and on the command line."""
    return ",".join(sorted(attrs))


def parse_attribute_set(text: str) -> frozenset[str]:
    return make_attribute_set(p.strip() for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class Template:
    tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.tokens:
            raise EmptyLine("template has no tokens")
        seen = set()
        for tok in self.tokens:
            _check_token(tok)
            if is_attribute(tok):
                if tok in seen:
                    raise DuplicateAttribute(tok, " ".join(self.tokens))
                seen.add(tok)

    @classmethod
    def of(cls, tokens: Iterable[str]) -> "Template":
        return cls(tuple(tokens))

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(t for t in self.tokens if is_attribute(t))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)

    def __len__(self):
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def __str__(self):
        return self.text


def parse_template_line(line: str) -> Template:
    tokens = line.split()
    if not tokens:
        raise EmptyLine("empty template line")
    return Template(tuple(tokens))


def extract_attribute_set(template: Template) -> frozenset[str]:
    return template.attributes


def fill_slots(template: Template, bindings: Mapping[str, str]) -> str:
    out = []
    for tok in template.tokens:
        if is_attribute(tok):
            if tok not in bindings:
                raise MissingBinding(tok)
            out.append(bindings[tok])
        else:
            out.append(tok)
    return " ".join(out)


# -- dependency trees -------------------------------------------------------

@dataclass(frozen=True)
class TreeNode:
    """A head word with its left and right dependents.

    Both child tuples are ordered closest-to-head first, so ``left[0]`` is the
    word immediately left of the head in the surface string.
    """

    token: str
    left: tuple["TreeNode", ...] = ()
    right: tuple["TreeNode", ...] = ()

    def surface(self) -> list[str]:
        out = []
        for child in reversed(self.left):
            out.extend(child.surface())
        out.append(self.token)
        for child in self.right:
            out.extend(child.surface())
        return out

    @property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.left) + sum(c.size for c in self.right)

    def walk(self) -> Iterator["TreeNode"]:
        yield self
        for child in self.left:
            yield from child.walk()
        for child in self.right:
            yield from child.walk()

    def bracketed(self) -> str:
        if not self.left and not self.right:
            return self.token
        parts = [c.bracketed() + "-" for c in reversed(self.left)]
        parts.append("*" + self.token)
        parts.extend(c.bracketed() + "+" for c in self.right)
        return "(" + " ".join(parts) + ")"


@dataclass(frozen=True)
class DependencyTree:
    root: TreeNode

    def __post_init__(self):
        seen = set()
        for node in self.root.walk():
            _check_token(node.token)
            if is_attribute(node.token):
                if node.token in seen:
                    raise DuplicateAttribute(node.token, " ".join(self.root.surface()))
                seen.add(node.token)

    def linearize(self) -> Template:
        return Template(tuple(self.root.surface()))

    def nodes(self) -> Iterator[TreeNode]:
        return self.root.walk()

    @property
    def size(self) -> int:
        return self.root.size

    @property
    def attributes(self) -> frozenset[str]:
        return frozenset(n.token for n in self.nodes() if is_attribute(n.token))

    def to_record(self) -> dict:
        """Inverse of :func:`tree_from_heads`: ``{"tokens": [...], "heads": [...]}``."""
        n = self.size
        tokens: list[str] = [""] * n
        heads = [-1] * n

        def visit(node, parent, start):
            me = start + sum(c.size for c in node.left)
            tokens[me], heads[me] = node.token, parent
            pos = start
            for child in reversed(node.left):
                visit(child, me, pos)
                pos += child.size
            pos = me + 1
            for child in node.right:
                visit(child, me, pos)
                pos += child.size

        visit(self.root, -1, 0)
        return {"tokens": tokens, "heads": heads}

    def __str__(self):
        return self.root.bracketed()


def tree_from_heads(tokens: list[str], heads: list[int]) -> DependencyTree:
    n = len(tokens)
    if n == 0:
        raise EmptyLine("treebank record has no tokens")
    if len(heads) != n:
        raise IndexOutOfRange(f"{len(heads)} heads for {n} tokens")
    for i, h in enumerate(heads):
        if not isinstance(h, int) or isinstance(h, bool) or not -1 <= h < n:
            raise IndexOutOfRange(f"head {h!r} of token {i} outside [-1, {n})")
    roots = [i for i, h in enumerate(heads) if h == -1]
    if len(roots) > 1:
        raise MultipleRoots(f"tokens {roots} all have head -1")
    for i in range(n):
        j, steps = i, 0
        while heads[j] != -1:
            j = heads[j]
            steps += 1
            if steps > n:
                raise Cycle(f"token {i} does not reach the root")
    if not roots:
        raise Cycle("no root token")

    children: list[list[int]] = [[] for _ in range(n)]
    for i, h in enumerate(heads):
        if h >= 0:
            children[h].append(i)

    def build(i: int) -> TreeNode:
        left = sorted((c for c in children[i] if c < i), reverse=True)
        right = sorted(c for c in children[i] if c > i)
        return TreeNode(tokens[i], tuple(build(c) for c in left), tuple(build(c) for c in right))

    tree = DependencyTree(build(roots[0]))
    if tree.root.surface() != list(tokens):
        raise NonProjective("tree is not projective: " + " ".join(tokens))
    return tree


def parse_tree_record(record: str) -> DependencyTree:
    try:
        obj = json.loads(record)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"bad treebank record: {exc}") from None
    if not isinstance(obj, dict) or "tokens" not in obj or "heads" not in obj:
        raise CorpusError("treebank record needs 'tokens' and 'heads'")
    tokens = obj["tokens"]
    if not all(isinstance(t, str) for t in tokens):
        raise CorpusError("tokens must be strings")
    return tree_from_heads(list(tokens), list(obj["heads"]))


def format_tree_record(tree: DependencyTree) -> str:
    return json.dumps(tree.to_record(), ensure_ascii=False, separators=(", ", ": "))


def linearize(tree: DependencyTree) -> Template:
    return tree.linearize()


# -- files ------------------------------------------------------------------

def _lines(path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if line.strip():
                yield lineno, line.rstrip("\n")


def _located(path, lineno, exc):
    exc.args = (f"{path}:{lineno}: {exc}",)
    return exc


def read_templates(path) -> list[Template]:
    out = []
    for lineno, line in _lines(path):
        try:
            out.append(parse_template_line(line))
        except CorpusError as exc:
            raise _located(path, lineno, exc)
    return out


def write_templates(path, templates: Iterable[Template]) -> None:
    Path(path).write_text("".join(t.text + "\n" for t in templates), encoding="utf-8")


def read_treebank(path) -> list[DependencyTree]:
    out = []
    for lineno, line in _lines(path):
        try:
            out.append(parse_tree_record(line))
        except CorpusError as exc:
            raise _located(path, lineno, exc)
    return out


def write_treebank(path, trees: Iterable[DependencyTree]) -> None:
    Path(path).write_text("".join(format_tree_record(t) + "\n" for t in trees), encoding="utf-8")


def parse_bindings(lines: Iterable[str]) -> dict[str, str]:
    bindings = {}
    for line in lines:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        if "\t" not in line:
            raise CorpusError(f"binding line needs a tab: {line!r}")
        name, value = line.split("\t", 1)
        name = name.strip()
        if not is_attribute(name) or not value.strip():
            raise CorpusError(f"bad binding line: {line!r}")
        bindings[name] = value.strip()
    return bindings


def read_bindings(path) -> dict[str, str]:
    with open(path, encoding="utf-8") as fh:
        return parse_bindings(fh)
