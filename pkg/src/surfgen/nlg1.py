"""Frequency baseline: emit the most frequent training template for an attribute set."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable

from .corpus import Template, canonical, parse_attribute_set, parse_template_line
from .errors import SurfgenError


class FrequencyTable:
    """``C(phrase, A)`` for every attribute set ``A`` seen in training."""

    def __init__(self, counts: dict[frozenset, Counter] | None = None):
        self.counts: dict[frozenset, Counter] = counts or {}

    def __len__(self):
        return len(self.counts)

    def __contains__(self, attrs):
        return frozenset(attrs) in self.counts

    @property
    def total(self) -> int:
        return sum(sum(c.values()) for c in self.counts.values())

    def save(self, path) -> None:
        rows = []
        for attrs in sorted(self.counts, key=canonical):
            for t, n in sorted(self.counts[attrs].items(), key=lambda kv: kv[0].text):
                rows.append(f"{canonical(attrs)}\t{t.text}\t{n}\n")
        Path(path).write_text("".join(rows), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "FrequencyTable":
        counts: dict[frozenset, Counter] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    key, text, n = line.rstrip("\n").split("\t")
                    t = parse_template_line(text)
                    attrs = parse_attribute_set(key)
                    count = int(n)
                except ValueError as exc:
                    raise SurfgenError(f"{path}:{lineno}: bad frequency row ({exc})") from None
                if t.attributes != attrs or count < 1:
                    raise SurfgenError(f"{path}:{lineno}: inconsistent frequency row")
                counts.setdefault(attrs, Counter())[t] += count
        return cls(counts)


def train_nlg1(corpus: Iterable[Template]) -> FrequencyTable:
    counts: dict[frozenset, Counter] = {}
    n = 0
    for t in corpus:
        counts.setdefault(t.attributes, Counter())[t] += 1
        n += 1
    if n == 0:
        raise SurfgenError("cannot train on an empty corpus")
    return FrequencyTable(counts)


def nlg1_ranked(table: FrequencyTable, attrs) -> list[tuple[Template, int]]:
    seen = table.counts.get(frozenset(attrs))
    if not seen:
        return []
    return sorted(seen.items(), key=lambda kv: (-kv[1], kv[0].text))


def nlg1_generate(table: FrequencyTable, attrs) -> Template | None:
    """Most frequent template for ``attrs``; ties go to the lexicographically
    smaller template text.  ``None`` when the set never occurred in training."""
    ranked = nlg1_ranked(table, attrs)
    return ranked[0][0] if ranked else None
